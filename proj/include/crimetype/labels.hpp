#pragma once

#include <array>
#include <string>
#include <string_view>

namespace crimetype {

inline constexpr int kLabelCount = 33;

/// Crime category as an index into the canonical label table.
struct ClassLabel {
  int index = 0;

  std::string_view name() const;

  friend auto operator<=>(const ClassLabel&, const ClassLabel&) = default;
};

const std::array<std::string_view, kLabelCount>& label_names();

/// Looks up a label by text. Matching ignores case, surrounding whitespace and
/// repeated inner whitespace. Throws UnknownLabelError.
ClassLabel encode_label(std::string_view text);

/// Throws LabelError when index is outside [0, kLabelCount).
ClassLabel label_from_index(int index);

}  // namespace crimetype
