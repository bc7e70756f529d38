#include "crimetype/labels.hpp"

#include <cctype>

#include "crimetype/error.hpp"

namespace crimetype {

namespace {

constexpr std::array<std::string_view, kLabelCount> kNames = {
    "Aggravated Assault Firearm",
    "Aggravated Assault No Firearm",
    "All Other Offenses",
    "Arson",
    "Burglary Non-Residential",
    "Burglary Residential",
    "Driving Under Influence",
    "Disorderly Conduct",
    "Embezzlement",
    "Forgery and Counterfeiting",
    "Fraud",
    "Gambling Violations",
    "Homicide - Criminal",
    "Homicide - Gross Negligence",
    "Homicide - Justifiable",
    "Liquor Law Violations",
    "Motor Vehicle Theft",
    "Narcotic / Drug Law Violations",
    "Offenses Against Family and Children",
    "Other Assaults",
    "Other Sex Offenses (Not Commercialized)",
    "Prostitution and Commercialized Vice",
    "Public Drunkenness",
    "Rape",
    "Receiving Stolen Property",
    "Recovered Stolen Motor Vehicle",
    "Robbery Firearm",
    "Robbery No Firearm",
    "Theft from Vehicle",
    "Thefts",
    "Vagrancy/Loitering",
    "Vandalism/Criminal Mischief",
    "Weapon Violations",
};

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view ClassLabel::name() const { return kNames[label_from_index(index).index]; }

const std::array<std::string_view, kLabelCount>& label_names() { return kNames; }

ClassLabel encode_label(std::string_view text) {
  const std::string key = normalize(text);
  for (int i = 0; i < kLabelCount; ++i) {
    if (normalize(kNames[i]) == key) return ClassLabel{i};
  }
  throw UnknownLabelError(std::string(text));
}

ClassLabel label_from_index(int index) {
  if (index < 0 || index >= kLabelCount) {
    throw LabelError("label index " + std::to_string(index) + " outside [0, " +
                     std::to_string(kLabelCount) + ")");
  }
  return ClassLabel{index};
}

}  // namespace crimetype
