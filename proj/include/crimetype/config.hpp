#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crimetype/centers.hpp"
#include "crimetype/ingest.hpp"
#include "crimetype/models.hpp"

namespace crimetype {

enum class KSelectMethod { GapMax, GapOneSd, Elbow, Fixed };

std::string_view to_string(KSelectMethod m);
KSelectMethod parse_kselect_method(std::string_view text);

struct KSelectConfig {
  KSelectMethod method = KSelectMethod::GapMax;
  int fixed_k = 0;
  int kmax = 16;
  int B = 10;
  std::size_t max_points = 2000;  // k-selection runs on a seeded subsample above this size
  int n_init = 10;
  int max_iter = 300;
};

struct PipelineConfig {
  std::filesystem::path input;
  CsvColumns columns;
  BoundingBox bounds;
  double split_ratio = 0.8;
  std::optional<int> split_year;  // when set, test = this calendar year onwards and split_ratio is unused
  KSelectConfig k_selection;
  ShortYearPolicy short_years = ShortYearPolicy::Skip;
  ModelKind model = ModelKind::RandomForest;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::vector<std::string> features;  // empty = every named feature
  std::size_t pca_components = 0;     // 0 = train on the standardized features directly
  std::optional<std::vector<double>> smoothing_grid;
  int kde_grid = 100;
  std::optional<double> kde_bandwidth;
  int class_count = kLabelCount;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path output_dir;  // empty = $CRIMETYPE_OUTPUT_DIR, then ./runs
  std::string run_name;              // empty = timestamped

  /// Throws ConfigurationError for inconsistent settings and IoError when the input is missing.
  void validate(bool require_input = true) const;
};

/// Unknown keys are rejected so that typos surface as configuration errors.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const PipelineConfig& c);

}  // namespace crimetype
