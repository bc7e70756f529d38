#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "crimetype/centers.hpp"
#include "crimetype/config.hpp"
#include "crimetype/error.hpp"
#include "crimetype/evaluation.hpp"
#include "crimetype/features.hpp"
#include "crimetype/kde.hpp"
#include "crimetype/kselect.hpp"
#include "crimetype/models.hpp"
#include "crimetype/pca.hpp"

namespace crimetype {

std::string_view version_string();

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Carries the kind of the original failure so exit codes survive the added phase context.
class PipelineError : public Error {
 public:
  PipelineError(std::string phase, const Error& cause)
      : Error(cause.kind(), "phase '" + phase + "' failed: " + cause.what()), phase_(std::move(phase)) {}
  PipelineError(std::string phase, const std::exception& cause)
      : Error(ErrorKind::State, "phase '" + phase + "' failed: " + cause.what()), phase_(std::move(phase)) {}
  const std::string& phase() const noexcept { return phase_; }

 private:
  std::string phase_;
};

struct PhaseTiming {
  std::string name;
  double seconds = 0;
};

/// Runs named phases in order, recording wall time and the phase that was active when something threw.
class PhaseLog {
 public:
  template <typename F>
  decltype(auto) run(std::string name, F&& fn) {
    current_ = name;
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish(std::move(name), start);
    } else {
      decltype(auto) result = fn();
      finish(std::move(name), start);
      return result;
    }
  }
  const std::vector<PhaseTiming>& timings() const noexcept { return timings_; }
  const std::string& current() const noexcept { return current_; }

 private:
  void finish(std::string name, std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    timings_.push_back({std::move(name), d.count()});
    current_.clear();
  }
  std::vector<PhaseTiming> timings_;
  std::string current_;
};

struct KSelection {
  int k = 0;
  KSelectMethod method = KSelectMethod::GapMax;
  std::size_t points_used = 0;
  bool subsampled = false;
  std::optional<ElbowResult> elbow;
  std::optional<GapReport> gap;
};

/// Deterministic subsample of at most max_points, original order preserved. 0 disables the cap.
std::vector<Point2> kselect_sample(std::span<const Point2> points, std::size_t max_points, std::uint64_t seed);

/// Elbow and gap reports over the (sub-sampled) points, and the k chosen by the configured method.
KSelection select_cluster_count(std::span<const Point2> points, const PipelineConfig& config);

/// Everything fitted from the training partition alone.
struct FittedPipeline {
  KSelection kselect;
  StackedCenters centers;
  DensityGrid density;
  FeatureSchema schema;
  FeatureContext context;
  Standardization standardization;
  PcaModel pca;  // fitted on the standardized training features
  std::unique_ptr<Classifier> model;
};

FittedPipeline fit_pipeline(std::span<const CrimeRecord> train, const PipelineConfig& config, PhaseLog& log);

/// The matrix the model consumes: features, standardized with training statistics, then projected if configured.
FeatureMatrix model_inputs(const FittedPipeline& fitted, std::span<const CrimeRecord> records,
                           const PipelineConfig& config);

struct TestOutcome {
  ProbabilityMatrix probabilities;
  std::vector<int> labels;
  EvaluationReport report;
  SmoothingResult smoothing;
  std::optional<ImportanceRanking> importance;  // tree-based models only
};

TestOutcome evaluate_pipeline(const FittedPipeline& fitted, std::span<const CrimeRecord> test,
                              const PipelineConfig& config, PhaseLog& log);

struct ArtifactEntry {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string version;
  std::filesystem::path run_dir;
  nlohmann::json config;
  std::string status = "ok";
  std::string failed_phase;
  std::string error;
  std::vector<PhaseTiming> phases;
  std::vector<ArtifactEntry> artifacts;  // sorted by path
  nlohmann::json summary = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const RunManifest& m);

/// Resolves the run directory: output_dir, else $CRIMETYPE_OUTPUT_DIR, else ./runs; then run_name or a UTC stamp.
std::filesystem::path resolve_run_dir(const PipelineConfig& config);

/// Full workflow. On a phase failure the artifacts written so far and a manifest marked
/// "failed" are left on disk, then PipelineError is thrown.
RunManifest run_pipeline(const PipelineConfig& config);

}  // namespace crimetype
