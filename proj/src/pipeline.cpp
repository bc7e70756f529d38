#include "crimetype/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>

#include <openssl/evp.h>

#include "crimetype/csv.hpp"
#include "crimetype/random.hpp"

#ifndef CRIMETYPE_VERSION
#define CRIMETYPE_VERSION "0.0.0"
#endif

namespace crimetype {

using nlohmann::json;

std::string_view version_string() { return CRIMETYPE_VERSION; }

namespace {

std::string to_hex(const unsigned char* data, unsigned len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xF]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw StateError("SHA-256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1) throw StateError("SHA-256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx_, md, &len) != 1) throw StateError("SHA-256 final failed");
    return to_hex(md, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::vector<Point2> kselect_sample(std::span<const Point2> points, std::size_t max_points, std::uint64_t seed) {
  if (max_points == 0 || points.size() <= max_points) return {points.begin(), points.end()};
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < max_points; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  std::vector<Point2> out;
  out.reserve(max_points);
  for (auto i : idx) out.push_back(points[i]);
  return out;
}

KSelection select_cluster_count(std::span<const Point2> points, const PipelineConfig& config) {
  const auto& ks = config.k_selection;
  KSelection out;
  out.method = ks.method;
  const auto sample = kselect_sample(points, ks.max_points, derive_seed(config.seed, "kselect_sample", 0));
  out.points_used = sample.size();
  out.subsampled = sample.size() < points.size();

  KMeansOptions opts;
  opts.n_init = ks.n_init;
  opts.max_iter = ks.max_iter;
  opts.threads = config.threads;
  opts.seed = derive_seed(config.seed, "kselect", 0);

  // Both reports are always produced; the method only decides which one picks k.
  const int kmax = std::min<int>(ks.kmax, static_cast<int>(count_distinct(sample)));
  if (kmax >= 3) out.elbow = elbow_select(sample, kmax, opts);
  if (kmax >= 2) out.gap = gap_statistic(sample, kmax, ks.B, opts);

  switch (ks.method) {
    case KSelectMethod::Fixed: out.k = ks.fixed_k; break;
    case KSelectMethod::Elbow:
      if (!out.elbow) throw InsufficientDataError("elbow selection needs at least 3 distinct training points");
      out.k = out.elbow->k_elbow;
      break;
    case KSelectMethod::GapMax:
    case KSelectMethod::GapOneSd:
      if (!out.gap) throw InsufficientDataError("gap statistic needs at least 2 distinct training points");
      out.k = ks.method == KSelectMethod::GapMax ? out.gap->chosen_k_max : out.gap->chosen_k_onesd;
      break;
  }
  return out;
}

namespace {

FeatureSchema config_schema(const PipelineConfig& config) {
  return config.features.empty() ? FeatureSchema::all_features() : FeatureSchema(config.features);
}

std::vector<Point2> record_points(std::span<const CrimeRecord> records) {
  std::vector<Point2> pts;
  pts.reserve(records.size());
  for (const auto& r : records) pts.push_back({r.x, r.y});
  return pts;
}

bool tree_based(ModelKind kind) { return kind == ModelKind::DecisionTree || kind == ModelKind::RandomForest; }

}  // namespace

FittedPipeline fit_pipeline(std::span<const CrimeRecord> train, const PipelineConfig& config, PhaseLog& log) {
  FittedPipeline f;
  const auto points = record_points(train);

  f.kselect = log.run("k_selection", [&] { return select_cluster_count(points, config); });

  f.centers = log.run("clustering", [&] {
    KMeansOptions opts;
    opts.n_init = config.k_selection.n_init;
    opts.max_iter = config.k_selection.max_iter;
    opts.threads = config.threads;
    opts.seed = derive_seed(config.seed, "yearly_centers", 0);
    return stack_yearly_centers(train, f.kselect.k, opts, config.short_years);
  });

  f.density = log.run("density", [&] {
    return kde_density_grid(points, config.kde_bandwidth, config.kde_grid, config.kde_grid);
  });

  FeatureMatrix train_matrix = log.run("features", [&] {
    f.schema = config_schema(config);
    f.context = FeatureContext::fit(train);
    f.context.centers = f.centers.points();
    return build_feature_matrix(train, f.schema, f.context);
  });

  train_matrix = log.run("standardize", [&] {
    f.standardization = fit_standardization(train_matrix);
    return apply_standardization(std::move(train_matrix), f.standardization);
  });

  log.run("pca", [&] {
    f.pca = pca_fit(train_matrix);
    if (config.pca_components > 0) train_matrix = pca_transform(f.pca, train_matrix, config.pca_components);
  });

  f.model = log.run("train", [&] {
    TrainOptions opts;
    opts.seed = derive_seed(config.seed, "model", 0);
    opts.threads = config.threads;
    opts.class_count = config.class_count;
    return train_classifier(config.model, train_matrix, config.hyperparameters, opts);
  });
  return f;
}

FeatureMatrix model_inputs(const FittedPipeline& fitted, std::span<const CrimeRecord> records,
                           const PipelineConfig& config) {
  FeatureMatrix m = apply_standardization(build_feature_matrix(records, fitted.schema, fitted.context),
                                          fitted.standardization);
  if (config.pca_components > 0) m = pca_transform(fitted.pca, m, config.pca_components);
  return m;
}

TestOutcome evaluate_pipeline(const FittedPipeline& fitted, std::span<const CrimeRecord> test,
                              const PipelineConfig& config, PhaseLog& log) {
  TestOutcome out;
  log.run("evaluate", [&] {
    const FeatureMatrix m = model_inputs(fitted, test, config);
    out.probabilities = fitted.model->predict_proba(m, config.threads);
    out.labels = m.labels;
    out.report = evaluate(out.probabilities, out.labels, std::string(to_string(config.model)));
  });
  log.run("smoothing", [&] {
    const auto grid = config.smoothing_grid ? *config.smoothing_grid : default_smoothing_grid();
    out.smoothing = smoothing_search(out.probabilities, out.labels, grid);
  });
  if (tree_based(config.model)) {
    log.run("importance", [&] { out.importance = feature_importance(*fitted.model); });
  }
  return out;
}

void to_json(json& j, const RunManifest& m) {
  json phases = json::array();
  for (const auto& p : m.phases) phases.push_back({{"name", p.name}, {"seconds", p.seconds}});
  json artifacts = json::array();
  for (const auto& a : m.artifacts) artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  j = json{{"format_version", 1},
           {"tool", "crimetype"},
           {"version", m.version},
           {"status", m.status},
           {"failed_phase", m.failed_phase.empty() ? json(nullptr) : json(m.failed_phase)},
           {"error", m.error.empty() ? json(nullptr) : json(m.error)},
           {"run_dir", m.run_dir.string()},
           {"preprocessing_order", "clean_then_split"},
           {"config", m.config},
           {"phases", phases},
           {"artifacts", artifacts},
           {"summary", m.summary}};
}

std::filesystem::path resolve_run_dir(const PipelineConfig& config) {
  std::filesystem::path base = config.output_dir;
  if (base.empty()) {
    const char* env = std::getenv("CRIMETYPE_OUTPUT_DIR");
    base = (env && *env) ? std::filesystem::path(env) : std::filesystem::path("runs");
  }
  if (!config.run_name.empty()) return base / config.run_name;

  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "run-%Y%m%dT%H%M%SZ", &utc);
  std::filesystem::path dir = base / stamp;
  for (int n = 2; std::filesystem::exists(dir); ++n) dir = base / (std::string(stamp) + "-" + std::to_string(n));
  return dir;
}

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    body(out);
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
  }

  void json_file(const std::string& name, const json& j) {
    text(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }

  std::vector<ArtifactEntry> entries() const {
    std::vector<ArtifactEntry> out;
    for (const auto& n : names_) {
      const auto path = dir_ / n;
      out.push_back({n, sha256_file(path), std::filesystem::file_size(path)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

json split_json(const SplitDataset& s, const PipelineConfig& c) {
  return json{{"format_version", 1},
              {"ratio", c.split_year ? json(nullptr) : json(c.split_ratio)},
              {"year", c.split_year ? json(*c.split_year) : json(nullptr)},
              {"n_train", s.train.size()},
              {"n_test", s.test.size()},
              {"split_timestamp", s.split_timestamp.format()},
              {"train_first", s.train.front().timestamp.format()},
              {"train_last", s.train.back().timestamp.format()},
              {"test_first", s.test.front().timestamp.format()},
              {"test_last", s.test.back().timestamp.format()}};
}

json kselect_json(const KSelection& k) {
  return json{{"format_version", 1},
              {"method", to_string(k.method)},
              {"chosen_k", k.k},
              {"points_used", k.points_used},
              {"subsampled", k.subsampled},
              {"elbow_k", k.elbow ? json(k.elbow->k_elbow) : json(nullptr)},
              {"gap_k_max", k.gap ? json(k.gap->chosen_k_max) : json(nullptr)},
              {"gap_k_onesd", k.gap ? json(k.gap->chosen_k_onesd) : json(nullptr)}};
}

void write_elbow_csv(std::ostream& out, const ElbowResult& e) {
  out << "k,inertia,chord_distance\n";
  for (std::size_t i = 0; i < e.inertia.size(); ++i) {
    out << i + 1 << ',' << format_number(e.inertia[i]) << ',' << format_number(e.chord_distance[i]) << '\n';
  }
}

void write_gap_csv(std::ostream& out, const GapReport& g) {
  out << "k,log_wk,expected_log_wkb,gap,sd,s,floored\n";
  for (const auto& r : g.rows) {
    out << r.k << ',' << format_number(r.log_wk) << ',' << format_number(r.expected_log_wkb) << ','
        << format_number(r.gap) << ',' << format_number(r.sd) << ',' << format_number(r.s) << ','
        << (r.floored ? 1 : 0) << '\n';
  }
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config) {
  config.validate();

  RunManifest manifest;
  manifest.version = std::string(version_string());
  manifest.config = config;
  manifest.run_dir = resolve_run_dir(config);
  std::error_code ec;
  std::filesystem::create_directories(manifest.run_dir, ec);
  if (ec) throw IoError("cannot create run directory " + manifest.run_dir.string() + ": " + ec.message());

  ArtifactWriter out(manifest.run_dir);
  PhaseLog log;

  auto write_manifest = [&] {
    manifest.phases = log.timings();
    manifest.artifacts = out.entries();
    const json j = manifest;
    std::ofstream f(manifest.run_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    f << j.dump(2) << '\n';
    if (!f) throw IoError("cannot write manifest in " + manifest.run_dir.string());
  };

  try {
    auto parsed = log.run("ingest", [&] { return parse_csv(config.input, config.columns); });
    auto cleaned = log.run("clean", [&] { return clean_records(parsed.rows, config.bounds); });
    parsed.rows.clear();
    out.json_file("ingest_report.json", json{{"format_version", 1},
                                             {"parse", parsed.report},
                                             {"clean", cleaned.report},
                                             {"preprocessing_order", "clean_then_split"}});
    manifest.summary["n_records"] = cleaned.records.size();

    log.run("aggregate", [&] {
      for (auto g : {Granularity::Hour, Granularity::Month, Granularity::Year}) {
        const auto agg = aggregate_counts(cleaned.records, g);
        out.text("aggregate_" + std::string(to_string(g)) + ".csv",
                 [&](std::ostream& os) { write_aggregate_csv(os, agg); });
      }
    });

    const SplitDataset split =
        log.run("split", [&] {
          return config.split_year ? split_at_year(std::move(cleaned.records), *config.split_year)
                                   : chronological_split(std::move(cleaned.records), config.split_ratio);
        });
    out.json_file("split.json", split_json(split, config));
    manifest.summary["n_train"] = split.train.size();
    manifest.summary["n_test"] = split.test.size();

    const FittedPipeline fitted = fit_pipeline(split.train, config, log);
    out.json_file("kselect.json", kselect_json(fitted.kselect));
    if (fitted.kselect.elbow) {
      out.json_file("elbow.json", *fitted.kselect.elbow);
      out.text("elbow.csv", [&](std::ostream& os) { write_elbow_csv(os, *fitted.kselect.elbow); });
    }
    if (fitted.kselect.gap) {
      out.json_file("gap.json", *fitted.kselect.gap);
      out.text("gap.csv", [&](std::ostream& os) { write_gap_csv(os, *fitted.kselect.gap); });
    }
    out.json_file("clusters.json", fitted.centers);
    out.text("density.csv", [&](std::ostream& os) { write_density_csv(os, fitted.density); });
    out.json_file("featurizer.json", featurizer_json(fitted.schema, fitted.context, fitted.standardization));
    out.json_file("pca.json", fitted.pca);
    out.json_file("model.json", fitted.model->to_json());
    manifest.summary["chosen_k"] = fitted.kselect.k;
    manifest.summary["center_count"] = fitted.centers.entries.size();

    const TestOutcome outcome = evaluate_pipeline(fitted, split.test, config, log);
    out.text("predictions.csv",
             [&](std::ostream& os) { write_predictions_csv(os, outcome.probabilities, outcome.labels); });
    out.json_file("evaluation.json", outcome.report);
    out.text("per_label.csv", [&](std::ostream& os) { write_per_label_csv(os, outcome.report.per_label); });
    out.json_file("smoothing.json", outcome.smoothing);
    out.text("smoothing.csv", [&](std::ostream& os) { write_smoothing_csv(os, outcome.smoothing); });
    if (outcome.importance) {
      out.json_file("importance.json", *outcome.importance);
      out.text("importance.csv", [&](std::ostream& os) { write_importance_csv(os, *outcome.importance); });
    }
    manifest.summary["log_loss"] = outcome.report.log_loss;
    manifest.summary["accuracy"] = outcome.report.accuracy;
    manifest.summary["baseline_log_loss"] = outcome.report.baseline_log_loss;
    manifest.summary["best_epsilon"] = outcome.smoothing.best_epsilon;
    manifest.summary["smoothed_log_loss"] = outcome.smoothing.best_loss;
  } catch (const std::exception& e) {
    manifest.status = "failed";
    manifest.failed_phase = log.current().empty() ? "report" : log.current();
    manifest.error = e.what();
    write_manifest();
    if (const auto* err = dynamic_cast<const Error*>(&e)) throw PipelineError(manifest.failed_phase, *err);
    throw PipelineError(manifest.failed_phase, e);
  }
  write_manifest();
  return manifest;
}

}  // namespace crimetype
