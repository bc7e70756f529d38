// Command-line front end: one subcommand per workflow step plus `run` for the whole pipeline.

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crimetype/centers.hpp"
#include "crimetype/config.hpp"
#include "crimetype/csv.hpp"
#include "crimetype/error.hpp"
#include "crimetype/evaluation.hpp"
#include "crimetype/features.hpp"
#include "crimetype/ingest.hpp"
#include "crimetype/kde.hpp"
#include "crimetype/kselect.hpp"
#include "crimetype/models.hpp"
#include "crimetype/pipeline.hpp"
#include "crimetype/random.hpp"

namespace ct = crimetype;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

int exit_code(ct::ErrorKind kind) {
  switch (kind) {
    case ct::ErrorKind::Parameter:
    case ct::ErrorKind::Configuration:
    case ct::ErrorKind::UnsupportedModel:
      return kUsage;
    case ct::ErrorKind::Io:
    case ct::ErrorKind::Schema:
    case ct::ErrorKind::InsufficientData:
    case ct::ErrorKind::UnknownLabel:
    case ct::ErrorKind::DegenerateRow:
    case ct::ErrorKind::Label:
    case ct::ErrorKind::Format:
      return kData;
    case ct::ErrorKind::State:
    case ct::ErrorKind::Divergence:
      return kInternal;
  }
  return kInternal;
}

// Flag values land here; a flag only overrides the config when it was given.
struct Flags {
  std::string config;
  std::string input;
  std::string output;
  std::string output_dir;
  std::string run_name;
  std::uint64_t seed = 0;
  int threads = 1;
  double ratio = 0.8;
  int split_year = 0;
  std::string method;
  int k = 0;
  int kmax = 16;
  int B = 10;
  std::size_t max_points = 0;
  int n_init = 10;
  std::string model;
  std::string hyper;
  std::vector<std::string> features;
  std::string granularity = "hour";
  std::string label;
  std::string train;
  std::string test;
  std::string centers;
  std::string model_path;
  std::string predictions;
  std::vector<double> grid;
  std::string density;
  bool points = false;
};

class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help, Flags& f)
      : app_(parent.add_subcommand(name, help)), f_(f) {
    add("--config", f.config, "JSON config file supplying defaults")->check(CLI::ExistingFile);
  }
  CLI::App* app() const { return app_; }

  template <typename T>
  CLI::Option* add(const std::string& name, T& target, const std::string& help) {
    auto* opt = app_->add_option(name, target, help);
    options_[name] = opt;
    return opt;
  }
  // Options that belong to this command only and never override the config.
  template <typename T>
  CLI::Option* add_local(const std::string& name, T& target, const std::string& help) {
    return app_->add_option(name, target, help);
  }
  bool given(const std::string& name) const {
    auto it = options_.find(name);
    return it != options_.end() && it->second->count() > 0;
  }

  ct::PipelineConfig config() const {
    ct::PipelineConfig c = f_.config.empty() ? ct::PipelineConfig{} : ct::load_config(f_.config);
    if (given("--input")) c.input = f_.input;
    if (given("--seed")) c.seed = f_.seed;
    if (given("--threads")) c.threads = f_.threads;
    if (given("--ratio")) {
      c.split_ratio = f_.ratio;
      c.split_year.reset();
    }
    if (given("--split-year")) c.split_year = f_.split_year;
    if (given("--output-dir")) c.output_dir = f_.output_dir;
    if (given("--run-name")) c.run_name = f_.run_name;
    if (given("--method")) c.k_selection.method = ct::parse_kselect_method(normalize_method(f_.method));
    if (given("--k")) {
      c.k_selection.fixed_k = f_.k;
      if (!given("--method")) c.k_selection.method = ct::KSelectMethod::Fixed;
    }
    if (given("--kmax")) c.k_selection.kmax = f_.kmax;
    if (given("--B")) c.k_selection.B = f_.B;
    if (given("--max-points")) c.k_selection.max_points = f_.max_points;
    if (given("--n-init")) c.k_selection.n_init = f_.n_init;
    if (given("--model")) {
      try {
        c.model = ct::parse_model_kind(f_.model);
      } catch (const ct::ParameterError& e) {
        throw ct::ConfigurationError(e.what());
      }
    }
    if (given("--hyper")) {
      try {
        c.hyperparameters = json::parse(f_.hyper);
      } catch (const json::parse_error&) {
        throw ct::ConfigurationError("--hyper must be a JSON object");
      }
      if (!c.hyperparameters.is_object()) throw ct::ConfigurationError("--hyper must be a JSON object");
    }
    if (given("--features")) c.features = f_.features;
    if (given("--grid")) c.smoothing_grid = f_.grid;
    return c;
  }

 private:
  // "gap" alone means the max-gap rule.
  static std::string normalize_method(const std::string& m) { return m == "gap" ? "gap_max" : m; }

  CLI::App* app_;
  Flags& f_;
  std::map<std::string, CLI::Option*> options_;
};

void emit(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ct::IoError("cannot write " + path);
  body(out);
  if (!out) throw ct::IoError("write failed for " + path);
}

void emit_json(const std::string& path, const json& j) {
  emit(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ct::IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ct::FormatError(path + " is not valid JSON: " + e.what());
  }
}

std::vector<ct::CrimeRecord> load_records(const std::string& path, const ct::PipelineConfig& c,
                                          ct::CleanReport* report = nullptr) {
  if (path.empty()) throw ct::ConfigurationError("no input file given (use --input or a config)");
  auto parsed = ct::parse_csv(std::filesystem::path(path), c.columns);
  auto cleaned = ct::clean_records(parsed.rows, c.bounds);
  if (report) *report = cleaned.report;
  return std::move(cleaned.records);
}

std::vector<ct::Point2> load_points(const std::string& path, const ct::PipelineConfig& c) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ct::IoError("cannot open input file: " + path);
  ct::CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next_row(fields)) throw ct::SchemaError("empty coordinate file: " + path);
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (ct::trim(fields[i]) == name) return i;
    }
    throw ct::SchemaError("coordinate file " + path + " has no '" + name + "' column");
  };
  const std::size_t ix = find(c.columns.x);
  const std::size_t iy = find(c.columns.y);
  std::vector<ct::Point2> pts;
  while (reader.next_row(fields)) {
    if (fields.size() == 1 && ct::trim(fields[0]).empty()) continue;
    const auto x = fields.size() > ix ? ct::parse_number(fields[ix]) : std::nullopt;
    const auto y = fields.size() > iy ? ct::parse_number(fields[iy]) : std::nullopt;
    if (!x || !y) throw ct::FormatError("non-numeric coordinate on data row " + std::to_string(pts.size() + 1));
    pts.push_back({*x, *y});
  }
  return pts;
}

ct::FeatureMatrix load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ct::IoError("cannot open feature file: " + path);
  return ct::read_feature_csv(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crime-type prediction workflow: ingest, cluster, featurize, train, evaluate"};
  app.require_subcommand(1);
  Flags f;

  Command ingest(app, "ingest", "Parse and clean an incident CSV", f);
  ingest.add("--input", f.input, "incident CSV");
  ingest.add("--output", f.output, "cleaned records CSV (report JSON goes to stdout)");

  Command aggregate(app, "aggregate", "Count incidents per hour, month or year", f);
  aggregate.add("--input", f.input, "incident CSV");
  aggregate.add("--granularity", f.granularity, "hour, month or year");
  aggregate.add("--label", f.label, "restrict to one crime label");
  aggregate.add("--output", f.output, "CSV destination (default stdout)");

  Command selectk(app, "select-k", "Choose a cluster count by gap statistic or elbow", f);
  selectk.add("--input", f.input, "incident CSV, or coordinate CSV with --points");
  selectk.app()->add_flag("--points", f.points, "input holds bare coordinates in the configured x/y columns");
  selectk.add("--method", f.method, "gap (= gap_max), gap_max, gap_onesd or elbow");
  selectk.add("--kmax", f.kmax, "largest k to evaluate");
  selectk.add("--B", f.B, "reference data sets for the gap statistic");
  selectk.add("--max-points", f.max_points, "subsample cap, 0 = all points");
  selectk.add("--n-init", f.n_init, "k-means restarts per fit");
  selectk.add("--seed", f.seed, "root seed");
  selectk.add("--threads", f.threads, "worker threads");
  selectk.add("--output", f.output, "JSON destination (default stdout)");

  Command cluster(app, "cluster", "Fit per-year k-means centers and stack them", f);
  cluster.add("--input", f.input, "incident CSV");
  cluster.add("--k", f.k, "clusters per year");
  cluster.add("--n-init", f.n_init, "k-means restarts per fit");
  cluster.add("--seed", f.seed, "root seed");
  cluster.add("--threads", f.threads, "worker threads");
  cluster.add("--density", f.density, "also write a KDE grid CSV here");
  cluster.add("--output", f.output, "centers JSON destination (default stdout)");

  Command featurize(app, "featurize", "Build standardized feature matrices", f);
  featurize.add("--input", f.input, "incident CSV to split chronologically");
  featurize.add("--ratio", f.ratio, "train fraction when splitting --input");
  featurize.add("--split-year", f.split_year, "test on this calendar year onwards instead of a ratio split");
  featurize.add("--train", f.train, "training incident CSV (instead of --input)");
  featurize.add("--test", f.test, "test incident CSV (instead of --input)");
  featurize.add("--centers", f.centers, "stacked centers JSON from `cluster`");
  featurize.add("--features", f.features, "feature names (default all)")->delimiter(',');
  featurize.add("--output-dir", f.output_dir, "directory for train/test feature CSVs and featurizer.json");

  Command train(app, "train", "Train a classifier on a feature CSV", f);
  train.add("--features", f.train, "training feature CSV");
  train.add("--model", f.model, "knn, gaussian_nb, decision_tree, random_forest or logistic_regression");
  train.add("--hyper", f.hyper, "hyperparameters as a JSON object");
  train.add("--seed", f.seed, "root seed");
  train.add("--threads", f.threads, "worker threads");
  train.add("--output", f.output, "model JSON destination (default stdout)");

  Command evaluate(app, "evaluate", "Score a trained model on a feature CSV", f);
  evaluate.add_local("--model", f.model_path, "model JSON");
  evaluate.add("--features", f.test, "test feature CSV");
  evaluate.add("--threads", f.threads, "worker threads");
  evaluate.add("--predictions", f.predictions, "also write class probabilities CSV here");
  evaluate.add("--output", f.output, "evaluation JSON destination (default stdout)");

  Command smooth(app, "smooth", "Search the smoothing constant that minimizes log loss", f);
  smooth.add("--predictions", f.predictions, "probabilities CSV from `evaluate`");
  smooth.add("--grid", f.grid, "comma-separated epsilon values")->delimiter(',');
  smooth.add("--output", f.output, "smoothing JSON destination (default stdout)");

  Command importance(app, "importance", "Rank features of a tree-based model", f);
  importance.add_local("--model", f.model_path, "model JSON");
  importance.add("--output", f.output, "CSV destination (default stdout)");

  Command run(app, "run", "Run the full workflow and print the manifest", f);
  run.add("--input", f.input, "incident CSV");
  run.add("--seed", f.seed, "root seed");
  run.add("--threads", f.threads, "worker threads");
  run.add("--ratio", f.ratio, "train fraction");
  run.add("--split-year", f.split_year, "test on this calendar year onwards instead of a ratio split");
  run.add("--method", f.method, "gap_max, gap_onesd, elbow or fixed");
  run.add("--k", f.k, "fixed cluster count");
  run.add("--kmax", f.kmax, "largest k to evaluate");
  run.add("--B", f.B, "reference data sets for the gap statistic");
  run.add("--max-points", f.max_points, "k-selection subsample cap, 0 = all points");
  run.add("--model", f.model, "model kind");
  run.add("--hyper", f.hyper, "hyperparameters as a JSON object");
  run.add("--output-dir", f.output_dir, "parent of the run directory");
  run.add("--run-name", f.run_name, "run directory name (default: UTC timestamp)");

  auto* version = app.add_subcommand("version", "Print the tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (version->parsed()) {
      std::cout << "crimetype " << ct::version_string() << '\n';
      return kOk;
    }

    if (ingest.app()->parsed()) {
      const auto c = ingest.config();
      ct::CleanReport report;
      const auto records = load_records(c.input.string(), c, &report);
      if (!f.output.empty()) emit(f.output, [&](std::ostream& os) { ct::write_records_csv(os, records, c.columns); });
      emit_json("", json(report));
      return kOk;
    }

    if (aggregate.app()->parsed()) {
      const auto c = aggregate.config();
      const auto records = load_records(c.input.string(), c);
      std::optional<ct::ClassLabel> filter;
      if (!f.label.empty()) filter = ct::encode_label(f.label);
      const auto agg = ct::aggregate_counts(records, ct::parse_granularity(f.granularity), filter);
      emit(f.output, [&](std::ostream& os) { ct::write_aggregate_csv(os, agg); });
      return kOk;
    }

    if (selectk.app()->parsed()) {
      auto c = selectk.config();
      if (!selectk.given("--max-points") && f.config.empty()) c.k_selection.max_points = 0;
      if (c.k_selection.method == ct::KSelectMethod::Fixed) {
        throw ct::ConfigurationError("select-k needs method gap, gap_max, gap_onesd or elbow");
      }
      c.validate(false);
      std::vector<ct::Point2> pts;
      if (f.points) {
        pts = load_points(c.input.string(), c);
      } else {
        for (const auto& r : load_records(c.input.string(), c)) pts.push_back({r.x, r.y});
      }
      const auto sel = ct::select_cluster_count(pts, c);
      json j{{"format_version", 1},
             {"method", ct::to_string(sel.method)},
             {"chosen_k", sel.k},
             {"points_used", sel.points_used},
             {"seed", c.seed}};
      if (sel.gap) {
        j["chosen_k_max"] = sel.gap->chosen_k_max;
        j["chosen_k_onesd"] = sel.gap->chosen_k_onesd;
        j["gap"] = *sel.gap;
      }
      if (sel.elbow) j["elbow"] = *sel.elbow;
      emit_json(f.output, j);
      return kOk;
    }

    if (cluster.app()->parsed()) {
      auto c = cluster.config();
      const int k = cluster.given("--k") ? f.k : c.k_selection.fixed_k;
      if (k < 1) throw ct::ConfigurationError("cluster needs --k >= 1");
      c.validate(false);
      const auto records = load_records(c.input.string(), c);
      ct::KMeansOptions opts;
      opts.n_init = c.k_selection.n_init;
      opts.max_iter = c.k_selection.max_iter;
      opts.threads = c.threads;
      opts.seed = ct::derive_seed(c.seed, "yearly_centers", 0);
      const auto stacked = ct::stack_yearly_centers(records, k, opts, c.short_years);
      if (!f.density.empty()) {
        std::vector<ct::Point2> pts;
        for (const auto& r : records) pts.push_back({r.x, r.y});
        const auto grid = ct::kde_density_grid(pts, c.kde_bandwidth, c.kde_grid, c.kde_grid);
        emit(f.density, [&](std::ostream& os) { ct::write_density_csv(os, grid); });
      }
      emit_json(f.output, json(stacked));
      return kOk;
    }

    if (featurize.app()->parsed()) {
      const auto c = featurize.config();
      c.validate(false);
      std::vector<ct::CrimeRecord> train_records;
      std::vector<ct::CrimeRecord> test_records;
      if (!f.train.empty()) {
        train_records = load_records(f.train, c);
        if (!f.test.empty()) test_records = load_records(f.test, c);
      } else {
        auto records = load_records(c.input.string(), c);
        auto split = c.split_year ? ct::split_at_year(std::move(records), *c.split_year)
                                  : ct::chronological_split(std::move(records), c.split_ratio);
        train_records = std::move(split.train);
        test_records = std::move(split.test);
      }
      const ct::FeatureSchema schema = c.features.empty() ? ct::FeatureSchema::all_features()
                                                          : ct::FeatureSchema(c.features);
      auto context = ct::FeatureContext::fit(train_records);
      if (!f.centers.empty()) {
        ct::StackedCenters stacked = read_json(f.centers).get<ct::StackedCenters>();
        context.centers = stacked.points();
      }
      const auto train_matrix = ct::build_feature_matrix(train_records, schema, context);
      const auto stats = ct::fit_standardization(train_matrix);
      const std::filesystem::path dir = f.output_dir.empty() ? "." : f.output_dir;
      std::filesystem::create_directories(dir);
      emit((dir / "train_features.csv").string(), [&](std::ostream& os) {
        ct::write_feature_csv(os, ct::apply_standardization(train_matrix, stats));
      });
      if (!test_records.empty()) {
        const auto test_matrix = ct::build_feature_matrix(test_records, schema, context);
        emit((dir / "test_features.csv").string(), [&](std::ostream& os) {
          ct::write_feature_csv(os, ct::apply_standardization(test_matrix, stats));
        });
      }
      emit_json((dir / "featurizer.json").string(), ct::featurizer_json(schema, context, stats));
      return kOk;
    }

    if (train.app()->parsed()) {
      const auto c = train.config();
      c.validate(false);
      if (f.train.empty()) throw ct::ConfigurationError("train needs --features");
      const auto matrix = load_features(f.train);
      ct::TrainOptions opts;
      opts.seed = ct::derive_seed(c.seed, "model", 0);
      opts.threads = c.threads;
      opts.class_count = c.class_count;
      const auto model = ct::train_classifier(c.model, matrix, c.hyperparameters, opts);
      emit_json(f.output, model->to_json());
      return kOk;
    }

    if (evaluate.app()->parsed()) {
      const auto c = evaluate.config();
      if (f.model_path.empty() || f.test.empty()) throw ct::ConfigurationError("evaluate needs --model and --features");
      const auto model = ct::load_classifier(read_json(f.model_path));
      const auto matrix = load_features(f.test);
      const auto probs = model->predict_proba(matrix, c.threads);
      if (!f.predictions.empty()) {
        emit(f.predictions, [&](std::ostream& os) { ct::write_predictions_csv(os, probs, matrix.labels); });
      }
      emit_json(f.output, json(ct::evaluate(probs, matrix.labels, std::string(ct::to_string(model->kind())))));
      return kOk;
    }

    if (smooth.app()->parsed()) {
      const auto c = smooth.config();
      if (f.predictions.empty()) throw ct::ConfigurationError("smooth needs --predictions");
      std::ifstream in(f.predictions, std::ios::binary);
      if (!in) throw ct::IoError("cannot open predictions file: " + f.predictions);
      std::vector<int> labels;
      const auto probs = ct::read_predictions_csv(in, labels);
      const auto grid = c.smoothing_grid ? *c.smoothing_grid : ct::default_smoothing_grid();
      emit_json(f.output, json(ct::smoothing_search(probs, labels, grid)));
      return kOk;
    }

    if (importance.app()->parsed()) {
      if (f.model_path.empty()) throw ct::ConfigurationError("importance needs --model");
      const auto model = ct::load_classifier(read_json(f.model_path));
      const auto ranking = ct::feature_importance(*model);
      emit(f.output, [&](std::ostream& os) { ct::write_importance_csv(os, ranking); });
      return kOk;
    }

    if (run.app()->parsed()) {
      const auto manifest = ct::run_pipeline(run.config());
      std::cout << json(manifest).dump(2) << '\n';
      return kOk;
    }
  } catch (const ct::Error& e) {
    std::cerr << "error (" << ct::to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error (format): " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
