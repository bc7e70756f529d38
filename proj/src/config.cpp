#include "crimetype/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "crimetype/error.hpp"
#include "crimetype/features.hpp"

namespace crimetype {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigurationError(std::string(where) + " must be a JSON object");
  const std::set<std::string_view> allowed(keys);
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigurationError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigurationError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string_view to_string(KSelectMethod m) {
  switch (m) {
    case KSelectMethod::GapMax: return "gap_max";
    case KSelectMethod::GapOneSd: return "gap_onesd";
    case KSelectMethod::Elbow: return "elbow";
    case KSelectMethod::Fixed: return "fixed";
  }
  return "gap_max";
}

KSelectMethod parse_kselect_method(std::string_view text) {
  for (auto m : {KSelectMethod::GapMax, KSelectMethod::GapOneSd, KSelectMethod::Elbow, KSelectMethod::Fixed}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigurationError("unknown k-selection method '" + std::string(text) +
                           "' (expected gap_max, gap_onesd, elbow or fixed)");
}

PipelineConfig parse_config(const json& j) {
  reject_unknown(j, "config",
                 {"input", "columns", "bounds", "split_ratio", "split_year", "k_selection", "short_years", "model", "features",
                  "pca_components", "smoothing_grid", "kde", "class_count", "seed", "threads", "output_dir",
                  "run_name"});
  PipelineConfig c;
  std::string text;
  if (j.contains("input")) {
    read(j, "input", text);
    c.input = text;
  }
  if (j.contains("columns")) {
    const auto& cj = j["columns"];
    reject_unknown(cj, "columns", {"x", "y", "date", "label", "address", "district"});
    read(cj, "x", c.columns.x);
    read(cj, "y", c.columns.y);
    read(cj, "date", c.columns.date);
    read(cj, "label", c.columns.label);
    read(cj, "address", c.columns.address);
    read(cj, "district", c.columns.district);
  }
  if (j.contains("bounds")) {
    const auto& bj = j["bounds"];
    reject_unknown(bj, "bounds", {"min_x", "max_x", "min_y", "max_y"});
    read(bj, "min_x", c.bounds.min_x);
    read(bj, "max_x", c.bounds.max_x);
    read(bj, "min_y", c.bounds.min_y);
    read(bj, "max_y", c.bounds.max_y);
  }
  read(j, "split_ratio", c.split_ratio);
  if (j.contains("split_year") && !j["split_year"].is_null()) {
    int year = 0;
    read(j, "split_year", year);
    c.split_year = year;
  }
  if (j.contains("k_selection")) {
    const auto& kj = j["k_selection"];
    reject_unknown(kj, "k_selection", {"method", "fixed_k", "kmax", "B", "max_points", "n_init", "max_iter"});
    if (kj.contains("method")) {
      read(kj, "method", text);
      c.k_selection.method = parse_kselect_method(text);
    }
    read(kj, "fixed_k", c.k_selection.fixed_k);
    read(kj, "kmax", c.k_selection.kmax);
    read(kj, "B", c.k_selection.B);
    read(kj, "max_points", c.k_selection.max_points);
    read(kj, "n_init", c.k_selection.n_init);
    read(kj, "max_iter", c.k_selection.max_iter);
  }
  if (j.contains("short_years")) {
    read(j, "short_years", text);
    if (text == "skip") c.short_years = ShortYearPolicy::Skip;
    else if (text == "fail") c.short_years = ShortYearPolicy::Fail;
    else throw ConfigurationError("short_years must be 'skip' or 'fail'");
  }
  if (j.contains("model")) {
    const auto& mj = j["model"];
    reject_unknown(mj, "model", {"kind", "hyperparameters"});
    if (mj.contains("kind")) {
      read(mj, "kind", text);
      try {
        c.model = parse_model_kind(text);
      } catch (const ParameterError& e) {
        throw ConfigurationError(e.what());
      }
    }
    if (mj.contains("hyperparameters")) {
      if (!mj["hyperparameters"].is_object()) throw ConfigurationError("model.hyperparameters must be an object");
      c.hyperparameters = mj["hyperparameters"];
    }
  }
  read(j, "features", c.features);
  read(j, "pca_components", c.pca_components);
  if (j.contains("smoothing_grid") && !j["smoothing_grid"].is_null()) {
    std::vector<double> grid;
    read(j, "smoothing_grid", grid);
    c.smoothing_grid = std::move(grid);
  }
  if (j.contains("kde")) {
    const auto& dj = j["kde"];
    reject_unknown(dj, "kde", {"grid", "bandwidth"});
    read(dj, "grid", c.kde_grid);
    if (dj.contains("bandwidth") && !dj["bandwidth"].is_null()) {
      double h = 0;
      read(dj, "bandwidth", h);
      c.kde_bandwidth = h;
    }
  }
  read(j, "class_count", c.class_count);
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  if (j.contains("output_dir")) {
    read(j, "output_dir", text);
    c.output_dir = text;
  }
  read(j, "run_name", c.run_name);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  PipelineConfig c = parse_config(j);
  // Relative paths inside a config file are relative to the file itself.
  const auto base = path.parent_path();
  if (!c.input.empty() && c.input.is_relative()) c.input = base / c.input;
  if (!c.output_dir.empty() && c.output_dir.is_relative()) c.output_dir = base / c.output_dir;
  return c;
}

void PipelineConfig::validate(bool require_input) const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw ConfigurationError("split_ratio must lie in (0, 1)");
  }
  if (!(bounds.min_x < bounds.max_x && bounds.min_y < bounds.max_y)) {
    throw ConfigurationError("bounds must satisfy min < max on both axes");
  }
  const auto& ks = k_selection;
  if (ks.method == KSelectMethod::Fixed) {
    if (ks.fixed_k < 1) throw ConfigurationError("k_selection.method 'fixed' needs fixed_k >= 1");
  } else if (ks.fixed_k != 0) {
    throw ConfigurationError("k_selection.fixed_k is only meaningful with method 'fixed'");
  }
  if (ks.method == KSelectMethod::Elbow && ks.kmax < 3) {
    throw ConfigurationError("elbow selection needs k_selection.kmax >= 3");
  }
  if (ks.kmax < 2) throw ConfigurationError("k_selection.kmax must be at least 2");
  if (ks.B < 1) throw ConfigurationError("k_selection.B must be at least 1");
  if (ks.n_init < 1 || ks.max_iter < 1) throw ConfigurationError("k_selection.n_init and max_iter must be >= 1");
  if (model == ModelKind::Svm || model == ModelKind::Mlp) {
    throw UnsupportedModelError("model kind '" + std::string(to_string(model)) + "' is not supported");
  }
  try {
    const FeatureSchema schema = features.empty() ? FeatureSchema::all_features() : FeatureSchema(features);
    for (const auto& n : schema.names()) {
      if (n.rfind("PC", 0) == 0) throw ConfigurationError("principal components are selected with pca_components");
    }
    if (pca_components > schema.size()) {
      throw ConfigurationError("pca_components exceeds the number of features");
    }
  } catch (const SchemaError& e) {
    throw ConfigurationError(e.what());
  }
  if (smoothing_grid) {
    if (smoothing_grid->empty()) throw ConfigurationError("smoothing_grid must not be empty");
    for (double e : *smoothing_grid) {
      if (!(e >= 0) || !std::isfinite(e)) throw ConfigurationError("smoothing_grid values must be finite and >= 0");
    }
  }
  if (kde_grid < 1) throw ConfigurationError("kde.grid must be at least 1");
  if (kde_bandwidth && !(*kde_bandwidth > 0)) throw ConfigurationError("kde.bandwidth must be positive");
  if (class_count < 1 || class_count > kLabelCount) {
    throw ConfigurationError("class_count must lie in [1, " + std::to_string(kLabelCount) + "]");
  }
  if (threads < 1) throw ConfigurationError("threads must be at least 1");
  if (require_input) {
    if (input.empty()) throw ConfigurationError("config has no input path");
    if (!std::filesystem::is_regular_file(input)) throw IoError("input file not found: " + input.string());
  }
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = json{{"input", c.input.string()},
           {"columns",
            {{"x", c.columns.x},
             {"y", c.columns.y},
             {"date", c.columns.date},
             {"label", c.columns.label},
             {"address", c.columns.address},
             {"district", c.columns.district}}},
           {"bounds",
            {{"min_x", c.bounds.min_x}, {"max_x", c.bounds.max_x}, {"min_y", c.bounds.min_y}, {"max_y", c.bounds.max_y}}},
           {"split_ratio", c.split_ratio},
           {"split_year", c.split_year ? json(*c.split_year) : json(nullptr)},
           {"k_selection",
            {{"method", to_string(c.k_selection.method)},
             {"fixed_k", c.k_selection.fixed_k},
             {"kmax", c.k_selection.kmax},
             {"B", c.k_selection.B},
             {"max_points", c.k_selection.max_points},
             {"n_init", c.k_selection.n_init},
             {"max_iter", c.k_selection.max_iter}}},
           {"short_years", c.short_years == ShortYearPolicy::Skip ? "skip" : "fail"},
           {"model", {{"kind", to_string(c.model)}, {"hyperparameters", c.hyperparameters}}},
           {"features", c.features.empty() ? FeatureSchema::all_features().names() : c.features},
           {"pca_components", c.pca_components},
           {"smoothing_grid", c.smoothing_grid ? json(*c.smoothing_grid) : json(nullptr)},
           {"kde", {{"grid", c.kde_grid}, {"bandwidth", c.kde_bandwidth ? json(*c.kde_bandwidth) : json(nullptr)}}},
           {"class_count", c.class_count},
           {"seed", c.seed},
           {"threads", c.threads},
           {"output_dir", c.output_dir.string()},
           {"run_name", c.run_name}};
}

}  // namespace crimetype
