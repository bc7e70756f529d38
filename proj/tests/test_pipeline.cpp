#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>

#include "crimetype/config.hpp"
#include "crimetype/error.hpp"
#include "crimetype/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace crimetype;
using namespace crimetype::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fast settings for a small run; k is fixed so the gap computation stays cheap.
PipelineConfig small_config(const fs::path& input, const fs::path& out, const std::string& name) {
  PipelineConfig c;
  c.input = input;
  c.output_dir = out;
  c.run_name = name;
  c.seed = 7;
  c.k_selection.method = KSelectMethod::Fixed;
  c.k_selection.fixed_k = 2;
  c.k_selection.kmax = 6;
  c.k_selection.B = 3;
  c.k_selection.n_init = 3;
  c.model = ModelKind::RandomForest;
  c.hyperparameters = {{"n_trees", 15}};
  c.kde_grid = 30;
  return c;
}

std::vector<CrimeRecord> small_records(std::size_t n = 1000) {
  SyntheticCrimeOptions o;
  o.records = n;
  o.labels = 3;
  o.seed = 11;
  auto records = synthetic_crimes(o);
  std::stable_sort(records.begin(), records.end(),
                   [](const CrimeRecord& a, const CrimeRecord& b) { return a.timestamp < b.timestamp; });
  return records;
}

std::map<std::string, std::string> artifact_hashes(const RunManifest& m) {
  std::map<std::string, std::string> out;
  for (const auto& a : m.artifacts) out[a.path] = a.sha256;
  return out;
}

}  // namespace

TEST_CASE("config parsing applies defaults and rejects unknown keys") {
  const auto c = parse_config(json::parse(R"({"input": "x.csv", "seed": 3,
      "k_selection": {"method": "elbow", "kmax": 10},
      "model": {"kind": "logistic_regression", "hyperparameters": {"epochs": 10}}})"));
  CHECK(c.split_ratio == 0.8);
  CHECK(c.seed == 3);
  CHECK(c.k_selection.method == KSelectMethod::Elbow);
  CHECK(c.k_selection.kmax == 10);
  CHECK(c.k_selection.B == 10);
  CHECK(c.model == ModelKind::LogisticRegression);
  CHECK(c.hyperparameters["epochs"] == 10);
  CHECK(c.class_count == 33);

  CHECK_THROWS_AS(parse_config(json::parse(R"({"inptu": "x.csv"})")), ConfigurationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"k_selection": {"method": "silhouette"}})")), ConfigurationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"k_selection": {"kmin": 2}})")), ConfigurationError);

  const json round = c;
  CHECK(parse_config(round).k_selection.kmax == 10);
}

TEST_CASE("config validation") {
  TempDir dir;
  write_file(dir / "in.csv", "X,Y,Date,Label\n");
  PipelineConfig c;
  c.input = dir / "in.csv";
  CHECK_NOTHROW(c.validate());

  auto bad = c;
  bad.split_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = c;
  bad.k_selection.method = KSelectMethod::Fixed;
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad.k_selection.fixed_k = 4;
  CHECK_NOTHROW(bad.validate());
  bad = c;
  bad.k_selection.fixed_k = 4;  // only meaningful with the fixed method
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = c;
  bad.k_selection.method = KSelectMethod::Elbow;
  bad.k_selection.kmax = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = c;
  bad.model = ModelKind::Svm;
  CHECK_THROWS_AS(bad.validate(), UnsupportedModelError);
  bad = c;
  bad.features = {"Hour", "Velocity"};
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = c;
  bad.smoothing_grid = std::vector<double>{0, -1};
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = c;
  bad.input = dir / "missing.csv";
  try {
    bad.validate();
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }
}

TEST_CASE("config files resolve relative paths against their directory") {
  TempDir dir;
  fs::create_directories(dir / "data");
  write_file(dir / "data" / "cfg.json", R"({"input": "in.csv", "output_dir": "out"})");
  const auto c = load_config(dir / "data" / "cfg.json");
  CHECK(c.input == dir / "data" / "in.csv");
  CHECK(c.output_dir == dir / "data" / "out");
  write_file(dir / "broken.json", "{");
  CHECK_THROWS(load_config(dir / "broken.json"));
}

TEST_CASE("k-selection subsample is deterministic and order preserving") {
  const auto centers = circle_centers(3, 1.0, 0.0);
  const auto pts = gaussian_blobs(centers, 100, 0.1, 1);
  const auto a = kselect_sample(pts, 50, 9);
  CHECK(a.size() == 50);
  CHECK(a == kselect_sample(pts, 50, 9));
  CHECK(kselect_sample(pts, 0, 9).size() == pts.size());
  CHECK(kselect_sample(pts, 1000, 9).size() == pts.size());
  std::size_t cursor = 0;
  for (const auto& p : a) {
    while (cursor < pts.size() && !(pts[cursor] == p)) ++cursor;
    CHECK(cursor < pts.size());
  }
}

TEST_CASE("small end-to-end run emits the expected artifacts") {
  TempDir dir;
  const auto records = small_records();
  write_crimes_csv(dir / "crimes.csv", records);
  const auto m = run_pipeline(small_config(dir / "crimes.csv", dir.path(), "first"));

  CHECK(m.status == "ok");
  CHECK(m.run_dir == dir / "first");
  const auto hashes = artifact_hashes(m);
  for (const char* name : {"model.json", "evaluation.json", "gap.json", "gap.csv", "elbow.json", "elbow.csv",
                           "importance.csv", "clusters.json", "featurizer.json", "smoothing.json", "per_label.csv",
                           "predictions.csv", "split.json", "kselect.json", "ingest_report.json"}) {
    CAPTURE(name);
    CHECK(hashes.count(name) == 1);
  }
  CHECK(hashes.count("manifest.json") == 0);

  // Every listed artifact matches the bytes on disk.
  for (const auto& a : m.artifacts) {
    CAPTURE(a.path);
    CHECK(sha256_file(m.run_dir / a.path) == a.sha256);
    CHECK(fs::file_size(m.run_dir / a.path) == a.bytes);
  }

  const auto manifest = json::parse(read_file(m.run_dir / "manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["preprocessing_order"] == "clean_then_split");
  CHECK(manifest["summary"]["chosen_k"] == 2);
  CHECK(manifest["summary"]["n_train"] == 800);
  CHECK(manifest["summary"]["n_test"] == 200);
  CHECK(manifest["config"]["seed"] == 7);
  CHECK(manifest["version"] == std::string(version_string()));
  std::vector<std::string> phases;
  for (const auto& p : manifest["phases"]) phases.push_back(p["name"]);
  for (const char* name : {"ingest", "clean", "split", "k_selection", "clustering", "features", "train", "evaluate",
                           "smoothing", "importance"}) {
    CAPTURE(name);
    CHECK(std::find(phases.begin(), phases.end(), name) != phases.end());
  }

  const auto eval = json::parse(read_file(m.run_dir / "evaluation.json"));
  CHECK(eval["n"] == 200);
  CHECK(eval["log_loss"].get<double>() < std::log(3.0));
}

TEST_CASE("identical runs give identical artifacts") {
  TempDir dir;
  write_crimes_csv(dir / "crimes.csv", small_records());
  auto config = small_config(dir / "crimes.csv", dir.path(), "a");
  const auto a = run_pipeline(config);
  config.run_name = "b";
  config.threads = 3;
  const auto b = run_pipeline(config);
  auto ha = artifact_hashes(a), hb = artifact_hashes(b);
  CHECK(ha == hb);
  CHECK(read_file(a.run_dir / "evaluation.json") == read_file(b.run_dir / "evaluation.json"));
}

TEST_CASE("test-partition contents never reach fitted state") {
  TempDir dir;
  auto records = small_records();
  write_crimes_csv(dir / "a.csv", records);
  // Scramble everything about the later 20% except the timestamps that place them in the test set.
  for (std::size_t i = 800; i < records.size(); ++i) {
    records[i].x = -75.10 + 0.0001 * static_cast<double>(i % 50);
    records[i].y = 40.00;
    records[i].label = ClassLabel(static_cast<int>(i % 3));
    records[i].address = "1 BLOCK NOWHERE ST";
  }
  write_crimes_csv(dir / "b.csv", records);

  auto config = small_config(dir / "a.csv", dir.path(), "a");
  config.k_selection.method = KSelectMethod::GapMax;
  config.k_selection.fixed_k = 0;
  const auto a = artifact_hashes(run_pipeline(config));
  config.input = dir / "b.csv";
  config.run_name = "b";
  const auto b = artifact_hashes(run_pipeline(config));

  for (const char* name : {"kselect.json", "gap.json", "elbow.json", "clusters.json", "density.csv",
                           "featurizer.json", "pca.json", "model.json", "split.json"}) {
    CAPTURE(name);
    CHECK(a.at(name) == b.at(name));
  }
  CHECK(a.at("predictions.csv") != b.at("predictions.csv"));
}

TEST_CASE("a failing phase leaves a failed manifest behind") {
  TempDir dir;
  write_crimes_csv(dir / "crimes.csv", small_records(300));
  auto config = small_config(dir / "crimes.csv", dir.path(), "broken");
  config.class_count = 2;  // the data carries three labels
  try {
    run_pipeline(config);
    FAIL("expected a pipeline failure");
  } catch (const PipelineError& e) {
    CHECK(e.kind() == ErrorKind::Label);
    CHECK(std::string(e.what()).find(e.phase()) != std::string::npos);
  }
  const auto manifest = json::parse(read_file(dir / "broken" / "manifest.json"));
  CHECK(manifest["status"] == "failed");
  CHECK_FALSE(manifest["failed_phase"].get<std::string>().empty());
  CHECK_FALSE(manifest["error"].get<std::string>().empty());
  for (const auto& a : manifest["artifacts"]) {
    CHECK(sha256_file(dir / "broken" / a["path"].get<std::string>()) == a["sha256"]);
  }
  CHECK(fs::exists(dir / "broken" / "ingest_report.json"));
}

TEST_CASE("gap_max on seven planted hot spots records k = 7") {
  TempDir dir;
  auto centers = circle_centers(7, 0.05, 0.3);
  for (auto& c : centers) {
    c.x += -75.15;
    c.y += 40.0;
  }
  const auto pts = gaussian_blobs(centers, 200, 0.0005, 21);
  auto base = small_records(pts.size());
  // Interleave the blobs over time so the training years see all of them.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[(i % 7) * 200 + i / 7];
    base[i].x = p.x;
    base[i].y = p.y;
  }
  write_crimes_csv(dir / "blobs.csv", base);
  auto config = small_config(dir / "blobs.csv", dir.path(), "blobs");
  config.k_selection.method = KSelectMethod::GapMax;
  config.k_selection.fixed_k = 0;
  config.k_selection.kmax = 16;
  config.k_selection.B = 10;
  config.k_selection.max_points = 0;
  const auto m = run_pipeline(config);
  CHECK(m.summary["chosen_k"] == 7);
  const auto ks = json::parse(read_file(m.run_dir / "kselect.json"));
  CHECK(ks["chosen_k"] == 7);
  CHECK(ks["gap_k_max"] == 7);
}

TEST_CASE("run directory resolution") {
  TempDir dir;
  PipelineConfig c;
  c.output_dir = dir.path();
  c.run_name = "named";
  CHECK(resolve_run_dir(c) == dir / "named");
  c.run_name.clear();
  const auto stamped = resolve_run_dir(c);
  CHECK(stamped.parent_path() == dir.path());
  CHECK(stamped.filename().string().rfind("run-", 0) == 0);

  c.output_dir.clear();
  c.run_name = "env";
  ::setenv("CRIMETYPE_OUTPUT_DIR", (dir / "fromenv").c_str(), 1);
  CHECK(resolve_run_dir(c) == dir / "fromenv" / "env");
  ::unsetenv("CRIMETYPE_OUTPUT_DIR");
  CHECK(resolve_run_dir(c) == fs::path("runs") / "env");
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("split_year sends that year onwards to the test partition") {
  TempDir dir;
  const auto records = small_records();
  write_crimes_csv(dir / "crimes.csv", records);
  auto config = small_config(dir / "crimes.csv", dir.path(), "years");
  config.split_year = 2014;
  const auto m = run_pipeline(config);
  std::size_t later = 0;
  for (const auto& r : records) later += r.timestamp.year >= 2014;
  CHECK(m.summary["n_test"] == later);
  const auto split = json::parse(read_file(m.run_dir / "split.json"));
  CHECK(split["year"] == 2014);
  CHECK(split["ratio"].is_null());
  CHECK(split["test_first"].get<std::string>().find("/2014 ") != std::string::npos);

  const json snapshot = config;
  CHECK(parse_config(snapshot).split_year == 2014);
  config.split_year = 1990;
  config.run_name = "empty";
  CHECK_THROWS_AS(run_pipeline(config), PipelineError);
}
