#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "support/synthetic.hpp"

using namespace crimetype;
using namespace crimetype::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + CRIMETYPE_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void write_small_crimes(const fs::path& path) {
  SyntheticCrimeOptions o;
  o.records = 600;
  o.labels = 3;
  o.seed = 5;
  write_crimes_csv(path, synthetic_crimes(o));
}

}  // namespace

TEST_CASE("version and usage errors") {
  TempDir dir;
  auto r = cli(dir, "version");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("crimetype ", 0) == 0);

  r = cli(dir, "frobnicate");
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());

  r = cli(dir, "");
  CHECK(r.code == 1);

  r = cli(dir, "run --no-such-flag");
  CHECK(r.code == 1);

  r = cli(dir, "train --model svm --features " + q(dir / "none.csv"));
  CHECK(r.code != 0);
}

TEST_CASE("missing input is a data error naming the path") {
  TempDir dir;
  const auto missing = dir / "nowhere" / "crimes.csv";
  auto r = cli(dir, "run --input " + q(missing) + " --output-dir " + q(dir.path()));
  CHECK(r.code == 2);
  CHECK(r.err.find(missing.string()) != std::string::npos);

  r = cli(dir, "ingest --input " + q(missing));
  CHECK(r.code == 2);
  CHECK(r.err.find(missing.string()) != std::string::npos);
}

TEST_CASE("bad configuration values exit with a usage code") {
  TempDir dir;
  write_small_crimes(dir / "crimes.csv");
  write_file(dir / "cfg.json", R"({"input": "crimes.csv", "split_ratio": 1.5})");
  CHECK(cli(dir, "run --config " + q(dir / "cfg.json")).code == 1);
  write_file(dir / "typo.json", R"({"inptu": "crimes.csv"})");
  CHECK(cli(dir, "run --config " + q(dir / "typo.json")).code == 1);
}

TEST_CASE("run prints the manifest and honours flag overrides") {
  TempDir dir;
  write_small_crimes(dir / "crimes.csv");
  write_file(dir / "cfg.json", R"({
    "input": "crimes.csv", "seed": 3, "run_name": "cfgrun",
    "k_selection": {"method": "fixed", "fixed_k": 2, "kmax": 5, "B": 2, "n_init": 2},
    "model": {"kind": "decision_tree"},
    "kde": {"grid": 20}
  })");
  auto r = cli(dir, "run --config " + q(dir / "cfg.json") + " --output-dir " + q(dir / "out") + " --seed 9");
  REQUIRE(r.code == 0);
  const auto manifest = json::parse(r.out);
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["config"]["seed"] == 9);
  CHECK(manifest["config"]["model"]["kind"] == "decision_tree");
  CHECK(fs::exists(dir / "out" / "cfgrun" / "manifest.json"));
  CHECK(json::parse(read_file(dir / "out" / "cfgrun" / "manifest.json")) == manifest);
}

TEST_CASE("select-k on blob coordinates reports both gap rules") {
  TempDir dir;
  const auto pts = gaussian_blobs(circle_centers(7, 1.5, 0.0), 100, 0.01, 3);
  std::string csv = "X,Y\n";
  for (const auto& p : pts) csv += std::to_string(p.x) + "," + std::to_string(p.y) + "\n";
  write_file(dir / "pts.csv", csv);
  const auto r = cli(dir, "select-k --points --input " + q(dir / "pts.csv") +
                              " --method gap --kmax 16 --B 10 --n-init 3 --seed 1");
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["method"] == "gap_max");
  CHECK(j["chosen_k"] == 7);
  CHECK(j["chosen_k_max"] == 7);
  CHECK(j.contains("chosen_k_onesd"));
  CHECK(j["gap"]["rows"].size() == 16);
  CHECK(j.contains("elbow"));
}

TEST_CASE("step-by-step subcommands chain and repeat byte-identically") {
  TempDir dir;
  write_small_crimes(dir / "crimes.csv");
  const auto in = q(dir / "crimes.csv");

  auto r = cli(dir, "ingest --input " + in + " --output " + q(dir / "clean.csv"));
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["rows_kept"] == 600);

  REQUIRE(cli(dir, "aggregate --input " + in + " --granularity year --output " + q(dir / "years.csv")).code == 0);
  CHECK(read_file(dir / "years.csv").rfind("bin,count\n", 0) == 0);

  REQUIRE(cli(dir, "cluster --input " + in + " --k 2 --n-init 2 --output " + q(dir / "clusters.json")).code == 0);
  REQUIRE(cli(dir, "featurize --input " + in + " --centers " + q(dir / "clusters.json") + " --output-dir " +
                       q(dir / "feat"))
              .code == 0);
  CHECK(fs::exists(dir / "feat" / "test_features.csv"));

  for (const char* name : {"model_a.json", "model_b.json"}) {
    REQUIRE(cli(dir, "train --features " + q(dir / "feat" / "train_features.csv") +
                         " --model random_forest --hyper '{\"n_trees\": 5}' --seed 4 --output " + q(dir / name))
                .code == 0);
  }
  CHECK(read_file(dir / "model_a.json") == read_file(dir / "model_b.json"));

  r = cli(dir, "evaluate --model " + q(dir / "model_a.json") + " --features " +
                   q(dir / "feat" / "test_features.csv") + " --predictions " + q(dir / "pred.csv"));
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["model_kind"] == "random_forest");

  r = cli(dir, "smooth --predictions " + q(dir / "pred.csv") + " --grid 0,0.001,0.01");
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["epsilon_grid"].size() == 3);

  r = cli(dir, "importance --model " + q(dir / "model_a.json"));
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("rank,feature,weight\n", 0) == 0);

  // Feeding the model a matrix with different columns is a data error.
  REQUIRE(cli(dir, "featurize --input " + in + " --features Hour,X --output-dir " + q(dir / "narrow")).code == 0);
  r = cli(dir, "evaluate --model " + q(dir / "model_a.json") + " --features " +
                   q(dir / "narrow" / "test_features.csv"));
  CHECK(r.code == 2);
}
