#include "support/synthetic.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "crimetype/random.hpp"

namespace crimetype::testing {

std::vector<Point2> circle_centers(int n, double radius, double phase) {
  std::vector<Point2> out;
  for (int i = 0; i < n; ++i) {
    const double a = phase + 2.0 * std::numbers::pi * i / n;
    out.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return out;
}

std::vector<Point2> gaussian_blobs(std::span<const Point2> centers, std::size_t per_blob, double sigma,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point2> out;
  out.reserve(centers.size() * per_blob);
  for (const auto& c : centers) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      const double dx = sigma * standard_normal(rng);
      const double dy = sigma * standard_normal(rng);
      out.push_back({c.x + dx, c.y + dy});
    }
  }
  return out;
}

namespace {

const char* const kStreets[] = {"MARKET",   "CHESTNUT", "WALNUT", "BROAD",    "SPRUCE", "PINE",
                                "LOCUST",   "ARCH",     "RACE",   "VINE",     "GIRARD", "LEHIGH",
                                "ALLEGHENY", "ERIE",    "OREGON", "PASSYUNK", "FRANKFORD", "GERMANTOWN"};
const char* const kTypes[] = {"ST", "AVE", "BLVD", "RD"};

int days_in_month(int y, int m) {
  static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : d[m - 1];
}

}  // namespace

std::vector<CrimeRecord> synthetic_crimes(const SyntheticCrimeOptions& o) {
  Rng rng(o.seed);
  // Homes on a jittered 6x6 lattice inside the default bounding box.
  std::vector<Point2> homes;
  for (int l = 0; l < o.labels; ++l) {
    homes.push_back({-75.24 + 0.04 * (l % 6) + 0.01 * uniform01(rng),
                     39.90 + 0.035 * (l / 6 % 6) + 0.01 * uniform01(rng)});
  }
  std::vector<double> cumulative;
  double total = 0;
  for (int l = 0; l < o.labels; ++l) {
    total += 1.0 / (1.0 + l / 4.0);
    cumulative.push_back(total);
  }
  const int years = o.last_year - o.first_year + 1;

  std::vector<CrimeRecord> out;
  out.reserve(o.records);
  for (std::size_t i = 0; i < o.records; ++i) {
    const double u = uniform01(rng) * total;
    int label = 0;
    while (label + 1 < o.labels && cumulative[label] < u) ++label;

    CrimeRecord r;
    r.label = ClassLabel{label};
    r.x = homes[label].x + o.spatial_sigma * standard_normal(rng);
    r.y = homes[label].y + o.spatial_sigma * standard_normal(rng);
    const int year = o.first_year + static_cast<int>(uniform_index(rng, years));
    const int month = 1 + static_cast<int>(uniform_index(rng, 12));
    const int day = 1 + static_cast<int>(uniform_index(rng, days_in_month(year, month)));
    const int hour = static_cast<int>(std::lround(3.0 * label + o.hour_sigma * standard_normal(rng)));
    const int minute = static_cast<int>(uniform_index(rng, 60));
    r.timestamp = Timestamp{year, month, day, ((hour % 24) + 24) % 24, minute};

    const char* street = kStreets[label % std::size(kStreets)];
    const char* type = kTypes[label % std::size(kTypes)];
    std::ostringstream addr;
    if (uniform01(rng) < 0.25) {
      addr << street << ' ' << type << " / " << kStreets[(label + 5) % std::size(kStreets)] << " ST";
    } else {
      addr << (1 + uniform_index(rng, 40)) * 100 << " BLOCK " << street << ' ' << type;
    }
    r.address = addr.str();
    r.district = 1 + label % 22;
    out.push_back(std::move(r));
  }
  return out;
}

void write_crimes_csv(const std::filesystem::path& path, std::span<const CrimeRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_records_csv(out, records);
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    if (std::filesystem::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace crimetype::testing
