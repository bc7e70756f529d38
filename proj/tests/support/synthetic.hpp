#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crimetype/ingest.hpp"
#include "crimetype/kmeans.hpp"

namespace crimetype::testing {

/// n points evenly spaced on a circle, starting at `phase` radians.
std::vector<Point2> circle_centers(int n, double radius, double phase);

/// Isotropic Gaussian blobs, per_blob points each, blob-major order.
std::vector<Point2> gaussian_blobs(std::span<const Point2> centers, std::size_t per_blob, double sigma,
                                   std::uint64_t seed);

struct SyntheticCrimeOptions {
  std::size_t records = 5000;
  int labels = kLabelCount;
  int first_year = 2006;
  int last_year = 2015;
  double spatial_sigma = 0.008;  // degrees around each label's home location
  double hour_sigma = 1.5;
  std::uint64_t seed = 1;
};

/// Incidents whose location, hour, street and district depend on the label, so a
/// classifier has something real to find. Label frequencies are skewed.
std::vector<CrimeRecord> synthetic_crimes(const SyntheticCrimeOptions& options);

void write_crimes_csv(const std::filesystem::path& path, std::span<const CrimeRecord> records);

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "crimetype");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace crimetype::testing
