#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sdsn/matrix.hpp"
#include "sdsn/model.hpp"

namespace sdsn {

enum class FeatureFormat { Csv, Bin };

FeatureFormat format_from_string(const std::string& name);
const char* to_string(FeatureFormat format);

struct DatasetBundle {
  Matrix features;          // D x N, one example per column
  std::vector<int> labels;  // N entries in [0, class_count)
  std::size_t class_count = 0;
  std::string provenance;
};

/// CSV holds one example per row and is transposed on load; the "FMX1"
/// binary stores the D x N matrix directly (u32 rows, u32 cols, then
/// little-endian f64 column-major payload). Non-finite values are rejected.
Matrix load_features(const std::filesystem::path& path, FeatureFormat format);
void save_features(const std::filesystem::path& path, const Matrix& m, FeatureFormat format);

/// Newline-delimited non-negative integers.
std::vector<int> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const std::vector<int>& labels);

/// "SDSN" v1 binary: activation code, layer count, per-layer dims, then
/// per-layer W and U as little-endian f64 row-major, with a trailing CRC32
/// over everything after the magic. Round-trips are bit-exact.
void save_model(const std::filesystem::path& path, const StackModel& model);

/// Verifies the checksum and runs validate_stack before returning.
StackModel load_model(const std::filesystem::path& path);

/// Projects X through a seeded n x D matrix of Normal(0, 1)/sqrt(D) entries.
Matrix random_projection(const Matrix& X, std::size_t target_dim, std::uint64_t seed);

/// Scales each column by 1/max(|column|_inf, tiny) so entries lie in [-1, 1];
/// all-zero columns pass through unchanged.
Matrix normalize_columns(const Matrix& X);

/// Gaussian class clusters with means at separation-scaled random unit
/// directions; examples are ordered class by class.
DatasetBundle synth_blobs(std::size_t classes, std::size_t dim, std::size_t per_class,
                          double separation, double noise_sd, std::uint64_t seed);

struct SplitSpec {
  static SplitSpec per_class(std::size_t count);
  static SplitSpec fraction(double value);

  bool by_count = true;
  std::size_t count = 0;
  double frac = 0.0;
};

/// Class-stratified split, sampled without replacement; each class must
/// keep at least one example on both sides.
std::pair<DatasetBundle, DatasetBundle> split(const DatasetBundle& bundle,
                                              const SplitSpec& spec, std::uint64_t seed);

}  // namespace sdsn
