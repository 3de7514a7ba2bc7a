#include "sdsn/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <zlib.h>

#include "sdsn/errors.hpp"
#include "sdsn/kernels.hpp"

namespace sdsn {

namespace {

constexpr char kFeatureMagic[4] = {'F', 'M', 'X', '1'};
constexpr char kModelMagic[4] = {'S', 'D', 'S', 'N'};
constexpr std::uint32_t kModelVersion = 1;

// Upper bound on any declared dimension; keeps size arithmetic far from
// overflow and rejects absurd headers before anything is allocated.
constexpr std::uint32_t kMaxDim = 1u << 24;

void append_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
}

void append_f64(std::vector<std::uint8_t>& buf, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  for (int shift = 0; shift < 64; shift += 8)
    buf.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

double read_f64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = v << 8 | p[i];
  return std::bit_cast<double>(v);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::IoError, "read failed on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::IoError, "write failed on " + path.string());
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, data, static_cast<uInt>(len)));
}

double parse_cell(const std::string& token, std::size_t line, std::size_t column) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end != nullptr && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (end == begin || end == nullptr || *end != '\0')
    raise(ErrorCode::ParseError, "bad number '" + token + "' at line " + std::to_string(line) +
                                     ", column " + std::to_string(column));
  if (!std::isfinite(v))
    raise(ErrorCode::NonFinite, "non-finite value at line " + std::to_string(line) +
                                    ", column " + std::to_string(column));
  return v;
}

Matrix load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) {
        blank = false;
        break;
      }
    if (blank) continue;

    std::vector<double> row;
    std::stringstream ss(line);
    std::string token;
    std::size_t column = 0;
    while (std::getline(ss, token, ',')) {
      ++column;
      row.push_back(parse_cell(token, line_no, column));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      raise(ErrorCode::ShapeError, "line " + std::to_string(line_no) + " has " +
                                       std::to_string(row.size()) + " cells, expected " +
                                       std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) raise(ErrorCode::ShapeError, path.string() + " holds no data rows");

  // One example per CSV row; transpose into column-per-example.
  Matrix m(rows.front().size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t d = 0; d < rows[i].size(); ++d) m(d, i) = rows[i][d];
  return m;
}

void save_features_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  char cell[40];
  for (std::size_t i = 0; i < m.cols(); ++i) {
    for (std::size_t d = 0; d < m.rows(); ++d) {
      std::snprintf(cell, sizeof cell, "%.17g", m(d, i));
      out << cell;
      if (d + 1 < m.rows()) out << ',';
    }
    out << '\n';
  }
  if (!out) raise(ErrorCode::IoError, "write failed on " + path.string());
}

Matrix load_features_bin(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0)
    raise(ErrorCode::ParseError, path.string() + " is not an FMX1 feature file");
  const std::uint32_t rows = read_u32(bytes.data() + 4);
  const std::uint32_t cols = read_u32(bytes.data() + 8);
  if (rows > kMaxDim || cols > kMaxDim)
    raise(ErrorCode::ShapeError, path.string() + ": implausible dimensions in header");
  const std::size_t expected = 12 + 8 * static_cast<std::size_t>(rows) * cols;
  if (rows == 0 || cols == 0 || bytes.size() != expected)
    raise(ErrorCode::ShapeError, path.string() + ": payload does not match " +
                                     std::to_string(rows) + "x" + std::to_string(cols) +
                                     " header");
  Matrix m(rows, cols);
  const std::uint8_t* p = bytes.data() + 12;
  for (std::size_t i = 0; i < m.size(); ++i, p += 8) {
    const double v = read_f64(p);
    if (!std::isfinite(v))
      raise(ErrorCode::NonFinite, path.string() + ": non-finite value at flat index " +
                                      std::to_string(i));
    m.data()[i] = v;
  }
  return m;
}

void save_features_bin(const std::filesystem::path& path, const Matrix& m) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(12 + 8 * m.size());
  bytes.insert(bytes.end(), kFeatureMagic, kFeatureMagic + 4);
  append_u32(bytes, static_cast<std::uint32_t>(m.rows()));
  append_u32(bytes, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i) append_f64(bytes, m.data()[i]);
  write_file(path, bytes);
}

void append_matrix_row_major(std::vector<std::uint8_t>& buf, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) append_f64(buf, m(r, c));
}

}  // namespace

FeatureFormat format_from_string(const std::string& name) {
  if (name == "csv") return FeatureFormat::Csv;
  if (name == "bin") return FeatureFormat::Bin;
  raise(ErrorCode::InvalidConfig, "unknown format '" + name + "' (expected csv or bin)");
}

const char* to_string(FeatureFormat format) {
  return format == FeatureFormat::Csv ? "csv" : "bin";
}

Matrix load_features(const std::filesystem::path& path, FeatureFormat format) {
  Matrix m = format == FeatureFormat::Csv ? load_features_csv(path) : load_features_bin(path);
  return m;
}

void save_features(const std::filesystem::path& path, const Matrix& m, FeatureFormat format) {
  if (m.empty()) raise(ErrorCode::ShapeError, "refusing to save an empty feature matrix");
  if (!m.all_finite()) raise(ErrorCode::NonFinite, "refusing to save non-finite features");
  if (format == FeatureFormat::Csv)
    save_features_csv(path, m);
  else
    save_features_bin(path, m);
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) {
        blank = false;
        break;
      }
    if (blank) continue;
    const char* begin = line.c_str();
    char* end = nullptr;
    const long v = std::strtol(begin, &end, 10);
    while (end != nullptr && *end != '\0' && std::isspace(static_cast<unsigned char>(*end)))
      ++end;
    if (end == begin || *end != '\0')
      raise(ErrorCode::ParseError,
            "bad label '" + line + "' at line " + std::to_string(line_no));
    if (v < 0)
      raise(ErrorCode::LabelOutOfRange,
            "negative label at line " + std::to_string(line_no));
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) raise(ErrorCode::ShapeError, path.string() + " holds no labels");
  return labels;
}

void save_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (int label : labels) out << label << '\n';
  if (!out) raise(ErrorCode::IoError, "write failed on " + path.string());
}

void save_model(const std::filesystem::path& path, const StackModel& model) {
  std::vector<std::uint8_t> payload;
  append_u32(payload, kModelVersion);
  ActivationKind kind =
      model.modules.empty() ? ActivationKind::Sigmoid : model.modules.front().activation;
  append_u32(payload, kind == ActivationKind::Sigmoid ? 0u : 1u);
  append_u32(payload, static_cast<std::uint32_t>(model.modules.size()));
  for (const SnnmModule& m : model.modules) {
    append_u32(payload, static_cast<std::uint32_t>(m.input_dim()));
    append_u32(payload, static_cast<std::uint32_t>(m.hidden_units()));
    append_u32(payload, static_cast<std::uint32_t>(m.class_count()));
  }
  for (const SnnmModule& m : model.modules) {
    append_matrix_row_major(payload, m.W);
    append_matrix_row_major(payload, m.U);
  }

  std::vector<std::uint8_t> bytes;
  bytes.reserve(4 + payload.size() + 4);
  bytes.insert(bytes.end(), kModelMagic, kModelMagic + 4);
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  append_u32(bytes, crc_of(payload.data(), payload.size()));
  write_file(path, bytes);
}

StackModel load_model(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 8)
    raise(ErrorCode::ChecksumMismatch, path.string() + " is truncated");
  if (std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    raise(ErrorCode::ParseError, path.string() + " is not an SDSN model file");

  const std::size_t payload_len = bytes.size() - 8;
  const std::uint32_t stored_crc = read_u32(bytes.data() + 4 + payload_len);
  if (crc_of(bytes.data() + 4, payload_len) != stored_crc)
    raise(ErrorCode::ChecksumMismatch, path.string() + ": checksum does not match");

  const std::uint8_t* p = bytes.data() + 4;
  const std::uint8_t* payload_end = p + payload_len;
  auto need = [&](std::size_t n) {
    if (static_cast<std::size_t>(payload_end - p) < n)
      raise(ErrorCode::DimMismatch,
            path.string() + ": declared dimensions exceed the stored payload");
  };

  need(12);
  const std::uint32_t version = read_u32(p);
  p += 4;
  if (version != kModelVersion)
    raise(ErrorCode::VersionUnsupported, path.string() + ": version " +
                                             std::to_string(version) + " (expected " +
                                             std::to_string(kModelVersion) + ")");
  const std::uint32_t activation_code = read_u32(p);
  p += 4;
  if (activation_code > 1)
    raise(ErrorCode::ParseError,
          path.string() + ": unknown activation code " + std::to_string(activation_code));
  const std::uint32_t layer_count = read_u32(p);
  p += 4;
  if (layer_count == 0)
    raise(ErrorCode::InvariantViolation, path.string() + ": model has no layers");

  struct Dims {
    std::uint32_t d, l, c;
  };
  need(12 * static_cast<std::size_t>(layer_count));
  std::vector<Dims> dims(layer_count);
  for (Dims& e : dims) {
    e.d = read_u32(p);
    e.l = read_u32(p + 4);
    e.c = read_u32(p + 8);
    p += 12;
    if (e.d == 0 || e.l == 0 || e.c == 0 || e.d > kMaxDim || e.l > kMaxDim || e.c > kMaxDim)
      raise(ErrorCode::DimMismatch, path.string() + ": implausible layer dimensions");
  }

  StackModel model;
  model.modules.reserve(layer_count);
  for (const Dims& e : dims) {
    need(8 * (static_cast<std::size_t>(e.d) * e.l + static_cast<std::size_t>(e.l) * e.c));
    SnnmModule m;
    m.activation = activation_code == 0 ? ActivationKind::Sigmoid : ActivationKind::Relu;
    m.W = Matrix(e.d, e.l);
    m.U = Matrix(e.l, e.c);
    for (std::size_t r = 0; r < m.W.rows(); ++r)
      for (std::size_t c = 0; c < m.W.cols(); ++c, p += 8) m.W(r, c) = read_f64(p);
    for (std::size_t r = 0; r < m.U.rows(); ++r)
      for (std::size_t c = 0; c < m.U.cols(); ++c, p += 8) m.U(r, c) = read_f64(p);
    model.modules.push_back(std::move(m));
  }
  if (p != payload_end)
    raise(ErrorCode::DimMismatch,
          path.string() + ": payload is longer than the declared dimensions");

  model.input_dim = dims.front().d;
  model.class_count = dims.front().c;
  validate_stack(model);
  return model;
}

Matrix random_projection(const Matrix& X, std::size_t target_dim, std::uint64_t seed) {
  if (target_dim == 0) raise(ErrorCode::InvalidConfig, "target dimension must be >= 1");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(X.rows()));
  Matrix projector(target_dim, X.rows());
  double* p = projector.data();
  for (std::size_t i = 0; i < projector.size(); ++i) p[i] = dist(gen) * scale;
  return kernels::matmul(projector, X);
}

Matrix normalize_columns(const Matrix& X) {
  Matrix out = X;
  for (std::size_t c = 0; c < out.cols(); ++c) {
    double* col = out.col(c);
    double peak = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r) peak = std::max(peak, std::abs(col[r]));
    const double scale = 1.0 / std::max(peak, std::numeric_limits<double>::min());
    for (std::size_t r = 0; r < out.rows(); ++r) col[r] *= scale;
  }
  return out;
}

DatasetBundle synth_blobs(std::size_t classes, std::size_t dim, std::size_t per_class,
                          double separation, double noise_sd, std::uint64_t seed) {
  if (classes == 0 || dim == 0 || per_class == 0)
    raise(ErrorCode::InvalidConfig, "synth_blobs: counts must be >= 1");
  if (!(separation > 0.0) || noise_sd < 0.0)
    raise(ErrorCode::InvalidConfig, "synth_blobs: separation must be > 0 and noise_sd >= 0");

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);

  DatasetBundle bundle;
  bundle.class_count = classes;
  bundle.features = Matrix(dim, classes * per_class);
  bundle.labels.resize(classes * per_class);

  std::vector<double> mean(dim);
  for (std::size_t c = 0; c < classes; ++c) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        mean[d] = dist(gen);
        norm += mean[d] * mean[d];
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (std::size_t d = 0; d < dim; ++d) mean[d] *= separation / norm;

    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t col = c * per_class + i;
      double* x = bundle.features.col(col);
      for (std::size_t d = 0; d < dim; ++d)
        x[d] = mean[d] + (noise_sd > 0.0 ? noise_sd * dist(gen) : 0.0);
      bundle.labels[col] = static_cast<int>(c);
    }
  }

  std::ostringstream tag;
  tag << "synth_blobs(classes=" << classes << ",dim=" << dim << ",per_class=" << per_class
      << ",separation=" << separation << ",noise_sd=" << noise_sd << ",seed=" << seed << ")";
  bundle.provenance = tag.str();
  return bundle;
}

SplitSpec SplitSpec::per_class(std::size_t count) {
  SplitSpec s;
  s.by_count = true;
  s.count = count;
  return s;
}

SplitSpec SplitSpec::fraction(double value) {
  SplitSpec s;
  s.by_count = false;
  s.frac = value;
  return s;
}

std::pair<DatasetBundle, DatasetBundle> split(const DatasetBundle& bundle,
                                              const SplitSpec& spec, std::uint64_t seed) {
  if (bundle.class_count == 0 || bundle.labels.empty())
    raise(ErrorCode::InvalidConfig, "split: empty bundle");
  if (spec.by_count && spec.count == 0)
    raise(ErrorCode::InvalidConfig, "split: train count must be >= 1");
  if (!spec.by_count && !(spec.frac > 0.0 && spec.frac < 1.0))
    raise(ErrorCode::InvalidConfig, "split: train fraction must lie in (0, 1)");

  std::vector<std::vector<std::size_t>> by_class(bundle.class_count);
  for (std::size_t i = 0; i < bundle.labels.size(); ++i) {
    const int label = bundle.labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= bundle.class_count)
      raise(ErrorCode::LabelOutOfRange, "split: label " + std::to_string(label) +
                                            " outside [0, " +
                                            std::to_string(bundle.class_count) + ")");
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }

  std::mt19937_64 gen(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t c = 0; c < bundle.class_count; ++c) {
    std::vector<std::size_t>& idx = by_class[c];
    const std::size_t have = idx.size();
    const std::size_t want =
        spec.by_count
            ? spec.count
            : static_cast<std::size_t>(std::llround(spec.frac * static_cast<double>(have)));
    if (want == 0 || want >= have)
      raise(ErrorCode::InsufficientExamples,
            "class " + std::to_string(c) + " has " + std::to_string(have) +
                " examples; cannot take " + std::to_string(want) +
                " for training and keep a non-empty test split");
    std::shuffle(idx.begin(), idx.end(), gen);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want));
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(want), idx.end());
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want));
    test_idx.insert(test_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(want), idx.end());
  }

  auto take = [&](const std::vector<std::size_t>& indices, const char* tag) {
    DatasetBundle out;
    out.class_count = bundle.class_count;
    out.provenance = bundle.provenance + tag;
    out.features = Matrix(bundle.features.rows(), indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
      const double* src = bundle.features.col(indices[j]);
      double* dst = out.features.col(j);
      for (std::size_t r = 0; r < out.features.rows(); ++r) dst[r] = src[r];
      out.labels.push_back(bundle.labels[indices[j]]);
    }
    return out;
  };

  return {take(train_idx, "[train]"), take(test_idx, "[test]")};
}

}  // namespace sdsn
