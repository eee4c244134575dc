#include <bit>
#include <cmath>
#include <cstring>

#include "motiflab/clustering.hpp"

namespace motiflab::clustering {

static_assert(std::endian::native == std::endian::little,
              "matrix files are written in native order and assume a little-endian host");

std::string to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

Metric parse_metric(std::string_view s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected cosine or euclidean)");
}

EmbeddingMatrix embed_records(std::span<const extraction::MotifRecord> records,
                              gateway::ModelGateway& gateway, const std::string& model,
                              Metric downstream) {
  if (records.empty()) throw PreconditionError("embed_records: no records");
  gateway::EmbeddingRequest req{model, {}};
  req.texts.reserve(records.size());
  for (const auto& r : records) req.texts.push_back(r.sentence);
  const auto vectors = gateway.embed(req);

  const std::size_t d = vectors.front().size();
  EmbeddingMatrix out{Matrix(records.size(), d), {}};
  out.record_index.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.record_index[i] = i;
    auto row = out.rows.row(i);
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double v = vectors[i][k];
      if (!std::isfinite(v)) {
        throw FormatError("embedding for record " + records[i].novel_id + "#" +
                          std::to_string(records[i].chunk_index) + "/" +
                          std::to_string(records[i].ordinal) + " has a non-finite component");
      }
      row[k] = v;
      norm += v * v;
    }
    if (downstream == Metric::cosine) {
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        throw FormatError("embedding for record " + std::to_string(i) +
                          " is the zero vector; cosine distance is undefined");
      }
      for (double& v : row) v /= norm;
    }
  }
  return out;
}

namespace {
constexpr char kMagic[8] = {'M', 'O', 'T', 'I', 'F', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF64 = 1;
constexpr std::size_t kHeaderSize = 32;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t off) {
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  return v;
}
}  // namespace

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  out.reserve(kHeaderSize + m.data().size() * sizeof(double));
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, kDtypeF64);
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  out.append(reinterpret_cast<const char*>(m.data().data()), m.data().size() * sizeof(double));
  write_file_atomic(path, out);
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  const auto bad = [&](const std::string& why) {
    return FormatError(path.string() + ": " + why);
  };
  if (in.size() < kHeaderSize || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw bad("not a matrix file (bad magic)");
  }
  if (get<std::uint32_t>(in, 8) != kVersion) throw bad("unsupported format version");
  if (get<std::uint32_t>(in, 12) != kDtypeF64) throw bad("unsupported dtype");
  const auto rows = get<std::uint64_t>(in, 16);
  const auto cols = get<std::uint64_t>(in, 24);
  if (cols != 0 && rows > (in.size() / sizeof(double)) / cols) throw bad("truncated body");
  const std::size_t count = rows * cols;
  if (in.size() != kHeaderSize + count * sizeof(double)) throw bad("body size does not match header");
  std::vector<double> data(count);
  std::memcpy(data.data(), in.data() + kHeaderSize, count * sizeof(double));
  return Matrix(rows, cols, std::move(data));
}

}  // namespace motiflab::clustering
