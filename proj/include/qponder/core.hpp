#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qponder::core {

// One scored image record. `mos` is always normalized to [0, 1]; when the
// source file carried its own scale, the untouched value is kept in
// `mos_raw` so serialization can round-trip the original numbers.
struct Sample {
  std::string id;
  std::string image_ref;
  double mos = 0.0;
  std::optional<double> mos_raw;
  std::optional<std::string> distortion_type;
  std::optional<double> predicted_score;  // teacher/model score on [0, 100]
  std::vector<double> context;  // feature vector for context-driven policies

  bool operator==(const Sample&) const = default;
};

struct ScaleRange {
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const ScaleRange&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::optional<ScaleRange> scale;
  std::string provenance;  // path or label, informational only

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRecord : public IngestError {
 public:
  MalformedRecord(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public IngestError {
 public:
  explicit DuplicateId(const std::string& id);
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class MosOutOfRange : public IngestError {
 public:
  MosOutOfRange(const std::string& id, double value);
  const std::string& id() const { return id_; }
  double value() const { return value_; }

 private:
  std::string id_;
  double value_;
};

// Counter-based deterministic generator (splitmix64 core). A (seed, stream)
// pair fully determines the sequence; distinct streams from one seed are
// independent for practical purposes. No global state, safe to copy.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1), 53-bit resolution.
  double next_double() noexcept;
  // Uniform integer in [0, n). Throws std::invalid_argument when n == 0.
  std::uint64_t next_below(std::uint64_t n);
  // Uniform on [lo, hi). Requires lo <= hi.
  double next_range(double lo, double hi);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
};

// Stream-id layout used across the pipeline. Stream 0 is reserved so that
// accidental zero-initialization never collides with real consumers.
namespace streams {
inline constexpr std::uint64_t kReserved = 0;
// Rollout group for training step s (1-based), group member i in [0, n).
constexpr std::uint64_t rollout(std::uint64_t step, std::uint64_t group_size,
                                std::uint64_t i) {
  return step * group_size + i;
}
// Query selection for training step s.
constexpr std::uint64_t query(std::uint64_t step) {
  return (std::uint64_t{1} << 32) + step;
}
// Synthetic data generation, record k.
constexpr std::uint64_t synthetic(std::uint64_t k) {
  return (std::uint64_t{2} << 32) + k;
}
// Retry backoff jitter for judged record k.
constexpr std::uint64_t backoff(std::uint64_t k) {
  return (std::uint64_t{3} << 32) + k;
}
}  // namespace streams

// Maps a normalized opinion score to the 0..100 scale used by prompts and
// rewards. Throws std::domain_error outside [0, 1].
double rescale_score(double mos);

// Reads a JSONL dataset. Each line is one record with at least
// {"id", "image", "mos"}; an optional first line {"_scale": [lo, hi]}
// declares the raw score range. `scale` overrides any header. Throws
// IngestError subtypes on malformed input, std::runtime_error when the
// file cannot be opened.
Dataset ingest_dataset(const std::filesystem::path& path,
                       std::optional<ScaleRange> scale = std::nullopt);
Dataset parse_dataset(std::istream& in, const std::string& provenance,
                      std::optional<ScaleRange> scale = std::nullopt);

// Writes JSONL that ingest_dataset accepts; raw scores and the scale header
// are restored when present.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
void serialize_dataset(const Dataset& ds, std::ostream& out);

}  // namespace qponder::core
