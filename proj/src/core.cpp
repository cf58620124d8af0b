#include "qponder/core.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace qponder::core {

using nlohmann::json;

MalformedRecord::MalformedRecord(std::size_t line, const std::string& what)
    : IngestError("line " + std::to_string(line) + ": " + what), line_(line) {}

DuplicateId::DuplicateId(const std::string& id)
    : IngestError("duplicate record id \"" + id + "\""), id_(id) {}

MosOutOfRange::MosOutOfRange(const std::string& id, double value)
    : IngestError("record \"" + id + "\": score " + std::to_string(value) +
                  " outside the declared range"),
      id_(id),
      value_(value) {}

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed),
      stream_(stream_id),
      state_(mix64(mix64(seed + kGamma) ^ mix64(stream_id + 0xbf58476d1ce4e5b9ull))) {}

std::uint64_t SeededRng::next_u64() noexcept {
  state_ += kGamma;
  return mix64(state_);
}

double SeededRng::next_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % n;
  }
}

double SeededRng::next_range(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("next_range: lo > hi");
  return lo + (hi - lo) * next_double();
}

double rescale_score(double mos) {
  if (!(mos >= 0.0 && mos <= 1.0))
    throw std::domain_error("rescale_score: normalized score outside [0, 1]");
  return mos * 100.0;
}

namespace {

double require_number(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end())
    throw MalformedRecord(line, std::string("missing \"") + key + "\"");
  if (!it->is_number())
    throw MalformedRecord(line, std::string("\"") + key + "\" is not a number");
  return it->get<double>();
}

std::string require_string(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end())
    throw MalformedRecord(line, std::string("missing \"") + key + "\"");
  if (!it->is_string())
    throw MalformedRecord(line, std::string("\"") + key + "\" is not a string");
  return it->get<std::string>();
}

std::optional<ScaleRange> parse_scale_header(const json& j, std::size_t line) {
  const auto it = j.find("_scale");
  if (it == j.end()) return std::nullopt;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
      !(*it)[1].is_number())
    throw MalformedRecord(line, "\"_scale\" must be [lo, hi]");
  ScaleRange r{(*it)[0].get<double>(), (*it)[1].get<double>()};
  if (!(r.lo < r.hi))
    throw MalformedRecord(line, "\"_scale\" range is empty or inverted");
  return r;
}

}  // namespace

Dataset parse_dataset(std::istream& in, const std::string& provenance,
                      std::optional<ScaleRange> scale) {
  Dataset ds;
  ds.provenance = provenance;
  std::unordered_set<std::string> seen;
  std::string raw_line;
  std::size_t line_no = 0;
  bool saw_record = false;

  while (std::getline(in, raw_line)) {
    ++line_no;
    const auto begin = raw_line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;  // blank line

    json j = json::parse(raw_line, nullptr, false);
    if (j.is_discarded())
      throw MalformedRecord(line_no, "invalid JSON");
    if (!j.is_object())
      throw MalformedRecord(line_no, "record is not a JSON object");

    if (j.contains("_scale")) {
      if (saw_record || ds.scale.has_value())
        throw MalformedRecord(line_no,
                              "\"_scale\" allowed once, before any record");
      ds.scale = parse_scale_header(j, line_no);
      continue;
    }

    Sample s;
    s.id = require_string(j, "id", line_no);
    if (s.id.empty()) throw MalformedRecord(line_no, "\"id\" is empty");
    if (!seen.insert(s.id).second) throw DuplicateId(s.id);
    s.image_ref = require_string(j, "image", line_no);
    const double raw_mos = require_number(j, "mos", line_no);
    if (!std::isfinite(raw_mos))
      throw MalformedRecord(line_no, "\"mos\" is not finite");

    const std::optional<ScaleRange> effective = scale ? scale : ds.scale;
    if (effective) {
      if (raw_mos < effective->lo || raw_mos > effective->hi)
        throw MosOutOfRange(s.id, raw_mos);
      s.mos_raw = raw_mos;
      s.mos = (raw_mos - effective->lo) / (effective->hi - effective->lo);
    } else {
      if (raw_mos < 0.0 || raw_mos > 1.0) throw MosOutOfRange(s.id, raw_mos);
      s.mos = raw_mos;
    }

    if (const auto it = j.find("distortion_type"); it != j.end()) {
      if (!it->is_string())
        throw MalformedRecord(line_no, "\"distortion_type\" is not a string");
      s.distortion_type = it->get<std::string>();
    }
    if (const auto it = j.find("predicted_score"); it != j.end()) {
      if (!it->is_number())
        throw MalformedRecord(line_no, "\"predicted_score\" is not a number");
      const double p = it->get<double>();
      if (!std::isfinite(p) || p < 0.0 || p > 100.0)
        throw MalformedRecord(line_no, "\"predicted_score\" outside [0, 100]");
      s.predicted_score = p;
    }
    if (const auto it = j.find("ctx"); it != j.end()) {
      if (!it->is_array())
        throw MalformedRecord(line_no, "\"ctx\" is not an array");
      for (const auto& v : *it) {
        if (!v.is_number() || !std::isfinite(v.get<double>()))
          throw MalformedRecord(line_no, "\"ctx\" entry is not a finite number");
        s.context.push_back(v.get<double>());
      }
    }

    saw_record = true;
    ds.samples.push_back(std::move(s));
  }

  if (scale) ds.scale = scale;  // explicit argument wins over any header
  return ds;
}

Dataset ingest_dataset(const std::filesystem::path& path,
                       std::optional<ScaleRange> scale) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open dataset file: " + path.string());
  return parse_dataset(in, path.string(), scale);
}

void serialize_dataset(const Dataset& ds, std::ostream& out) {
  if (ds.scale) {
    json h;
    h["_scale"] = {ds.scale->lo, ds.scale->hi};
    out << h.dump() << '\n';
  }
  for (const Sample& s : ds.samples) {
    json j;
    j["id"] = s.id;
    j["image"] = s.image_ref;
    j["mos"] = s.mos_raw ? *s.mos_raw : s.mos;
    if (s.distortion_type) j["distortion_type"] = *s.distortion_type;
    if (s.predicted_score) j["predicted_score"] = *s.predicted_score;
    if (!s.context.empty()) j["ctx"] = s.context;
    out << j.dump() << '\n';
  }
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open for writing: " + path.string());
  serialize_dataset(ds, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace qponder::core
