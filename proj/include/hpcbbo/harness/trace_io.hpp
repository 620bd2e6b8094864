#pragma once

// JSON-lines trace files. The first line is a header:
//   {"schema_version":"1","config_hash":"...","seed":0,"algorithm":"...",
//    "accounting":"batch","complete":true,"evaluation_errors":0}
// followed by one record per evaluation:
//   {"batch":0,"morph_idx":0,"iter":0,"phase":"random_init",
//    "morph":[...3],"ctrl":[...6],"reward":12.5}

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hpcbbo/errors.hpp"
#include "hpcbbo/trace.hpp"

namespace hpcbbo::harness {

inline constexpr const char* kSchemaVersion = "1";

struct TraceHeader {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string algorithm;
  /// "batch" when a fabrication cycle is a batch, "evaluation" when every
  /// evaluation fabricates its own design.
  std::string accounting = "batch";
  bool complete = true;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct TraceFile {
  TraceHeader header;
  RunTrace trace;

  friend bool operator==(const TraceFile&, const TraceFile&) = default;
};

inline void write_trace(std::ostream& os, const TraceFile& file) {
  using ojson = nlohmann::ordered_json;
  ojson h;
  h["schema_version"] = kSchemaVersion;
  h["config_hash"] = file.header.config_hash;
  h["seed"] = file.header.seed;
  h["algorithm"] = file.header.algorithm;
  h["accounting"] = file.header.accounting;
  h["complete"] = file.header.complete;
  h["evaluation_errors"] = file.trace.evaluation_errors;
  os << h.dump() << '\n';
  for (const auto& r : file.trace.records) {
    ojson j;
    j["batch"] = r.batch;
    j["morph_idx"] = r.morph_idx;
    j["iter"] = r.iter;
    j["phase"] = to_string(r.phase);
    j["morph"] = r.morph.leg_ratios;
    j["ctrl"] = r.ctrl.to_array();
    j["reward"] = r.reward;
    os << j.dump() << '\n';
  }
}

/// Best reward per (batch, morph_idx) group, in order of first appearance.
inline std::vector<double> best_per_morphology(const std::vector<EvalRecord>& records) {
  std::vector<double> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool fresh =
        i == 0 || records[i].batch != records[i - 1].batch || records[i].morph_idx != records[i - 1].morph_idx;
    if (fresh)
      out.push_back(records[i].reward);
    else
      out.back() = std::max(out.back(), records[i].reward);
  }
  return out;
}

namespace detail {

template <std::size_t N>
std::array<double, N> read_array(const nlohmann::json& j, const char* key, std::size_t row) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != N)
    throw ParseError(std::string("field '") + key + "' must be an array of " + std::to_string(N) + " numbers", row);
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[key][i].is_number()) throw ParseError(std::string("field '") + key + "' must contain numbers", row);
    out[i] = j[key][i].get<double>();
  }
  return out;
}

inline std::size_t read_count(const nlohmann::json& j, const char* key, std::size_t row) {
  if (!j.contains(key) || !j[key].is_number_unsigned())
    throw ParseError(std::string("field '") + key + "' must be a non-negative integer", row);
  return j[key].get<std::size_t>();
}

}  // namespace detail

inline TraceFile read_trace(std::istream& in) {
  using nlohmann::json;
  TraceFile file;
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), row);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", row);
    if (!have_header) {
      if (!j.contains("schema_version") || j["schema_version"] != kSchemaVersion)
        throw ParseError("missing or unsupported schema_version", row);
      try {
        file.header.config_hash = j.at("config_hash").get<std::string>();
        file.header.seed = j.at("seed").get<std::uint64_t>();
        file.header.algorithm = j.at("algorithm").get<std::string>();
        file.header.accounting = j.at("accounting").get<std::string>();
        file.header.complete = j.at("complete").get<bool>();
        file.trace.evaluation_errors = j.at("evaluation_errors").get<std::size_t>();
      } catch (const json::exception& e) {
        throw ParseError(std::string("bad header: ") + e.what(), row);
      }
      if (file.header.accounting != "batch" && file.header.accounting != "evaluation")
        throw ParseError("accounting must be 'batch' or 'evaluation'", row);
      have_header = true;
      continue;
    }
    EvalRecord r;
    r.batch = detail::read_count(j, "batch", row);
    r.morph_idx = detail::read_count(j, "morph_idx", row);
    r.iter = detail::read_count(j, "iter", row);
    if (!j.contains("phase") || !j["phase"].is_string()) throw ParseError("field 'phase' must be a string", row);
    try {
      r.phase = phase_from_string(j["phase"].get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), row);
    }
    r.morph.leg_ratios = detail::read_array<kMorphologyDim>(j, "morph", row);
    r.ctrl = ControllerParams::from_array(detail::read_array<kControllerDim>(j, "ctrl", row));
    if (!j.contains("reward") || !j["reward"].is_number()) throw ParseError("field 'reward' must be a number", row);
    r.reward = j["reward"].get<double>();
    file.trace.records.push_back(r);
  }
  if (!have_header) throw ParseError("empty trace file");
  file.trace.best_per_morphology = best_per_morphology(file.trace.records);
  return file;
}

inline void save_trace(const std::string& path, const TraceFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_trace(out, file);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline TraceFile load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return read_trace(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace hpcbbo::harness
