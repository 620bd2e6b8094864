#pragma once

// Experiment configuration: a JSON object whose fields are checked strictly.
//
//   {
//     "algorithm": "hpc_bbo_contextual",
//     "seeds": [0, 1, 2],
//     "num_batches": 5, "K": 5, "num_iters": 50, "init_evals": 5,
//     "output_dir": "runs/contextual"
//   }
//
// Flat baselines (standard_bo, random_search, cmaes) take "budget" instead of
// the batch fields. Optional blocks: "bounds", "acquisition", "surrogate",
// "cmaes", "gp", plus "threads" (0 = one per hardware thread).

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpcbbo/cmaes.hpp"
#include "hpcbbo/hpc_bbo.hpp"
#include "hpcbbo/surrogate.hpp"

namespace hpcbbo::harness {

using json = nlohmann::json;

enum class Algorithm { hpc_bbo_contextual, hpc_bbo_noncontextual, standard_bo, random_search, cmaes };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::hpc_bbo_contextual: return "hpc_bbo_contextual";
    case Algorithm::hpc_bbo_noncontextual: return "hpc_bbo_noncontextual";
    case Algorithm::standard_bo: return "standard_bo";
    case Algorithm::random_search: return "random_search";
    case Algorithm::cmaes: return "cmaes";
  }
  return "";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  for (auto a : {Algorithm::hpc_bbo_contextual, Algorithm::hpc_bbo_noncontextual, Algorithm::standard_bo,
                 Algorithm::random_search, Algorithm::cmaes})
    if (s == to_string(a)) return a;
  throw ConfigError("algorithm: unknown value '" + s + "'");
}

inline bool is_batched(Algorithm a) {
  return a == Algorithm::hpc_bbo_contextual || a == Algorithm::hpc_bbo_noncontextual;
}

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::hpc_bbo_contextual;
  std::vector<std::uint64_t> seeds{0};
  std::size_t num_batches = 5;
  std::size_t K = 5;
  std::size_t num_iters = 50;
  std::size_t init_evals = 5;
  std::size_t budget = 250;
  DesignSpace space;
  AcquisitionConfig acquisition;
  GpSchedule gp;
  surrogate::SurrogateConfig surrogate;
  double cmaes_sigma0 = 0.3;
  std::string output_dir = ".";
  std::size_t threads = 0;

  void validate() const {
    if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      throw ConfigError("seeds: duplicate seed");
    if (is_batched(algorithm)) {
      if (num_batches < 1 || K < 1 || num_iters < 1) throw ConfigError("num_batches, K, num_iters: must be >= 1");
    } else if (budget < 1) {
      throw ConfigError("budget: must be >= 1");
    }
    if (!(cmaes_sigma0 > 0.0)) throw ConfigError("cmaes.sigma0: must be positive");
    try {
      space.validate();
      acquisition.validate();
      gp.validate();
      surrogate.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }

  HpcBboConfig hpc_bbo(std::uint64_t seed) const {
    HpcBboConfig c;
    c.K = K;
    c.num_batches = num_batches;
    c.num_iters = num_iters;
    c.contextual = algorithm == Algorithm::hpc_bbo_contextual;
    c.init_controller_evals = init_evals;
    c.space = space;
    c.acquisition = acquisition;
    c.controller_gp = gp;
    c.seed = seed;
    return c;
  }

  StandardBoConfig standard_bo(std::uint64_t seed) const {
    StandardBoConfig c;
    c.budget = budget;
    c.space = space;
    c.seed = seed;
    c.init_evals = init_evals;
    c.acquisition = acquisition;
    c.gp = gp;
    return c;
  }

  FlatBudgetConfig flat(std::uint64_t seed) const {
    FlatBudgetConfig c;
    c.budget = budget;
    c.space = space;
    c.seed = seed;
    return c;
  }

  CmaesConfig cmaes(std::uint64_t seed) const {
    CmaesConfig c;
    c.budget = budget;
    c.space = space;
    c.seed = seed;
    c.sigma0 = cmaes_sigma0;
    return c;
  }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown field");
  }
}

template <class T>
void read_field(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  const std::string name = (where.empty() ? "" : where + ".") + key;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!obj.at(key).is_number_unsigned()) throw ConfigError(name + ": expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!obj.at(key).is_number()) throw ConfigError(name + ": expected a number");
    }
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(name + ": wrong type");
  }
}

template <std::size_t N>
void read_box(const json& obj, const std::string& where, ParamBox<N>& box) {
  reject_unknown(obj, where, {"lower", "upper"});
  for (const char* key : {"lower", "upper"}) {
    if (!obj.contains(key)) continue;
    const json& arr = obj.at(key);
    if (!arr.is_array() || arr.size() != N) throw ConfigError(where + "." + key + ": expected " + std::to_string(N) + " numbers");
    auto& dst = std::string(key) == "lower" ? box.lower : box.upper;
    for (std::size_t i = 0; i < N; ++i) {
      if (!arr[i].is_number()) throw ConfigError(where + "." + key + ": expected numbers");
      dst[i] = arr[i].get<double>();
    }
  }
}

/// Line of a byte offset in `text`, 1-based.
inline std::size_t line_of(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  using detail::read_field;
  detail::reject_unknown(j, "",
                         {"algorithm", "seeds", "num_batches", "K", "num_iters", "init_evals", "budget", "bounds",
                          "acquisition", "gp", "surrogate", "cmaes", "output_dir", "threads"});
  ExperimentConfig c;
  if (!j.contains("algorithm") || !j["algorithm"].is_string()) throw ConfigError("algorithm: required string field");
  c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
  if (!j.contains("seeds")) throw ConfigError("seeds: required field");
  if (!j["seeds"].is_array()) throw ConfigError("seeds: expected a list of integers");
  c.seeds.clear();
  for (const auto& s : j["seeds"]) {
    if (!s.is_number_unsigned()) throw ConfigError("seeds: expected non-negative integers");
    c.seeds.push_back(s.get<std::uint64_t>());
  }

  const char* batched_fields[] = {"num_batches", "K", "num_iters"};
  if (is_batched(c.algorithm)) {
    for (const char* f : batched_fields)
      if (!j.contains(f)) throw ConfigError(std::string(f) + ": required for " + to_string(c.algorithm));
    if (j.contains("budget")) throw ConfigError(std::string("budget: not used by ") + to_string(c.algorithm));
  } else {
    if (!j.contains("budget")) throw ConfigError(std::string("budget: required for ") + to_string(c.algorithm));
    for (const char* f : batched_fields)
      if (j.contains(f)) throw ConfigError(std::string(f) + ": not used by " + to_string(c.algorithm));
  }
  if (j.contains("cmaes") && c.algorithm != Algorithm::cmaes) throw ConfigError("cmaes: only valid for algorithm cmaes");

  read_field(j, "num_batches", "", c.num_batches);
  read_field(j, "K", "", c.K);
  read_field(j, "num_iters", "", c.num_iters);
  read_field(j, "init_evals", "", c.init_evals);
  read_field(j, "budget", "", c.budget);
  read_field(j, "output_dir", "", c.output_dir);
  read_field(j, "threads", "", c.threads);

  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    detail::reject_unknown(b, "bounds", {"morphology", "controller"});
    if (b.contains("morphology")) detail::read_box(b["morphology"], "bounds.morphology", c.space.morphology);
    if (b.contains("controller")) detail::read_box(b["controller"], "bounds.controller", c.space.controller);
  }
  if (j.contains("acquisition")) {
    const json& a = j["acquisition"];
    detail::reject_unknown(a, "acquisition", {"kappa", "candidates", "refine_steps"});
    read_field(a, "kappa", "acquisition", c.acquisition.kappa);
    read_field(a, "candidates", "acquisition", c.acquisition.candidates);
    read_field(a, "refine_steps", "acquisition", c.acquisition.refine_steps);
  }
  if (j.contains("gp")) {
    const json& g = j["gp"];
    detail::reject_unknown(g, "gp", {"refit_every", "restarts", "refit_restarts", "iterations", "max_fit_points"});
    read_field(g, "refit_every", "gp", c.gp.refit_every);
    read_field(g, "restarts", "gp", c.gp.restarts);
    read_field(g, "refit_restarts", "gp", c.gp.refit_restarts);
    read_field(g, "iterations", "gp", c.gp.iterations);
    read_field(g, "max_fit_points", "gp", c.gp.max_fit_points);
  }
  if (j.contains("surrogate")) {
    const json& s = j["surrogate"];
    detail::reject_unknown(s, "surrogate",
                           {"stance_threshold", "min_stance_legs", "slip_penalty", "turn_sensitivity", "stance_shift",
                            "reward_scale"});
    read_field(s, "stance_threshold", "surrogate", c.surrogate.stance_threshold);
    read_field(s, "min_stance_legs", "surrogate", c.surrogate.min_stance_legs);
    read_field(s, "slip_penalty", "surrogate", c.surrogate.slip_penalty);
    read_field(s, "turn_sensitivity", "surrogate", c.surrogate.turn_sensitivity);
    read_field(s, "stance_shift", "surrogate", c.surrogate.stance_shift);
    read_field(s, "reward_scale", "surrogate", c.surrogate.reward_scale);
  }
  if (j.contains("cmaes")) {
    detail::reject_unknown(j["cmaes"], "cmaes", {"sigma0"});
    read_field(j["cmaes"], "sigma0", "cmaes", c.cmaes_sigma0);
  }
  c.surrogate.space = c.space;
  c.validate();
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(detail::line_of(text, e.byte > 0 ? e.byte - 1 : 0)) + ": " + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Everything that determines a run's records, excluding seeds and output
/// location.
inline json canonical_json(const ExperimentConfig& c) {
  json j;
  j["algorithm"] = to_string(c.algorithm);
  if (is_batched(c.algorithm)) {
    j["num_batches"] = c.num_batches;
    j["K"] = c.K;
    j["num_iters"] = c.num_iters;
  } else {
    j["budget"] = c.budget;
  }
  j["init_evals"] = c.init_evals;
  j["bounds"] = {{"morphology", {{"lower", c.space.morphology.lower}, {"upper", c.space.morphology.upper}}},
                 {"controller", {{"lower", c.space.controller.lower}, {"upper", c.space.controller.upper}}}};
  j["acquisition"] = {{"kappa", c.acquisition.kappa},
                      {"candidates", c.acquisition.candidates},
                      {"refine_steps", c.acquisition.refine_steps}};
  j["gp"] = {{"refit_every", c.gp.refit_every},
             {"restarts", c.gp.restarts},
             {"refit_restarts", c.gp.refit_restarts},
             {"iterations", c.gp.iterations},
             {"max_fit_points", c.gp.max_fit_points}};
  j["surrogate"] = {{"stance_threshold", c.surrogate.stance_threshold},
                    {"min_stance_legs", c.surrogate.min_stance_legs},
                    {"slip_penalty", c.surrogate.slip_penalty},
                    {"turn_sensitivity", c.surrogate.turn_sensitivity},
                    {"stance_shift", c.surrogate.stance_shift},
                    {"reward_scale", c.surrogate.reward_scale}};
  if (c.algorithm == Algorithm::cmaes) j["cmaes"] = {{"sigma0", c.cmaes_sigma0}};
  return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_json(c).dump())));
  return buf;
}

}  // namespace hpcbbo::harness
