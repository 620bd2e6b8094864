#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <thread>

#include "hpcbbo/harness/config.hpp"
#include "hpcbbo/harness/trace_io.hpp"

namespace hpcbbo::harness {

namespace fs = std::filesystem;

inline std::string trace_file_name(Algorithm a, std::uint64_t seed) {
  return std::string(to_string(a)) + "_seed" + std::to_string(seed) + ".jsonl";
}

inline std::string model_file_name(Algorithm a, std::uint64_t seed) {
  return std::string(to_string(a)) + "_seed" + std::to_string(seed) + ".morphology_gp.json";
}

/// Final morphology GP hyperparameters of a batched run, stored next to the
/// trace so the model can be rebuilt from the trace records.
struct MorphologyModelFile {
  gp::KernelHyperparams hyper;
  MorphologyBox bounds = default_morphology_box();
};

inline void save_model(const std::string& path, const MorphologyModelFile& m) {
  nlohmann::ordered_json j;
  j["signal_variance"] = m.hyper.signal_variance;
  j["lengthscales"] = std::vector<double>(m.hyper.lengthscales.data(), m.hyper.lengthscales.data() + m.hyper.lengthscales.size());
  j["noise_variance"] = m.hyper.noise_variance;
  j["bounds"] = {{"lower", m.bounds.lower}, {"upper", m.bounds.upper}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump() << '\n';
}

inline MorphologyModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  MorphologyModelFile m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.hyper.signal_variance = j.at("signal_variance").get<double>();
    const auto ls = j.at("lengthscales").get<std::vector<double>>();
    m.hyper.lengthscales = gp::Vector::Map(ls.data(), static_cast<Eigen::Index>(ls.size()));
    m.hyper.noise_variance = j.at("noise_variance").get<double>();
    m.bounds.lower = j.at("bounds").at("lower").get<std::array<double, kMorphologyDim>>();
    m.bounds.upper = j.at("bounds").at("upper").get<std::array<double, kMorphologyDim>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  m.hyper.validate(kMorphologyDim);
  m.bounds.validate();
  return m;
}

struct SeedRun {
  TraceFile file;
  std::optional<gp::KernelHyperparams> morphology_hyper;
  std::string error;
};

/// One seed of the configured algorithm. Failures leave the partial trace
/// flagged incomplete and the message in `error`.
inline SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const Evaluator& objective) {
  SeedRun out;
  TraceHeader& h = out.file.header;
  h.config_hash = config_hash(cfg);
  h.seed = seed;
  h.algorithm = to_string(cfg.algorithm);
  h.accounting = is_batched(cfg.algorithm) ? "batch" : "evaluation";
  h.complete = false;
  RunTrace& trace = out.file.trace;
  try {
    switch (cfg.algorithm) {
      case Algorithm::hpc_bbo_contextual:
      case Algorithm::hpc_bbo_noncontextual: {
        HpcBboResult r;
        try {
          hpc_bbo_run_into(r, objective, cfg.hpc_bbo(seed));
        } catch (...) {
          trace = std::move(r.trace);
          throw;
        }
        trace = std::move(r.trace);
        if (r.morphology_gp) out.morphology_hyper = r.morphology_gp->hyper();
        break;
      }
      case Algorithm::standard_bo: standard_bo_run_into(trace, objective, cfg.standard_bo(seed)); break;
      case Algorithm::random_search: random_search_run_into(trace, objective, cfg.flat(seed)); break;
      case Algorithm::cmaes: cmaes_run_into(trace, objective, cfg.cmaes(seed)); break;
    }
    h.complete = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

inline Evaluator surrogate_objective(const surrogate::SurrogateConfig& sc) {
  return [sc](const MorphologyParams& m, const ControllerParams& c) { return surrogate::evaluate_gait(m, c, sc).reward; };
}

/// Calls `job(i)` for i in [0, n) on up to `threads` workers (0 = hardware).
template <class Job>
void parallel_for(std::size_t n, std::size_t threads, Job&& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) job(i);
    });
  for (auto& th : pool) th.join();
}

struct ExperimentResult {
  std::vector<std::string> trace_paths;
  /// Seeds whose run did not finish, with the reason.
  std::vector<std::pair<std::uint64_t, std::string>> failures;
};

/// Runs every seed (in parallel) and writes one trace per seed into the
/// output directory. Reruns with the same config overwrite byte-identically.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const Evaluator objective = surrogate_objective(cfg.surrogate);
  ExperimentResult result;
  result.trace_paths.resize(cfg.seeds.size());
  std::mutex mu;
  parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const SeedRun run = run_seed(cfg, seed, objective);
    const std::string path = (fs::path(cfg.output_dir) / trace_file_name(cfg.algorithm, seed)).string();
    save_trace(path, run.file);
    if (run.morphology_hyper)
      save_model((fs::path(cfg.output_dir) / model_file_name(cfg.algorithm, seed)).string(),
                 {*run.morphology_hyper, cfg.space.morphology});
    std::lock_guard lock(mu);
    result.trace_paths[i] = path;
    if (!run.error.empty()) result.failures.emplace_back(seed, run.error);
  });
  std::sort(result.failures.begin(), result.failures.end());
  return result;
}

inline ExperimentResult run_experiment(const std::string& config_path) { return run_experiment(load_config(config_path)); }

}  // namespace hpcbbo::harness
