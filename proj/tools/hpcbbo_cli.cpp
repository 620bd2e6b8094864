// Command-line front end: run experiments, aggregate curves, recombine the
// best designs, slice the morphology model, plot curves.
//
// Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "hpcbbo/harness/curves.hpp"
#include "hpcbbo/harness/plot.hpp"
#include "hpcbbo/harness/recombination.hpp"
#include "hpcbbo/harness/runner.hpp"
#include "hpcbbo/harness/slice.hpp"

namespace fs = std::filesystem;
using namespace hpcbbo;
using namespace hpcbbo::harness;

namespace {

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<TraceFile> load_traces(const std::vector<std::string>& paths) {
  std::vector<TraceFile> out;
  for (const auto& p : paths) out.push_back(load_trace(p));
  return out;
}

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  return out;
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const ExperimentResult r = run_experiment(cfg);
  for (const auto& p : r.trace_paths) std::cout << p << '\n';
  for (const auto& [seed, msg] : r.failures) std::cerr << "seed " << seed << " incomplete: " << msg << '\n';
  return r.failures.empty() ? 0 : 2;
}

int cmd_aggregate(const std::string& axis, const std::string& out_path, const std::vector<std::string>& traces) {
  const auto points = aggregate_curves(load_traces(traces), axis_from_string(axis));
  auto out = open_out(out_path);
  write_curves_csv(out, points);
  return 0;
}

int cmd_recombine(std::size_t top, const std::string& out_path, const std::string& config_path,
                  const std::vector<std::string>& traces) {
  surrogate::SurrogateConfig sc;
  if (!config_path.empty()) sc = load_config(config_path).surrogate;
  const auto m = recombination_matrix(load_traces(traces), top, sc);
  auto out = open_out(out_path);
  write_recombination_csv(out, m);
  std::cout << "mean off-diagonal change: " << m.mean_off_diagonal() << "%\n";
  return 0;
}

int cmd_slice(std::size_t dim, double value, std::size_t res, const std::string& out_path, const std::string& run_dir,
              std::optional<std::uint64_t> seed) {
  if (!fs::is_directory(run_dir)) throw InvalidArgument("slice: '" + run_dir + "' is not a directory");
  const std::string suffix = ".morphology_gp.json";
  std::vector<fs::path> models;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      models.push_back(e.path());
  }
  std::sort(models.begin(), models.end());
  if (seed) {
    const std::string tag = "_seed" + std::to_string(*seed) + suffix;
    std::erase_if(models, [&](const fs::path& p) {
      const std::string n = p.filename().string();
      return n.size() < tag.size() || n.compare(n.size() - tag.size(), tag.size(), tag) != 0;
    });
  }
  if (models.empty()) throw InvalidArgument("slice: no morphology model in '" + run_dir + "'");
  const std::string model_path = models.front().string();
  const std::string trace_path = model_path.substr(0, model_path.size() - suffix.size()) + ".jsonl";
  const MorphologyModelFile model = load_model(model_path);
  const gp::GpModel gp = rebuild_morphology_gp(load_trace(trace_path), model);
  const auto cells = gp_slice_grid(gp, model.bounds, dim, value, res);
  auto out = open_out(out_path);
  write_slice_csv(out, cells);
  return 0;
}

int cmd_plot(const std::string& out_path, const std::vector<std::string>& inputs) {
  std::vector<NamedCurve> curves;
  for (const auto& p : inputs) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open '" + p + "'");
    try {
      curves.push_back({fs::path(p).stem().string(), read_curves_csv(in)});
    } catch (const ParseError& e) {
      throw ParseError(p + ": " + e.what());
    }
  }
  const std::string svg = render_svg(curves);
  auto out = open_out(out_path);
  out << svg;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical batch Bayesian optimization of hexapod designs"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment: one trace per seed");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();

  std::string axis, out_path;
  std::vector<std::string> inputs;
  auto* agg = app.add_subcommand("aggregate", "Median and 65th-percentile best-so-far curves");
  agg->add_option("--axis", axis, "cycles | morphologies | evaluations")
      ->required()
      ->check(CLI::IsMember({"cycles", "morphologies", "evaluations"}));
  agg->add_option("--out", out_path, "Curve CSV")->required();
  agg->add_option("traces", inputs, "Trace files")->required();

  std::size_t top = 4;
  std::string recombine_config;
  auto* rec = app.add_subcommand("recombine", "Cross-evaluate the best morphology/controller pairs");
  rec->add_option("--top", top, "Number of pairs")->capture_default_str();
  rec->add_option("--out", out_path, "Matrix CSV")->required();
  rec->add_option("--config", recombine_config, "Experiment config whose surrogate settings to use");
  rec->add_option("traces", inputs, "Trace files")->required();

  std::size_t dim = 0, res = 25;
  double value = 1.0;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  auto* slice = app.add_subcommand("slice", "Posterior-mean grid of the morphology model");
  slice->add_option("--dim", dim, "Fixed leg-ratio dimension")->required()->check(CLI::IsMember({0, 1, 2}));
  slice->add_option("--value", value, "Fixed leg ratio")->required();
  slice->add_option("--res", res, "Grid resolution")->capture_default_str();
  slice->add_option("--out", out_path, "Grid CSV")->required();
  slice->add_option("--seed", seed, "Seed of the run to slice (default: first found)");
  slice->add_option("run_dir", run_dir, "Run directory")->required();

  auto* plot = app.add_subcommand("plot", "Render curve CSVs to SVG");
  plot->add_option("--out", out_path, "SVG file")->required();
  plot->add_option("curves", inputs, "Curve CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*agg) return cmd_aggregate(axis, out_path, inputs);
    if (*rec) return cmd_recombine(top, out_path, recombine_config, inputs);
    if (*slice) return cmd_slice(dim, value, res, out_path, run_dir, seed);
    if (*plot) return cmd_plot(out_path, inputs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
