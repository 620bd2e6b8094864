#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hpcbbo/harness/curves.hpp"
#include "hpcbbo/harness/plot.hpp"
#include "hpcbbo/harness/recombination.hpp"
#include "hpcbbo/harness/runner.hpp"
#include "hpcbbo/harness/slice.hpp"

using namespace hpcbbo;
using namespace hpcbbo::harness;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hpcbbo_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

EvalRecord rec(std::size_t batch, std::size_t morph, std::size_t iter, double reward) {
  EvalRecord r;
  r.batch = batch;
  r.morph_idx = morph;
  r.iter = iter;
  r.phase = iter == 0 ? Phase::random_init : Phase::controller_opt;
  r.reward = reward;
  return r;
}

TraceFile trace_of(std::vector<EvalRecord> records, std::uint64_t seed = 0, std::string accounting = "batch",
                   std::string algorithm = "hpc_bbo_contextual") {
  TraceFile f;
  f.header.config_hash = "0123456789abcdef";
  f.header.seed = seed;
  f.header.algorithm = std::move(algorithm);
  f.header.accounting = std::move(accounting);
  f.trace.records = std::move(records);
  f.trace.best_per_morphology = best_per_morphology(f.trace.records);
  return f;
}

// Flat trace whose best-so-far is `final` from the first evaluation.
TraceFile flat_trace(double final, std::uint64_t seed) {
  return trace_of({rec(0, 0, 0, final)}, seed, "evaluation", "random_search");
}

const char* kSmallConfig = R"({
  "algorithm": "hpc_bbo_noncontextual",
  "seeds": [0, 1],
  "num_batches": 2,
  "K": 2,
  "num_iters": 3,
  "init_evals": 2,
  "acquisition": {"candidates": 100, "refine_steps": 5},
  "gp": {"restarts": 2, "iterations": 10}
})";

}  // namespace

// ---- config ----

TEST(Config, ParsesAndFillsDefaults) {
  const auto c = parse_config(kSmallConfig);
  EXPECT_EQ(c.algorithm, Algorithm::hpc_bbo_noncontextual);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(c.K, 2u);
  EXPECT_EQ(c.acquisition.kappa, 2.0);
  EXPECT_EQ(c.acquisition.candidates, 100u);
  EXPECT_EQ(c.gp.refit_every, GpSchedule{}.refit_every);
}

TEST(Config, RejectsUnknownFieldsWithTheirPath) {
  try {
    parse_config(R"({"algorithm": "random_search", "seeds": [0], "budget": 5, "acquisition": {"kapa": 1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("acquisition.kapa"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config(R"({"algorithm": "random_search", "seeds": [0], "budget": 5, "color": 1})"), ConfigError);
}

TEST(Config, ReportsTheLineOfASyntaxError) {
  try {
    parse_config("{\n  \"algorithm\": \"cmaes\",\n  \"seeds\": [0,\n}\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 4:", 0), 0u) << e.what();
  }
}

TEST(Config, FieldsDependOnTheAlgorithm) {
  EXPECT_THROW(parse_config(R"({"algorithm": "standard_bo", "seeds": [0]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"algorithm": "standard_bo", "seeds": [0], "budget": 5, "K": 2})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"algorithm": "hpc_bbo_contextual", "seeds": [0], "K": 2, "num_batches": 1})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"algorithm": "random_search", "seeds": [0], "budget": 5, "cmaes": {"sigma0": 1}})"),
               ConfigError);
  EXPECT_NO_THROW(parse_config(R"({"algorithm": "cmaes", "seeds": [0], "budget": 5, "cmaes": {"sigma0": 0.2}})"));
  EXPECT_THROW(parse_config(R"({"algorithm": "annealing", "seeds": [0], "budget": 5})"), ConfigError);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_config(R"({"algorithm": "random_search", "seeds": [-1], "budget": 5})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"algorithm": "random_search", "seeds": [0], "budget": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"algorithm": "random_search", "seeds": [0], "budget": "ten"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"algorithm": "random_search", "seeds": [0], "budget": 5,
                                "bounds": {"morphology": {"lower": [1, 1, 1], "upper": [0.5, 1.5, 1.5]}}})"),
               ConfigError);
}

TEST(Config, HashIgnoresSeedsAndOutput) {
  auto a = parse_config(kSmallConfig);
  auto b = a;
  b.seeds = {7};
  b.output_dir = "elsewhere";
  b.threads = 3;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.K = 3;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

// ---- traces ----

TEST(TraceIo, RoundTrips) {
  TraceFile f = trace_of({rec(0, 0, 0, 1.5), rec(0, 0, 1, 0.1 + 0.2), rec(0, 1, 0, 1e-300), rec(1, 0, 0, 7.0)}, 42);
  f.trace.records[1].morph = MorphologyParams{{0.5, 1.0 / 3.0, 1.5}};
  f.trace.records[1].ctrl = ControllerParams{2.0 / 3.0, 0.123456789012345678, -0.1, 0.2, 0.3, 0.4};
  f.trace.evaluation_errors = 2;
  f.header.complete = false;
  std::stringstream ss;
  write_trace(ss, f);
  EXPECT_EQ(read_trace(ss), f);
}

TEST(TraceIo, ErrorsCarryTheRow) {
  std::stringstream ss;
  write_trace(ss, trace_of({rec(0, 0, 0, 1.0), rec(0, 0, 1, 2.0)}));
  std::string text = ss.str();
  text.replace(text.rfind("\"reward\""), 8, "\"rewrd\"");
  std::istringstream in(text);
  try {
    read_trace(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  std::istringstream bad_schema(R"({"schema_version":"9"})" "\n");
  EXPECT_THROW(read_trace(bad_schema), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_trace(empty), ParseError);
}

TEST(TraceIo, BestPerMorphology) {
  const std::vector<EvalRecord> r = {rec(0, 0, 0, 1.0), rec(0, 0, 1, 3.0), rec(0, 1, 0, 2.0), rec(1, 0, 0, 0.5)};
  EXPECT_EQ(best_per_morphology(r), (std::vector<double>{3.0, 2.0, 0.5}));
}

// ---- curves ----

TEST(Curves, PercentileInterpolates) {
  EXPECT_EQ(percentile({10.0, 20.0}, 0.5), 15.0);
  EXPECT_NEAR(percentile({10.0, 20.0}, 0.65), 16.5, 1e-12);
  EXPECT_EQ(percentile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_EQ(percentile({4.0}, 0.65), 4.0);
  EXPECT_NEAR(percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.65), 6.85, 1e-12);
  EXPECT_THROW(percentile({}, 0.5), InvalidArgument);
  EXPECT_THROW(percentile({1.0}, 1.5), InvalidArgument);
}

TEST(Curves, TwoSeedExample) {
  const auto pts = aggregate_curves({flat_trace(10.0, 0), flat_trace(20.0, 1)}, Axis::evaluations);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].median, 15.0);
  EXPECT_NEAR(pts[0].p65, 16.5, 1e-12);
  EXPECT_EQ(pts[0].n_seeds, 2u);
}

TEST(Curves, TicksFollowTheAxis) {
  const TraceFile f = trace_of(
      {rec(0, 0, 0, 1.0), rec(0, 0, 1, 4.0), rec(0, 1, 0, 2.0), rec(1, 0, 0, 3.0), rec(1, 1, 0, 6.0), rec(1, 1, 1, 5.0)});
  EXPECT_EQ(best_so_far_by(f.trace, Axis::evaluations), (std::vector<double>{1, 4, 4, 4, 6, 6}));
  EXPECT_EQ(best_so_far_by(f.trace, Axis::morphologies), (std::vector<double>{4, 4, 4, 6}));
  EXPECT_EQ(best_so_far_by(f.trace, Axis::fabrication_cycles), (std::vector<double>{4, 6}));
}

TEST(Curves, MonotoneAndInvariantToSeedOrder) {
  Rng rng(1);
  std::vector<TraceFile> files;
  for (std::uint64_t s = 0; s < 7; ++s) {
    std::vector<EvalRecord> r;
    for (std::size_t i = 0; i < 5 + s; ++i) r.push_back(rec(i, 0, 0, rng.uniform()));
    files.push_back(trace_of(r, s, "evaluation", "random_search"));
  }
  const auto pts = aggregate_curves(files, Axis::evaluations);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].n_seeds == pts[i - 1].n_seeds) EXPECT_GE(pts[i].median, pts[i - 1].median);
    EXPECT_GE(pts[i].p65, pts[i].median);
  }
  EXPECT_EQ(pts.size(), 11u);
  EXPECT_EQ(pts.back().n_seeds, 1u);
  std::reverse(files.begin(), files.end());
  std::swap(files[1], files[4]);
  EXPECT_EQ(aggregate_curves(files, Axis::evaluations), pts);
}

TEST(Curves, RefusesMixedOrIncompleteTraces) {
  EXPECT_THROW(aggregate_curves({flat_trace(1, 0), trace_of({rec(0, 0, 0, 1)}, 1)}, Axis::evaluations), InvalidArgument);
  auto other = flat_trace(1, 1);
  other.header.algorithm = "cmaes";
  EXPECT_THROW(aggregate_curves({flat_trace(1, 0), other}, Axis::evaluations), InvalidArgument);
  auto partial = flat_trace(1, 1);
  partial.header.complete = false;
  EXPECT_THROW(aggregate_curves({flat_trace(1, 0), partial}, Axis::evaluations), InvalidArgument);
  EXPECT_THROW(aggregate_curves({}, Axis::evaluations), InvalidArgument);
}

TEST(Curves, CsvRoundTrip) {
  const std::vector<CurvePoint> pts = {{Axis::fabrication_cycles, 1, 0.1, 0.30000000000000004, 20},
                                       {Axis::fabrication_cycles, 2, 1.0 / 3.0, 2.5, 19}};
  std::stringstream ss;
  write_curves_csv(ss, pts);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "x_axis,x,median,p65,n_seeds");
  EXPECT_EQ(read_curves_csv(ss), pts);
}

TEST(Curves, CsvErrorsCarryTheRow) {
  std::istringstream in("x_axis,x,median,p65,n_seeds\nevaluations,1,2,3,4\nevaluations,2,abc,3,4\n");
  try {
    read_curves_csv(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  std::istringstream wrong_header("x,median\n");
  EXPECT_THROW(read_curves_csv(wrong_header), ParseError);
  EXPECT_EQ(axis_from_string("cycles"), Axis::fabrication_cycles);
  EXPECT_THROW(axis_from_string("days"), InvalidArgument);
}

// ---- recombination ----

namespace {

TraceFile recombination_input() {
  // Four well separated morphologies, each with a decent controller.
  const std::array<MorphologyParams, 4> morphs = {
      MorphologyParams{{1.0, 1.0, 1.0}}, MorphologyParams{{1.4, 1.4, 1.4}}, MorphologyParams{{0.6, 1.4, 1.0}},
      MorphologyParams{{1.2, 0.8, 1.3}}};
  ControllerParams c{2.0, 0.3, 0.05, 0.0, 0.4, 0.4};
  std::vector<EvalRecord> r;
  for (std::size_t k = 0; k < morphs.size(); ++k) {
    c.r_vertical = 0.2 + 0.05 * static_cast<double>(k);
    auto e = rec(0, k, 0, surrogate::evaluate_gait(morphs[k], c).reward);
    e.morph = morphs[k];
    e.ctrl = c;
    r.push_back(e);
  }
  return trace_of(r);
}

}  // namespace

TEST(Recombination, MatrixAgainstDirectEvaluation) {
  const auto f = recombination_input();
  const auto m = recombination_matrix({f}, 4);
  ASSERT_EQ(m.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(m.entry[i][i], 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) continue;
      const double own = surrogate::evaluate_gait(m.pairs[j].morph, m.pairs[j].ctrl).reward;
      const double cross = surrogate::evaluate_gait(m.pairs[j].morph, m.pairs[i].ctrl).reward;
      EXPECT_NEAR(m.entry[i][j], 100.0 * (cross - own) / own, 1e-9);
    }
  }
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GE(m.pairs[i - 1].reward, m.pairs[i].reward);
  std::ostringstream os;
  write_recombination_csv(os, m);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "controller,morphology_1,morphology_2,morphology_3,morphology_4");
  EXPECT_NE(csv.find("controller_1,--,"), std::string::npos);
}

TEST(Recombination, NeedsEnoughDistinctMorphologies) {
  auto f = recombination_input();
  EXPECT_THROW(recombination_matrix({f}, 5), InsufficientData);
  // A near-duplicate morphology does not count.
  f.trace.records[3].morph = MorphologyParams{{1.01, 1.0, 1.0}};
  EXPECT_THROW(recombination_matrix({f}, 4), InsufficientData);
  EXPECT_NO_THROW(recombination_matrix({f}, 3));
}

TEST(Recombination, KeepsTheBestControllerPerMorphology) {
  const auto pairs = best_pairs({trace_of({rec(0, 0, 0, 1.0), rec(0, 0, 1, 5.0), rec(0, 0, 2, 2.0), rec(0, 1, 0, 3.0)})});
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].reward, 5.0);
  EXPECT_EQ(pairs[1].reward, 3.0);
}

// ---- slice ----

namespace {

gp::GpModel small_morph_gp() {
  gp::Dataset d(3);
  Rng rng(2);
  for (int i = 0; i < 8; ++i) {
    gp::Vector u(3);
    for (auto& v : u) v = rng.uniform();
    d.add(u, 20.0 * u[0] * (1.0 - u[1]) + 5.0 * u[2]);
  }
  return gp::GpModel::build(d, gp::KernelHyperparams::isotropic(3, 1.0, 0.4, 1e-4));
}

}  // namespace

TEST(Slice, GridMatchesPointPredictions) {
  const auto model = small_morph_gp();
  const auto box = default_morphology_box();
  const auto cells = gp_slice_grid(model, box, 1, 0.8, 3);
  ASSERT_EQ(cells.size(), 9u);
  const double levels[] = {0.5, 1.0, 1.5};
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      const auto& c = cells[a * 3 + b];
      EXPECT_EQ(c.morph.leg_ratios[0], levels[a]);
      EXPECT_EQ(c.morph.leg_ratios[1], 0.8);
      EXPECT_EQ(c.morph.leg_ratios[2], levels[b]);
      EXPECT_NEAR(c.mean, model.predict(box.normalize(c.morph.leg_ratios)).mean, 1e-8);
    }
  const auto one = gp_slice_grid(model, box, 0, 1.0, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].morph.leg_ratios, (std::array<double, 3>{1.0, 1.0, 1.0}));
}

TEST(Slice, RejectsBadArguments) {
  const auto model = small_morph_gp();
  const auto box = default_morphology_box();
  EXPECT_THROW(gp_slice_grid(model, box, 3, 1.0, 3), InvalidArgument);
  EXPECT_THROW(gp_slice_grid(model, box, 0, 1.6, 3), InvalidArgument);
  EXPECT_THROW(gp_slice_grid(model, box, 0, 1.0, 0), InvalidArgument);
}

TEST(Slice, CsvLayout) {
  std::ostringstream os;
  write_slice_csv(os, gp_slice_grid(small_morph_gp(), default_morphology_box(), 2, 1.5, 2));
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "front,middle,rear,predicted_reward");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4u);
}

// ---- plot ----

TEST(Plot, NeedsPoints) {
  EXPECT_THROW(render_svg({}), InvalidArgument);
  EXPECT_THROW(render_svg({{"empty", {}}}), InvalidArgument);
}

TEST(Plot, OnePointOneMarker) {
  const std::string svg = render_svg({{"solo", {{Axis::evaluations, 1, 2.0, 3.0, 1}}}});
  std::size_t markers = 0;
  for (std::size_t p = svg.find("class=\"marker\""); p != std::string::npos; p = svg.find("class=\"marker\"", p + 1))
    ++markers;
  EXPECT_EQ(markers, 1u);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Plot, MatchesGoldenFile) {
  const std::vector<NamedCurve> curves = {
      {"contextual <a&b>", {{Axis::fabrication_cycles, 1, 10.0, 12.0, 20}, {Axis::fabrication_cycles, 2, 15.0, 16.0, 20}}},
      {"random", {{Axis::fabrication_cycles, 1, 5.0, 6.0, 20}, {Axis::fabrication_cycles, 2, 7.0, 9.5, 20}}}};
  const std::string svg = render_svg(curves);
  EXPECT_NE(svg.find("contextual &lt;a&amp;b&gt;"), std::string::npos);
  EXPECT_EQ(svg, read_file(fs::path(HPCBBO_FIXTURES) / "plot_golden.svg"));
}

// ---- runner ----

TEST(Runner, RerunIsByteIdentical) {
  auto cfg = parse_config(kSmallConfig);
  const auto a = scratch_dir("rerun_a"), b = scratch_dir("rerun_b");
  cfg.output_dir = a.string();
  const auto ra = run_experiment(cfg);
  cfg.output_dir = b.string();
  cfg.threads = 2;
  const auto rb = run_experiment(cfg);
  EXPECT_TRUE(ra.failures.empty());
  ASSERT_EQ(ra.trace_paths.size(), 2u);
  for (const char* name : {"hpc_bbo_noncontextual_seed0.jsonl", "hpc_bbo_noncontextual_seed1.jsonl",
                           "hpc_bbo_noncontextual_seed0.morphology_gp.json"}) {
    const std::string x = read_file(a / name);
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, read_file(b / name)) << name;
  }
  EXPECT_NE(read_file(a / "hpc_bbo_noncontextual_seed0.jsonl"), read_file(a / "hpc_bbo_noncontextual_seed1.jsonl"));
}

TEST(Runner, TraceHeaderDescribesTheRun) {
  auto cfg = parse_config(R"({"algorithm": "random_search", "seeds": [3], "budget": 6})");
  cfg.output_dir = scratch_dir("header").string();
  const auto r = run_experiment(cfg);
  const auto f = load_trace(r.trace_paths[0]);
  EXPECT_EQ(f.header.seed, 3u);
  EXPECT_EQ(f.header.algorithm, "random_search");
  EXPECT_EQ(f.header.accounting, "evaluation");
  EXPECT_EQ(f.header.config_hash, config_hash(cfg));
  EXPECT_TRUE(f.header.complete);
  EXPECT_EQ(f.trace.records.size(), 6u);
}

TEST(Runner, AbortedRunIsFlaggedIncomplete) {
  const auto cfg = parse_config(kSmallConfig);
  int calls = 0;
  const Evaluator aborting = [&](const MorphologyParams& m, const ControllerParams& c) {
    if (++calls > 7) throw RunAborted("simulator lost");
    return surrogate::evaluate_gait(m, c).reward;
  };
  const auto run = run_seed(cfg, 0, aborting);
  EXPECT_FALSE(run.file.header.complete);
  EXPECT_EQ(run.file.trace.records.size(), 5u);  // one finished morphology
  EXPECT_NE(run.error.find("simulator lost"), std::string::npos);
  EXPECT_THROW(aggregate_curves({run.file}, Axis::evaluations), InvalidArgument);
}

TEST(Runner, SliceRebuildsTheFinalModel) {
  auto cfg = parse_config(kSmallConfig);
  cfg.seeds = {0};
  cfg.output_dir = scratch_dir("slice").string();
  run_experiment(cfg);
  const fs::path dir(cfg.output_dir);
  const auto trace = load_trace((dir / "hpc_bbo_noncontextual_seed0.jsonl").string());
  const auto model_file = load_model((dir / "hpc_bbo_noncontextual_seed0.morphology_gp.json").string());
  const auto model = rebuild_morphology_gp(trace, model_file);
  EXPECT_EQ(model.size(), cfg.K * cfg.num_batches);
  // Same model as the in-memory run.
  const auto direct = hpc_bbo_run_detailed(surrogate_objective(cfg.surrogate), cfg.hpc_bbo(0));
  Rng probe(1);
  for (int i = 0; i < 10; ++i) {
    gp::Vector u(3);
    for (auto& v : u) v = probe.uniform();
    EXPECT_NEAR(model.predict(u).mean, direct.morphology_gp->predict(u).mean, 1e-8);
  }
  const auto flat = trace_of({rec(0, 0, 0, 1.0)}, 0, "evaluation", "random_search");
  EXPECT_THROW(rebuild_morphology_gp(flat, model_file), InvalidArgument);
}

TEST(Runner, ParallelForVisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(50, 4, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}
