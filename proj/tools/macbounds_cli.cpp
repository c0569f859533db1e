// Command-line front end: bound sweeps, membership queries, discrete-case
// certification and the property-test runners. All numeric output is emitted
// in full double precision; identical (config, seed) runs produce
// byte-identical files.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>

#include "macbounds/certify.hpp"
#include "macbounds/common.hpp"
#include "macbounds/correlation.hpp"
#include "macbounds/json_io.hpp"
#include "macbounds/sweep.hpp"

namespace mb = macbounds;
using mb::json;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  int threads = 1;
  bool timing = false;
};

json load_config(const GlobalOpts& g) {
  if (g.config_path.empty()) throw mb::invalid_input("--config is required");
  std::ifstream in(g.config_path);
  if (!in) throw mb::invalid_input("cannot open config: " + g.config_path);
  json j;
  in >> j;
  return j;
}

void write_output(const GlobalOpts& g, const std::string& text) {
  if (g.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(g.out_path, std::ios::binary);
  if (!out) throw mb::invalid_input("cannot open output: " + g.out_path);
  out << text;
}

mb::DistortionTable distortion_or_hamming(const json& cfg, const char* key,
                                          std::size_t card) {
  if (cfg.contains(key)) return mb::distortion_from_json(cfg.at(key));
  return mb::DistortionTable::hamming(card);
}

int run_sweep_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);

  // Pareto mode: trace (d1, d2) under the weighted scalarisation at fixed
  // powers. Rows reuse the sweep schema with lambda in the parameter columns.
  if (cfg.contains("mode") && cfg.at("mode") == "pareto") {
    const auto problem = mb::problem_from_json(cfg.at("problem"));
    const auto lambdas = cfg.at("lambdas").get<std::vector<double>>();
    const std::size_t budget =
        cfg.contains("hybrid_budget") ? cfg.at("hybrid_budget").get<std::size_t>()
                                      : 24000;
    const std::uint64_t seed =
        cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : g.seed;
    const auto pts = mb::pareto_trace(problem, lambdas, budget, seed, g.threads);
    std::vector<mb::RegionSample> rows(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      rows[i].curve = "pareto_hybrid";
      rows[i].param_db = pts[i].lambda;
      rows[i].param_linear = pts[i].lambda;
      rows[i].d1 = pts[i].d1;
      rows[i].d2 = pts[i].d2;
      rows[i].feasible = pts[i].feasible;
    }
    write_output(g, mb::to_csv(rows));
    return 0;
  }

  mb::SweepSpec spec;
  spec.base = mb::problem_from_json(cfg.at("problem"));
  if (cfg.contains("grid_db"))
    spec.grid_db = cfg.at("grid_db").get<std::vector<double>>();
  else if (cfg.contains("grid_linear")) {
    spec.grid_db = cfg.at("grid_linear").get<std::vector<double>>();
    spec.grid_is_db = false;
  } else {
    spec.grid_db.clear();
    for (int i = 0; i <= 20; ++i) spec.grid_db.push_back(i);
  }
  if (cfg.contains("curves"))
    spec.curves = cfg.at("curves").get<std::vector<std::string>>();
  if (cfg.contains("hybrid_budget"))
    spec.hybrid_budget = cfg.at("hybrid_budget").get<std::size_t>();
  if (cfg.contains("uncoded_resolution"))
    spec.uncoded_resolution = cfg.at("uncoded_resolution").get<int>();
  if (cfg.contains("outer_grid"))
    spec.outer_grid = mb::outer_grid_from_json(cfg.at("outer_grid"));
  if (cfg.contains("outer_tol")) spec.outer_tol = cfg.at("outer_tol").get<double>();
  spec.seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : g.seed;
  spec.threads = g.threads;
  spec.timing = g.timing;

  const auto rows = mb::run_sweep(spec);
  write_output(g, mb::to_csv(rows));
  return 0;
}

struct OuterGridFlags {
  int rho_hat_points = 0;  // 0: keep the config/default value
  int rho_hat0_points = 0;
  int beta_points = 0;

  void apply(mb::OuterGridConfig& grid) const {
    if (rho_hat_points > 0) grid.rho_hat_points = rho_hat_points;
    if (rho_hat0_points > 0) grid.rho_hat0_points = rho_hat0_points;
    if (beta_points > 0) grid.beta_points = beta_points;
  }
};

int run_outer_cmd(const GlobalOpts& g, const OuterGridFlags& flags) {
  const json cfg = load_config(g);
  const auto problem = mb::problem_from_json(cfg.at("problem"));
  const double d1 = cfg.at("d1").get<double>();
  const double d2 = cfg.at("d2").get<double>();
  mb::OuterGridConfig grid;
  if (cfg.contains("grid")) grid = mb::outer_grid_from_json(cfg.at("grid"));
  flags.apply(grid);
  const auto res = mb::outer_membership(d1, d2, problem, grid, g.threads);
  json out = mb::to_json(res);
  out["grid"] = json{{"rho_hat_points", grid.rho_hat_points},
                     {"rho_hat0_points", grid.rho_hat0_points},
                     {"beta_points", grid.beta_points}};
  write_output(g, mb::dump_deterministic(out));
  return res.verdict.member ? 0 : 1;
}

int run_inner_hybrid_cmd(const GlobalOpts& g, std::size_t budget_flag) {
  const json cfg = load_config(g);
  const auto problem = mb::problem_from_json(cfg.at("problem"));
  mb::HybridSearchOptions opt;
  opt.budget = cfg.contains("budget") ? cfg.at("budget").get<std::size_t>() : 24000;
  if (budget_flag > 0) opt.budget = budget_flag;
  if (opt.budget == 0) {
    // No evaluations: nothing is certified.
    write_output(g, mb::dump_deterministic(json{{"found_feasible", false},
                                                {"evaluations", 0}}));
    return 1;
  }
  opt.seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : g.seed;
  opt.threads = g.threads;
  opt.uncoded_start = mb::optimize_uncoded(problem).gains;

  bool has_targets = cfg.contains("d1") && cfg.contains("d2");
  if (has_targets) {
    opt.objective = mb::HybridObjective::Targets;
    opt.target_d1 = cfg.at("d1").get<double>();
    opt.target_d2 = cfg.at("d2").get<double>();
  }
  const auto res = mb::optimize_hybrid(problem, opt);
  write_output(g, mb::dump_deterministic(mb::to_json(res)));
  if (!res.found_feasible) return 1;
  if (has_targets &&
      (res.evaluation.d1 > opt.target_d1 + 1e-12 ||
       res.evaluation.d2 > opt.target_d2 + 1e-12))
    return 1;
  return 0;
}

int run_inner_uncoded_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto problem = mb::problem_from_json(cfg.at("problem"));
  const int resolution =
      cfg.contains("resolution") ? cfg.at("resolution").get<int>() : 96;
  const auto res = mb::optimize_uncoded(problem, resolution);
  json out{{"gains", mb::to_json(res.gains)}, {"d1", res.d1}, {"d2", res.d2}};
  write_output(g, mb::dump_deterministic(out));
  if (cfg.contains("d1") && cfg.contains("d2")) {
    if (res.d1 > cfg.at("d1").get<double>() + 1e-12 ||
        res.d2 > cfg.at("d2").get<double>() + 1e-12)
      return 1;
  }
  return 0;
}

mb::CertifySearchConfig certify_config(const json& cfg, const GlobalOpts& g) {
  mb::CertifySearchConfig c;
  if (cfg.contains("search")) {
    const auto& s = cfg.at("search");
    if (s.contains("v0_card")) c.v0_card = s.at("v0_card").get<int>();
    if (s.contains("v1_card")) c.v1_card = s.at("v1_card").get<int>();
    if (s.contains("v2_card")) c.v2_card = s.at("v2_card").get<int>();
    if (s.contains("simplex_grid")) c.simplex_grid = s.at("simplex_grid").get<int>();
    if (s.contains("restarts")) c.restarts = s.at("restarts").get<int>();
    if (s.contains("sampled_function_pairs"))
      c.sampled_function_pairs = s.at("sampled_function_pairs").get<int>();
    if (s.contains("seed")) c.seed = s.at("seed").get<std::uint64_t>();
  }
  if (c.seed == 1) c.seed = g.seed;
  c.threads = g.threads;
  return c;
}

int run_discrete_certify_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto source = mb::pmf_from_json(cfg.at("source"));
  const auto channel = mb::channel_from_json(cfg.at("channel"));
  const double d1 = cfg.at("d1").get<double>();
  const double d2 = cfg.at("d2").get<double>();
  const auto dist1 = distortion_or_hamming(
      cfg, "distortion1", source.axis("S1").symbols.size());
  const auto dist2 = distortion_or_hamming(
      cfg, "distortion2", source.axis("S2").symbols.size());
  const auto config = certify_config(cfg, g);

  const auto cert =
      mb::certify_inner_point(source, channel, d1, d2, dist1, dist2, config);
  json out{{"found", cert.has_value()},
           {"auxiliary_cardinalities",
            json{{"v0", config.v0_card}, {"v1", config.v1_card},
                 {"v2", config.v2_card}}}};
  if (cert) out["certificate"] = mb::to_json(*cert);
  write_output(g, mb::dump_deterministic(out));
  return cert ? 0 : 1;
}

int run_dsc_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto source = mb::pmf_from_json(cfg.at("source"));
  const double r1 = cfg.at("r1").get<double>();
  const double r2 = cfg.at("r2").get<double>();
  const double d1 = cfg.at("d1").get<double>();
  const double d2 = cfg.at("d2").get<double>();
  const auto dist1 = distortion_or_hamming(
      cfg, "distortion1", source.axis("S1").symbols.size());
  const auto dist2 = distortion_or_hamming(
      cfg, "distortion2", source.axis("S2").symbols.size());
  const auto config = certify_config(cfg, g);

  const auto cert = mb::dsc_inner_check(source, r1, r2, d1, d2, dist1, dist2,
                                        config);
  json out{{"found", cert.has_value()}};
  if (cert) out["certificate"] = mb::to_json(*cert);
  write_output(g, mb::dump_deterministic(out));
  return cert ? 0 : 1;
}

int run_lossless_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto source = mb::pmf_from_json(cfg.at("source"));
  const auto channel = mb::channel_from_json(cfg.at("channel"));
  mb::LosslessSearchConfig config;
  if (cfg.contains("search")) {
    const auto& s = cfg.at("search");
    if (s.contains("w_card")) config.w_card = s.at("w_card").get<int>();
    if (s.contains("restarts")) config.restarts = s.at("restarts").get<int>();
    if (s.contains("simplex_grid"))
      config.simplex_grid = s.at("simplex_grid").get<int>();
    if (s.contains("seed")) config.seed = s.at("seed").get<std::uint64_t>();
  }
  if (config.seed == 1) config.seed = g.seed;
  config.threads = g.threads;
  const auto witness = mb::check_lossless_admissible(source, channel, config);
  json out{{"admissible_witness_found", witness.has_value()}};
  if (witness) out["witness"] = mb::to_json(*witness);
  write_output(g, mb::dump_deterministic(out));
  return witness ? 0 : 1;
}

int run_capacity_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto channel = mb::channel_from_json(cfg.at("channel"));
  mb::CapacityGridConfig config;
  if (cfg.contains("w_card")) config.w_card = cfg.at("w_card").get<int>();
  if (cfg.contains("dirichlet_draws"))
    config.dirichlet_draws = cfg.at("dirichlet_draws").get<int>();
  config.seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : g.seed;
  config.threads = g.threads;
  const auto tuples = mb::capacity_region_common_message(channel, config);

  json out;
  json arr = json::array();
  for (const auto& t : tuples) arr.push_back(mb::to_json(t));
  out["tuples"] = std::move(arr);

  int rc = 0;
  if (cfg.contains("targets")) {
    const double slack =
        cfg.contains("slack") ? cfg.at("slack").get<double>() : 0.0;
    json verdicts = json::array();
    for (const auto& t : cfg.at("targets")) {
      const double r0 = t.at(0).get<double>();
      const double r1 = t.at(1).get<double>();
      const double r2 = t.at(2).get<double>();
      const bool ok = mb::capacity_point_achievable(tuples, r0, r1, r2, slack);
      verdicts.push_back(json{{"r0", r0},
                              {"r1", r1},
                              {"r2", r2},
                              {"achievable", ok}});
      if (!ok) rc = 1;
    }
    out["targets"] = std::move(verdicts);
  }
  write_output(g, mb::dump_deterministic(out));
  return rc;
}

int run_correlation_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto pmf = mb::pmf_from_json(cfg.at("pmf"));
  const auto w1 = cfg.at("w1").get<std::string>();
  const auto w2 = cfg.at("w2").get<std::string>();
  std::vector<std::string> cond;
  if (cfg.contains("cond")) cond = cfg.at("cond").get<std::vector<std::string>>();
  const auto report = mb::correlation_report(pmf, w1, w2, cond);
  write_output(g, mb::dump_deterministic(mb::to_json(report)));
  return 0;
}

int run_properties_cmd(const GlobalOpts& g, const std::string& suite,
                       std::size_t count) {
  if (suite == "common-part" || suite == "certificates") {
    const auto rep = suite == "common-part"
                         ? mb::verify_common_part(count, g.seed, g.threads)
                         : mb::verify_certificates(count, g.seed, g.threads);
    json out{{"instances", rep.instances},
             {"violations", rep.violations},
             {"worst_case", rep.worst_case}};
    write_output(g, mb::dump_deterministic(out));
    return rep.violations == 0 ? 0 : 1;
  }
  mb::PropertyReport rep;
  if (suite == "lemma-chain") {
    rep = mb::verify_lemma_chain(count, g.seed, g.threads);
  } else if (suite == "dpi") {
    rep = mb::verify_dpi(count, g.seed, g.threads, false);
  } else if (suite == "dpi-equality") {
    rep = mb::verify_dpi(count, g.seed, g.threads, true);
  } else if (suite == "tensorization") {
    rep = mb::verify_tensorization(count, g.seed, 2, g.threads);
  } else {
    throw mb::invalid_input("unknown property suite: " + suite);
  }
  write_output(g, mb::dump_deterministic(mb::to_json(rep)));
  return rep.violations == 0 ? 0 : 1;
}

int run_simulate_cmd(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto problem = mb::problem_from_json(cfg.at("problem"));
  const auto gains = mb::uncoded_gains_from_json(cfg.at("gains"));
  const std::size_t n =
      cfg.contains("n") ? cfg.at("n").get<std::size_t>() : 1000000;
  const std::uint64_t seed =
      cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : g.seed;
  const auto sim = mb::simulate_uncoded(problem, gains, n, seed, g.threads);
  const auto [c1, c2] = mb::uncoded_distortions(gains, problem);
  json out = mb::to_json(sim);
  out["closed_form_d1"] = c1;
  out["closed_form_d2"] = c2;
  write_output(g, mb::dump_deterministic(out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distortion bounds for correlated Gaussian sources over a MAC"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--seed", g.seed, "RNG seed");
  app.add_option("--out", g.out_path, "Output path (default stdout)");
  app.add_option("--threads", g.threads, "Worker threads (<=1 serial)");
  app.add_flag("--timing", g.timing,
               "Report wall time in sweep rows (breaks byte determinism)");

  auto* sweep = app.add_subcommand("sweep", "Power sweep of the bound curves");
  auto* inner_hybrid =
      app.add_subcommand("inner-hybrid", "Hybrid-coding inner bound search");
  auto* inner_uncoded =
      app.add_subcommand("inner-uncoded", "Uncoded-scheme optimization");
  auto* outer = app.add_subcommand("outer", "Outer-bound membership query");
  auto* discrete =
      app.add_subcommand("discrete-certify", "Discrete inner-bound certificate");
  auto* dsc = app.add_subcommand("dsc-check",
                                 "Distributed source coding inner bound");
  auto* lossless =
      app.add_subcommand("lossless-check", "Lossless admissibility search");
  auto* capacity =
      app.add_subcommand("capacity-cm", "Common-message capacity region sweep");
  auto* correlation =
      app.add_subcommand("correlation", "Correlation measures of a pmf");
  auto* properties = app.add_subcommand("properties", "Property-test runner");
  auto* simulate = app.add_subcommand("simulate", "Uncoded scheme Monte Carlo");

  std::string suite = "lemma-chain";
  std::size_t count = 1000;
  properties->add_option(
      "--suite", suite,
      "lemma-chain | dpi | dpi-equality | tensorization | common-part | "
      "certificates");
  properties->add_option("--count", count, "Instance count");

  std::size_t budget_flag = 0;
  inner_hybrid->add_option("--budget", budget_flag,
                           "Evaluation budget (overrides config)");

  OuterGridFlags grid_flags;
  outer->add_option("--rho-hat-points", grid_flags.rho_hat_points,
                    "Witness grid resolution for rho_hat");
  outer->add_option("--rho-hat0-points", grid_flags.rho_hat0_points,
                    "Witness grid resolution for rho_hat0");
  outer->add_option("--beta-points", grid_flags.beta_points,
                    "Quantifier grid resolution for beta1");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) return run_sweep_cmd(g);
    if (inner_hybrid->parsed()) return run_inner_hybrid_cmd(g, budget_flag);
    if (inner_uncoded->parsed()) return run_inner_uncoded_cmd(g);
    if (outer->parsed()) return run_outer_cmd(g, grid_flags);
    if (discrete->parsed()) return run_discrete_certify_cmd(g);
    if (dsc->parsed()) return run_dsc_cmd(g);
    if (lossless->parsed()) return run_lossless_cmd(g);
    if (capacity->parsed()) return run_capacity_cmd(g);
    if (correlation->parsed()) return run_correlation_cmd(g);
    if (properties->parsed()) return run_properties_cmd(g, suite, count);
    if (simulate->parsed()) return run_simulate_cmd(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
