#include "macbounds/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>

#include "macbounds/common.hpp"
#include "macbounds/parallel.hpp"

namespace macbounds {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

GaussianProblem with_power(GaussianProblem p, double linear) {
  p.p1 = linear;
  p.p2 = linear;
  return p;
}

GaussianProblem no_common(GaussianProblem p) {
  p.rho01 = 0.0;
  p.rho02 = 0.0;
  return p;
}

// Maps the no-common-part uncoded optimum onto the with-common-part gain
// coordinates: X_k = c S_k' realises the same joint law of (S1', S2', Y).
UncodedGains rebase_gains(const UncodedGains& g, const GaussianProblem& to) {
  UncodedGains out;
  out.g10 = g.g11 * to.rho01;
  out.g11 = g.g11 * std::sqrt(1.0 - to.rho01 * to.rho01);
  out.g20 = g.g22 * to.rho02;
  out.g22 = g.g22 * std::sqrt(1.0 - to.rho02 * to.rho02);
  return out;
}

// Copies a no-common-part hybrid point into the with-common-part problem.
// The S0 columns of a no-common search act on an independent coordinate, so
// they are dropped; the V0 dither power is preserved by rescaling onto the
// large-omega0 common codeword.
HybridParams sanitize_hybrid_start(const HybridParams& p) {
  HybridParams out = p;
  out.f1[0] = 0.0;
  out.f2[0] = 0.0;
  out.g1[0] = 0.0;
  out.g2[0] = 0.0;
  const double scale =
      std::sqrt((1.0 + p.omega0) / (1.0 + kEmbedOmega0));
  out.f1[2] = p.f1[2] * scale;
  out.f2[2] = p.f2[2] * scale;
  out.g1[2] = p.g1[2] * scale;
  out.g2[2] = p.g2[2] * scale;
  out.omega0 = kEmbedOmega0;
  return out;
}

}  // namespace

void SweepSpec::validate() const {
  if (grid_db.empty()) throw invalid_input("sweep grid is empty");
  for (std::size_t i = 1; i < grid_db.size(); ++i)
    if (!(grid_db[i] > grid_db[i - 1]))
      throw invalid_input("sweep grid must be strictly increasing");
  if (curves.empty()) throw invalid_input("sweep curve set is empty");
  const std::set<std::string> known(kAllCurves.begin(), kAllCurves.end());
  for (const auto& c : curves)
    if (!known.count(c)) throw invalid_input("unknown sweep curve: " + c);
  base.validate();
}

std::vector<RegionSample> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::set<std::string> wanted(spec.curves.begin(), spec.curves.end());
  const std::size_t n = spec.grid_db.size();

  std::vector<double> linear(n), db(n);
  for (std::size_t i = 0; i < n; ++i) {
    db[i] = spec.grid_is_db ? spec.grid_db[i]
                            : 10.0 * std::log10(spec.grid_db[i]);
    linear[i] = spec.grid_is_db ? db_to_linear(spec.grid_db[i])
                                : spec.grid_db[i];
  }

  const bool need_hybrid = wanted.count("hybrid_common") ||
                           wanted.count("hybrid_nocommon");
  const bool cross_seed_hybrid =
      wanted.count("hybrid_common") && wanted.count("hybrid_nocommon");

  std::vector<RegionSample> rows;
  auto emit = [&](const std::string& curve, std::size_t i, double d1, double d2,
                  bool feasible, double margin, double secs) {
    RegionSample r;
    r.curve = curve;
    r.param_db = db[i];
    r.param_linear = linear[i];
    r.d1 = d1;
    r.d2 = d2;
    r.feasible = feasible;
    r.margin_min = margin;
    r.seconds = spec.timing ? secs : 0.0;
    rows.push_back(std::move(r));
  };
  auto emit_error = [&](const std::string& curve, std::size_t i,
                        const std::string& message) {
    RegionSample r;
    r.curve = curve;
    r.param_db = db[i];
    r.param_linear = linear[i];
    r.d1 = std::nan("");
    r.d2 = std::nan("");
    r.error = true;
    r.error_message = message;
    rows.push_back(std::move(r));
  };

  // Phase 1: uncoded optima, no-common config first so its optimum seeds the
  // with-common search.
  std::vector<std::optional<UncodedOptimum>> unc_nc(n), unc_c(n);
  std::vector<std::string> unc_nc_err(n), unc_c_err(n);
  std::vector<double> unc_nc_sec(n, 0.0), unc_c_sec(n, 0.0);
  parallel_for(n, spec.threads, [&](std::size_t i) {
    Timer t;
    try {
      const auto prob = no_common(with_power(spec.base, linear[i]));
      unc_nc[i] = optimize_uncoded(prob, spec.uncoded_resolution);
    } catch (const std::exception& e) {
      unc_nc_err[i] = e.what();
    }
    unc_nc_sec[i] = t.elapsed();
  });
  parallel_for(n, spec.threads, [&](std::size_t i) {
    Timer t;
    try {
      const auto prob = with_power(spec.base, linear[i]);
      std::vector<UncodedGains> starts;
      if (unc_nc[i]) starts.push_back(rebase_gains(unc_nc[i]->gains, prob));
      unc_c[i] = optimize_uncoded(prob, spec.uncoded_resolution, starts);
    } catch (const std::exception& e) {
      unc_c_err[i] = e.what();
    }
    unc_c_sec[i] = t.elapsed();
  });

  auto emit_uncoded = [&](const std::string& curve,
                          const std::vector<std::optional<UncodedOptimum>>& res,
                          const std::vector<std::string>& errs,
                          const std::vector<double>& secs) {
    for (std::size_t i = 0; i < n; ++i) {
      if (res[i])
        emit(curve, i, res[i]->d1, res[i]->d2, true, 0.0, secs[i]);
      else
        emit_error(curve, i, errs[i]);
    }
  };
  if (wanted.count("uncoded_nocommon"))
    emit_uncoded("uncoded_nocommon", unc_nc, unc_nc_err, unc_nc_sec);
  if (wanted.count("uncoded_common"))
    emit_uncoded("uncoded_common", unc_c, unc_c_err, unc_c_sec);

  // Phase 2: hybrid searches, cross-seeding the with-common run with the
  // no-common champion.
  std::vector<std::optional<HybridSearchResult>> hyb_nc(n), hyb_c(n);
  std::vector<std::string> hyb_nc_err(n), hyb_c_err(n);
  std::vector<double> hyb_nc_sec(n, 0.0), hyb_c_sec(n, 0.0);
  if (need_hybrid) {
    // Grid points are chained: a feasible point keeps its margins and
    // distortions when the power budget grows, so seeding each search with
    // the previous champion makes the curve monotone by construction. A
    // backward pass then lets high-power solutions (power-projected) rescue
    // weaker neighbours. Points therefore run sequentially; the multi-start
    // search parallelises internally.
    auto chained_run = [&](const std::string& curve_suffix,
                           std::vector<std::optional<HybridSearchResult>>& out,
                           std::vector<std::string>& errs,
                           std::vector<double>& secs,
                           const std::uint64_t seed_base, const bool common) {
      auto problem_at = [&](std::size_t i) {
        auto prob = with_power(spec.base, linear[i]);
        if (!common) prob = no_common(prob);
        return prob;
      };
      auto run_point = [&](std::size_t i, bool backward) {
        Timer t;
        try {
          const auto prob = problem_at(i);
          HybridSearchOptions opt;
          opt.budget = backward ? spec.hybrid_budget / 2 : spec.hybrid_budget;
          opt.seed = derive_seed(spec.seed, seed_base + (backward ? n : 0) + i);
          opt.threads = spec.threads;
          const auto& unc = common ? unc_c[i] : unc_nc[i];
          if (unc) opt.uncoded_start = unc->gains;
          if (common && cross_seed_hybrid && hyb_nc[i] &&
              hyb_nc[i]->found_feasible)
            opt.extra_starts.push_back(sanitize_hybrid_start(hyb_nc[i]->params));
          if (!backward && i > 0 && out[i - 1] && out[i - 1]->found_feasible)
            opt.extra_starts.push_back(out[i - 1]->params);
          if (backward && i + 1 < n && out[i + 1] && out[i + 1]->found_feasible)
            opt.extra_starts.push_back(out[i + 1]->params);
          auto res = optimize_hybrid(prob, opt);
          if (!out[i] || !out[i]->found_feasible ||
              (res.found_feasible && res.objective < out[i]->objective))
            out[i] = res;
        } catch (const std::exception& e) {
          errs[i] = e.what();
        }
        secs[i] += t.elapsed();
      };
      for (std::size_t i = 0; i < n; ++i) run_point(i, false);
      for (std::size_t i = n; i-- > 0;) run_point(i, true);
      // Inheritance pass: a champion stays feasible with identical margins
      // and distortions at any higher power, so the curve never rises.
      for (std::size_t i = 1; i < n; ++i) {
        if (!out[i - 1] || !out[i - 1]->found_feasible) continue;
        const double prev = out[i - 1]->objective;
        if (out[i] && out[i]->found_feasible && out[i]->objective <= prev)
          continue;
        try {
          const auto ev = evaluate_hybrid(out[i - 1]->params, problem_at(i));
          if (!ev.feasible) continue;
          HybridSearchResult inherited;
          inherited.params = out[i - 1]->params;
          inherited.evaluation = ev;
          inherited.found_feasible = true;
          inherited.objective = std::max(ev.d1, ev.d2);
          out[i] = inherited;
        } catch (const std::exception&) {
        }
      }
      (void)curve_suffix;
    };

    if (wanted.count("hybrid_nocommon") || cross_seed_hybrid)
      chained_run("nocommon", hyb_nc, hyb_nc_err, hyb_nc_sec, 100, false);
    if (wanted.count("hybrid_common"))
      chained_run("common", hyb_c, hyb_c_err, hyb_c_sec, 200, true);
    auto emit_hybrid = [&](const std::string& curve,
                           const std::vector<std::optional<HybridSearchResult>>& res,
                           const std::vector<std::string>& errs,
                           const std::vector<double>& secs) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!res[i]) {
          emit_error(curve, i, errs[i].empty() ? "hybrid search failed" : errs[i]);
          continue;
        }
        const auto& ev = res[i]->evaluation;
        double mmin = ev.margins[0];
        for (double m : ev.margins) mmin = std::min(mmin, m);
        emit(curve, i, ev.d1, ev.d2, ev.feasible, mmin, secs[i]);
      }
    };
    if (wanted.count("hybrid_nocommon"))
      emit_hybrid("hybrid_nocommon", hyb_nc, hyb_nc_err, hyb_nc_sec);
    if (wanted.count("hybrid_common"))
      emit_hybrid("hybrid_common", hyb_c, hyb_c_err, hyb_c_sec);
  }

  // Phase 3: outer bounds. The membership scan parallelises internally.
  for (const bool common : {false, true}) {
    const std::string curve = common ? "outer_common" : "outer_nocommon";
    if (!wanted.count(curve)) continue;
    for (std::size_t i = 0; i < n; ++i) {
      Timer t;
      try {
        auto prob = with_power(spec.base, linear[i]);
        if (!common) prob = no_common(prob);
        const double d = symmetric_outer_min_distortion(
            prob, spec.outer_grid, spec.outer_tol, spec.threads);
        emit(curve, i, d, d, true, 0.0, t.elapsed());
      } catch (const std::exception& e) {
        emit_error(curve, i, e.what());
      }
    }
  }

  std::sort(rows.begin(), rows.end(),
            [](const RegionSample& a, const RegionSample& b) {
              if (a.curve != b.curve) return a.curve < b.curve;
              return a.param_linear < b.param_linear;
            });
  return rows;
}

std::string to_csv(const std::vector<RegionSample>& rows) {
  std::ostringstream os;
  os << "curve,param_db,param_linear,d1,d2,feasible,margin_min,seconds\n";
  for (const auto& r : rows) {
    os << r.curve << ',' << format_double(r.param_db) << ','
       << format_double(r.param_linear) << ',' << format_double(r.d1) << ','
       << format_double(r.d2) << ',' << (r.feasible ? 1 : 0) << ','
       << format_double(r.margin_min) << ',' << format_double(r.seconds)
       << '\n';
  }
  return os.str();
}

std::vector<ParetoPoint> pareto_trace(const GaussianProblem& problem,
                                      const std::vector<double>& lambdas,
                                      std::size_t budget, std::uint64_t seed,
                                      int threads) {
  problem.validate();
  std::vector<ParetoPoint> out(lambdas.size());
  const auto unc = optimize_uncoded(problem);
  parallel_for(lambdas.size(), threads, [&](std::size_t i) {
    HybridSearchOptions opt;
    opt.budget = budget;
    opt.seed = derive_seed(seed, 300 + i);
    opt.objective = HybridObjective::Weighted;
    opt.lambda = lambdas[i];
    opt.uncoded_start = unc.gains;
    const auto res = optimize_hybrid(problem, opt);
    out[i] = {lambdas[i], res.evaluation.d1, res.evaluation.d2,
              res.found_feasible};
  });
  return out;
}

}  // namespace macbounds
