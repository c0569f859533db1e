#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "macbounds/hybrid.hpp"
#include "macbounds/outer.hpp"

namespace macbounds {

// Curve identifiers: scheme x common-part configuration. The no-common-part
// companion uses the same rho12 with rho01 = rho02 = 0.
inline const std::vector<std::string> kAllCurves = {
    "uncoded_common",   "hybrid_common",   "outer_common",
    "uncoded_nocommon", "hybrid_nocommon", "outer_nocommon"};

struct SweepSpec {
  GaussianProblem base;          // powers are overwritten by the grid
  std::vector<double> grid_db;   // symmetric power grid in dB
  bool grid_is_db = true;        // false: grid entries are linear powers
  std::vector<std::string> curves = kAllCurves;
  std::size_t hybrid_budget = 32000;
  int uncoded_resolution = 96;
  OuterGridConfig outer_grid;
  double outer_tol = 1e-5;
  std::uint64_t seed = 1;
  int threads = 1;
  bool timing = false;  // when false the seconds column is written as 0

  void validate() const;
};

struct RegionSample {
  std::string curve;
  double param_db = 0.0;
  double param_linear = 0.0;
  double d1 = 1.0;
  double d2 = 1.0;
  bool feasible = false;
  double margin_min = 0.0;
  double seconds = 0.0;
  bool error = false;
  std::string error_message;
};

// One row per (curve, grid point), sorted by (curve, parameter). Any module
// error flags the row and the sweep continues. The no-common-part optimum is
// re-used as a start for the with-common-part searches.
std::vector<RegionSample> run_sweep(const SweepSpec& spec);

// Header: curve,param_db,param_linear,d1,d2,feasible,margin_min,seconds
std::string to_csv(const std::vector<RegionSample>& rows);

// Pareto trace at fixed powers: d1 + lambda d2 scalarisations of the hybrid
// search over a lambda grid.
struct ParetoPoint {
  double lambda = 1.0;
  double d1 = 1.0, d2 = 1.0;
  bool feasible = false;
};
std::vector<ParetoPoint> pareto_trace(const GaussianProblem& problem,
                                      const std::vector<double>& lambdas,
                                      std::size_t budget, std::uint64_t seed,
                                      int threads = 1);

}  // namespace macbounds
