#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace macbounds {

// Compass (coordinate step-halving) pattern search. Derivative-free, fully
// deterministic: coordinates are probed in index order and the first
// improvement is taken. Stops when every step fell below step_tol or the
// evaluation budget ran out. score() must return lower-is-better.
template <typename ScoreFn>
struct PatternSearchState {
  Eigen::VectorXd x;
  double score = 0.0;
  std::size_t evaluations = 0;
};

template <typename ScoreFn>
PatternSearchState<ScoreFn> pattern_search(Eigen::VectorXd x0,
                                           Eigen::VectorXd steps,
                                           ScoreFn&& score,
                                           std::size_t max_evaluations,
                                           double step_tol = 1e-12) {
  PatternSearchState<ScoreFn> st;
  st.x = std::move(x0);
  st.score = score(st.x);
  st.evaluations = 1;

  Eigen::VectorXd h = std::move(steps);
  Eigen::VectorXd trial = st.x;
  while (st.evaluations < max_evaluations && h.maxCoeff() > step_tol) {
    bool improved = false;
    for (Eigen::Index i = 0; i < st.x.size(); ++i) {
      for (double dir : {+1.0, -1.0}) {
        if (st.evaluations >= max_evaluations) break;
        trial = st.x;
        trial(i) += dir * h(i);
        const double s = score(trial);
        ++st.evaluations;
        if (s < st.score) {
          st.x = trial;
          st.score = s;
          improved = true;
          // Greedy ray extension while the same direction keeps paying.
          while (st.evaluations < max_evaluations) {
            trial = st.x;
            trial(i) += dir * h(i);
            const double s2 = score(trial);
            ++st.evaluations;
            if (s2 < st.score) {
              st.x = trial;
              st.score = s2;
            } else {
              break;
            }
          }
          break;  // next coordinate
        }
      }
    }
    if (!improved) h *= 0.5;
  }
  return st;
}

}  // namespace macbounds
