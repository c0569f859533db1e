#include "macbounds/correlation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "macbounds/common.hpp"
#include "macbounds/parallel.hpp"

namespace macbounds {

namespace {

// Dense view p[c][a][b] over three grouped label sets.
struct GroupedView {
  std::size_t na = 1, nb = 1, nc = 1;
  std::vector<double> p;
  std::vector<double> va, vb;  // numeric values when the group is one label

  double at(std::size_t c, std::size_t a, std::size_t b) const {
    return p[(c * na + a) * nb + b];
  }
};

GroupedView build_view(const JointPmf& pmf, const std::vector<std::string>& a,
                       const std::vector<std::string>& b,
                       const std::vector<std::string>& cond) {
  GroupedView v;
  auto card = [&](const std::vector<std::string>& ls) {
    std::size_t n = 1;
    for (const auto& l : ls) n *= pmf.axis(l).symbols.size();
    return n;
  };
  v.na = card(a);
  v.nb = card(b);
  v.nc = std::max<std::size_t>(card(cond), 1);
  v.p.assign(v.na * v.nb * v.nc, 0.0);

  auto group_index = [&](const std::vector<std::string>& ls,
                         const std::vector<std::size_t>& idx) {
    std::size_t g = 0;
    for (const auto& l : ls) {
      const std::size_t ai = pmf.axis_index(l);
      g = g * pmf.axes()[ai].symbols.size() + idx[ai];
    }
    return g;
  };

  for (std::size_t f = 0; f < pmf.size(); ++f) {
    const double mass = pmf.table()[f];
    if (mass == 0.0) continue;
    const auto idx = pmf.unflatten(f);
    const std::size_t ga = group_index(a, idx);
    const std::size_t gb = group_index(b, idx);
    const std::size_t gc = cond.empty() ? 0 : group_index(cond, idx);
    v.p[(gc * v.na + ga) * v.nb + gb] += mass;
  }
  if (a.size() == 1) v.va = pmf.axis(a[0]).values;
  if (b.size() == 1) v.vb = pmf.axis(b[0]).values;
  return v;
}

struct SliceMoments {
  double pc = 0.0;     // slice probability
  double cov = 0.0;    // cov(W1, W2 | c)
  double var1 = 0.0, var2 = 0.0;
};

SliceMoments slice_moments(const GroupedView& v, std::size_t c) {
  SliceMoments m;
  double e1 = 0.0, e2 = 0.0, e12 = 0.0, e11 = 0.0, e22 = 0.0;
  for (std::size_t a = 0; a < v.na; ++a) {
    for (std::size_t b = 0; b < v.nb; ++b) {
      const double p = v.at(c, a, b);
      if (p == 0.0) continue;
      m.pc += p;
      e1 += p * v.va[a];
      e2 += p * v.vb[b];
      e12 += p * v.va[a] * v.vb[b];
      e11 += p * v.va[a] * v.va[a];
      e22 += p * v.vb[b] * v.vb[b];
    }
  }
  if (m.pc <= 0.0) return m;
  e1 /= m.pc;
  e2 /= m.pc;
  e12 /= m.pc;
  e11 /= m.pc;
  e22 /= m.pc;
  m.cov = e12 - e1 * e2;
  m.var1 = std::max(0.0, e11 - e1 * e1);
  m.var2 = std::max(0.0, e22 - e2 * e2);
  return m;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Second singular value of the support-normalised matrix of one slice.
double slice_sigma2(const GroupedView& v, std::size_t c) {
  std::vector<double> pa(v.na, 0.0), pb(v.nb, 0.0);
  double pc = 0.0;
  for (std::size_t a = 0; a < v.na; ++a)
    for (std::size_t b = 0; b < v.nb; ++b) {
      const double p = v.at(c, a, b);
      pa[a] += p;
      pb[b] += p;
      pc += p;
    }
  if (pc <= 0.0) return 0.0;
  std::vector<std::size_t> sa, sb;
  for (std::size_t a = 0; a < v.na; ++a)
    if (pa[a] > 0.0) sa.push_back(a);
  for (std::size_t b = 0; b < v.nb; ++b)
    if (pb[b] > 0.0) sb.push_back(b);
  if (sa.size() < 2 || sb.size() < 2) return 0.0;

  Eigen::MatrixXd q(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i)
    for (std::size_t j = 0; j < sb.size(); ++j)
      q(i, j) = (v.at(c, sa[i], sb[j]) / pc) /
                std::sqrt((pa[sa[i]] / pc) * (pb[sb[j]] / pc));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q);
  return clamp01(svd.singularValues()(1));
}

double slice_sigma2_ace(const GroupedView& v, std::size_t c) {
  std::vector<double> pa(v.na, 0.0), pb(v.nb, 0.0);
  double pc = 0.0;
  for (std::size_t a = 0; a < v.na; ++a)
    for (std::size_t b = 0; b < v.nb; ++b) {
      const double p = v.at(c, a, b);
      pa[a] += p;
      pb[b] += p;
      pc += p;
    }
  if (pc <= 0.0) return 0.0;
  std::vector<std::size_t> sa, sb;
  for (std::size_t a = 0; a < v.na; ++a)
    if (pa[a] > 0.0) sa.push_back(a);
  for (std::size_t b = 0; b < v.nb; ++b)
    if (pb[b] > 0.0) sb.push_back(b);
  if (sa.size() < 2 || sb.size() < 2) return 0.0;

  Eigen::MatrixXd q(sa.size(), sb.size());
  Eigen::VectorXd u(sa.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    u(i) = std::sqrt(pa[sa[i]] / pc);
    for (std::size_t j = 0; j < sb.size(); ++j)
      q(i, j) = (v.at(c, sa[i], sb[j]) / pc) /
                std::sqrt((pa[sa[i]] / pc) * (pb[sb[j]] / pc));
  }

  // Deflated power iteration on Q Q^T; u is the exact top singular vector.
  Eigen::VectorXd x(sa.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x(i) = std::sin(static_cast<double>(i) + 1.0);
  x -= u * u.dot(x);
  if (x.norm() < 1e-14) {
    x.setOnes();
    x(0) += 0.5;
    x -= u * u.dot(x);
  }
  x.normalize();
  double sigma2_sq = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd y = q.transpose() * x;
    Eigen::VectorXd z = q * y;
    z -= u * u.dot(z);
    const double norm = z.norm();
    if (norm < 1e-300) return 0.0;
    z /= norm;
    const double rayleigh = (q.transpose() * z).squaredNorm();
    if (std::abs(rayleigh - sigma2_sq) < 1e-15) {
      sigma2_sq = rayleigh;
      break;
    }
    sigma2_sq = rayleigh;
    x = z;
  }
  return clamp01(std::sqrt(std::max(0.0, sigma2_sq)));
}

}  // namespace

double pearson(const JointPmf& pmf, const std::string& w1,
               const std::string& w2, const std::vector<std::string>& cond) {
  const auto v = build_view(pmf, {w1}, {w2}, cond);
  double ecov = 0.0, evar1 = 0.0, evar2 = 0.0;
  for (std::size_t c = 0; c < v.nc; ++c) {
    const auto m = slice_moments(v, c);
    ecov += m.pc * m.cov;
    evar1 += m.pc * m.var1;
    evar2 += m.pc * m.var2;
  }
  if (evar1 <= 0.0 || evar2 <= 0.0)
    throw degenerate_variable("pearson: a coordinate has zero variance");
  return ecov / std::sqrt(evar1 * evar2);
}

double pearson_samples(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty())
    throw invalid_input("pearson_samples needs equal-length nonempty arrays");
  const double n = static_cast<double>(x.size());
  double ex = 0.0, ey = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ex += x[i];
    ey += y[i];
  }
  ex /= n;
  ey /= n;
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxx += (x[i] - ex) * (x[i] - ex);
    cyy += (y[i] - ey) * (y[i] - ey);
    cxy += (x[i] - ex) * (y[i] - ey);
  }
  if (cxx <= 0.0 || cyy <= 0.0)
    throw degenerate_variable("pearson_samples: zero variance");
  return cxy / std::sqrt(cxx * cyy);
}

double correlation_ratio(const JointPmf& pmf, const std::string& target,
                         const std::vector<std::string>& predictors,
                         const std::vector<std::string>& cond) {
  const auto v = build_view(pmf, {target}, predictors, cond);

  double denom = 0.0;          // E[var(W1|W0)] (var(W1) when unconditional)
  double evar_given_bc = 0.0;  // E[var(W1|W2,W0)]
  double evar_means = 0.0;     // E[var(E[W1|W2,W0]) | W0]

  for (std::size_t c = 0; c < v.nc; ++c) {
    double pc = 0.0, e1 = 0.0, e11 = 0.0;
    for (std::size_t a = 0; a < v.na; ++a)
      for (std::size_t b = 0; b < v.nb; ++b) {
        const double p = v.at(c, a, b);
        pc += p;
        e1 += p * v.va[a];
        e11 += p * v.va[a] * v.va[a];
      }
    if (pc <= 0.0) continue;
    denom += e11 - e1 * e1 / pc;  // pc * var(W1|c)

    double mean_sq = 0.0;
    for (std::size_t b = 0; b < v.nb; ++b) {
      double pb = 0.0, eb = 0.0, ebb = 0.0;
      for (std::size_t a = 0; a < v.na; ++a) {
        const double p = v.at(c, a, b);
        pb += p;
        eb += p * v.va[a];
        ebb += p * v.va[a] * v.va[a];
      }
      if (pb <= 0.0) continue;
      evar_given_bc += ebb - eb * eb / pb;  // p(b,c) var(W1|b,c)
      mean_sq += eb * eb / pb;              // p(b,c) E[W1|b,c]^2
    }
    evar_means += mean_sq - e1 * e1 / pc;  // pc * var_c(E[W1|W2,c])
  }

  if (denom <= 0.0)
    throw degenerate_variable("correlation_ratio: target has zero variance");

  const double form1 = evar_means / denom;          // var-of-means form
  const double form2 = 1.0 - evar_given_bc / denom; // residual-variance form
  if (std::abs(form1 - form2) > 1e-12)
    throw std::logic_error("correlation_ratio forms disagree: " +
                           format_double(form1) + " vs " +
                           format_double(form2));
  return std::sqrt(clamp01(form1));
}

double maximal_correlation(const JointPmf& pmf,
                           const std::vector<std::string>& a,
                           const std::vector<std::string>& b,
                           const std::vector<std::string>& cond) {
  const auto v = build_view(pmf, a, b, cond);
  double best = 0.0;
  for (std::size_t c = 0; c < v.nc; ++c)
    best = std::max(best, slice_sigma2(v, c));
  return best;
}

double maximal_correlation_ace(const JointPmf& pmf,
                               const std::vector<std::string>& a,
                               const std::vector<std::string>& b,
                               const std::vector<std::string>& cond) {
  const auto v = build_view(pmf, a, b, cond);
  double best = 0.0;
  for (std::size_t c = 0; c < v.nc; ++c)
    best = std::max(best, slice_sigma2_ace(v, c));
  return best;
}

CorrelationReport correlation_report(const JointPmf& pmf,
                                     const std::string& w1,
                                     const std::string& w2,
                                     const std::vector<std::string>& cond) {
  CorrelationReport r;
  r.pearson = pearson(pmf, w1, w2);
  r.ratio_12 = correlation_ratio(pmf, w1, {w2});
  r.ratio_21 = correlation_ratio(pmf, w2, {w1});
  r.maximal = maximal_correlation(pmf, {w1}, {w2});
  for (const auto& c : cond) {
    r.pearson_given[c] = pearson(pmf, w1, w2, {c});
    r.ratio_12_given[c] = correlation_ratio(pmf, w1, {w2}, {c});
    r.ratio_21_given[c] = correlation_ratio(pmf, w2, {w1}, {c});
    r.maximal_given[c] = maximal_correlation(pmf, {w1}, {w2}, {c});
  }
  return r;
}

namespace {

struct InstanceOutcome {
  double worst = std::numeric_limits<double>::infinity();
  std::string what;
};

PropertyReport reduce_outcomes(const std::vector<InstanceOutcome>& outcomes) {
  PropertyReport rep;
  rep.instances = outcomes.size();
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& oc : outcomes) {
    if (oc.worst < rep.worst_margin) {
      rep.worst_margin = oc.worst;
      rep.worst_case = oc.what;
    }
    if (oc.worst < -1e-9) ++rep.violations;
  }
  if (outcomes.empty()) rep.worst_margin = 0.0;
  return rep;
}

void track(InstanceOutcome& oc, double margin, const char* what) {
  if (margin < oc.worst) {
    oc.worst = margin;
    oc.what = what;
  }
}

}  // namespace

PropertyReport verify_lemma_chain(std::size_t count, std::uint64_t seed,
                                  int threads) {
  std::vector<InstanceOutcome> outcomes(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const auto pmf = random_pmf({"W0", "W1", "W2"}, {3, 3, 3},
                                derive_seed(seed, i));
    InstanceOutcome oc;

    const double rho = std::abs(pearson(pmf, "W1", "W2"));
    const double th12 = correlation_ratio(pmf, "W1", {"W2"});
    const double rm = maximal_correlation(pmf, {"W1"}, {"W2"});
    track(oc, th12 - rho, "theta >= |rho|");
    track(oc, rm - th12, "rho_m >= theta");
    track(oc, 1.0 - rm, "rho_m <= 1");

    const double rho_c = std::abs(pearson(pmf, "W1", "W2", {"W0"}));
    const double th_c = correlation_ratio(pmf, "W1", {"W2"}, {"W0"});
    const double rm_c = maximal_correlation(pmf, {"W1"}, {"W2"}, {"W0"});
    track(oc, th_c - rho_c, "conditional theta >= |rho|");
    track(oc, rm_c - th_c, "conditional rho_m >= theta");
    track(oc, 1.0 - rm_c, "conditional rho_m <= 1");

    const double th_pair = correlation_ratio(pmf, "W1", {"W2", "W0"});
    const double th_w0 = correlation_ratio(pmf, "W1", {"W0"});
    track(oc, th_pair - th_w0, "theta(W1,W2W0) >= theta(W1,W0)");
    const double rm_pair = maximal_correlation(pmf, {"W1"}, {"W2", "W0"});
    const double rm_w0 = maximal_correlation(pmf, {"W1"}, {"W0"});
    track(oc, rm_pair - rm_w0, "rho_m(W1,W2W0) >= rho_m(W1,W0)");

    const double lhs = 1.0 - th_pair * th_pair;
    const double rhs = (1.0 - th_w0 * th_w0) * (1.0 - th_c * th_c);
    track(oc, -std::abs(lhs - rhs), "product identity");
    outcomes[i] = oc;
  });
  return reduce_outcomes(outcomes);
}

PropertyReport verify_dpi(std::size_t count, std::uint64_t seed, int threads,
                          bool equality_case) {
  std::vector<InstanceOutcome> outcomes(count);
  parallel_for(count, threads, [&](std::size_t i) {
    std::mt19937_64 eng(derive_seed(seed, 7000 + i));
    std::exponential_distribution<double> ed(1.0);
    // Markov by construction: p(x,y,w,z) = p(y,w) p(x|y,w) p(z|y,w).
    // The equality claim is exercised at its exactly-attained instance:
    // degenerate W and binary Y, where the conditional-expectation function
    // is forced onto the second singular function. For richer alphabets the
    // middle inequality is strict even under identical conditionals.
    const std::size_t nx = 3, ny = equality_case ? 2 : 3;
    const std::size_t nw = equality_case ? 1 : 2;
    const std::size_t nz = equality_case ? nx : 3;

    std::vector<double> pyw(ny * nw);
    double s = 0.0;
    for (auto& p : pyw) {
      p = ed(eng);
      s += p;
    }
    for (auto& p : pyw) p /= s;

    std::vector<double> px(ny * nw * nx), pz(ny * nw * nz);
    for (std::size_t yw = 0; yw < ny * nw; ++yw) {
      double sx = 0.0, sz = 0.0;
      for (std::size_t x = 0; x < nx; ++x) {
        px[yw * nx + x] = ed(eng);
        sx += px[yw * nx + x];
      }
      for (std::size_t z = 0; z < nz; ++z) {
        pz[yw * nz + z] = ed(eng);
        sz += pz[yw * nz + z];
      }
      for (std::size_t x = 0; x < nx; ++x) px[yw * nx + x] /= sx;
      for (std::size_t z = 0; z < nz; ++z) pz[yw * nz + z] /= sz;
    }
    if (equality_case) pz = px;

    std::vector<PmfAxis> axes(4);
    axes[0].name = "X";
    axes[1].name = "Y";
    axes[2].name = "W";
    axes[3].name = "Z";
    for (std::size_t k = 0; k < nx; ++k)
      axes[0].symbols.push_back(std::to_string(k));
    for (std::size_t k = 0; k < ny; ++k)
      axes[1].symbols.push_back(std::to_string(k));
    for (std::size_t k = 0; k < nw; ++k)
      axes[2].symbols.push_back(std::to_string(k));
    for (std::size_t k = 0; k < nz; ++k)
      axes[3].symbols.push_back(std::to_string(k));

    std::vector<double> table(nx * ny * nw * nz, 0.0);
    double total = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t w = 0; w < nw; ++w)
          for (std::size_t z = 0; z < nz; ++z) {
            const std::size_t yw = y * nw + w;
            const double p = pyw[yw] * px[yw * nx + x] * pz[yw * nz + z];
            table[((x * ny + y) * nw + w) * nz + z] = p;
            total += p;
          }
    for (auto& p : table) p /= total;
    const JointPmf pmf(std::move(axes), std::move(table));

    InstanceOutcome oc;
    const double rho_xz = pearson(pmf, "X", "Z", {"W"});
    const double th_xy = correlation_ratio(pmf, "X", {"Y"}, {"W"});
    const double th_zy = correlation_ratio(pmf, "Z", {"Y"}, {"W"});
    const double th_xz = correlation_ratio(pmf, "X", {"Z"}, {"W"});
    const double rm_xy = maximal_correlation(pmf, {"X"}, {"Y"}, {"W"});
    const double rm_zy = maximal_correlation(pmf, {"Z"}, {"Y"}, {"W"});
    const double rm_xz = maximal_correlation(pmf, {"X"}, {"Z"}, {"W"});

    if (!equality_case) {
      track(oc, th_xy * th_zy - std::abs(rho_xz), "rho(X,Z|W) <= theta theta");
      track(oc, th_xy * rm_zy - th_xz, "theta(X,Z|W) <= theta rho_m");
      track(oc, rm_xy * rm_zy - rm_xz, "rho_m(X,Z|W) <= rho_m rho_m");
    } else {
      track(oc, -std::abs(rho_xz - th_xy * th_zy), "rho equality");
      track(oc, -std::abs(th_xz - th_xy * rm_zy), "theta equality");
      track(oc, -std::abs(rm_xz - rm_xy * rm_zy), "rho_m equality");
    }
    outcomes[i] = oc;
  });
  return reduce_outcomes(outcomes);
}

PropertyReport verify_tensorization(std::size_t count, std::uint64_t seed,
                                    int n, int threads) {
  if (n < 1) throw invalid_input("tensorization needs n >= 1");
  std::vector<InstanceOutcome> outcomes(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const auto pair = random_pmf({"W1", "W2"}, {3, 3}, derive_seed(seed, 40 + i));
    const double single = maximal_correlation(pair, {"W1"}, {"W2"});

    // n-fold iid product over grouped alphabets.
    const std::size_t k = 3;
    std::size_t kn = 1;
    for (int t = 0; t < n; ++t) kn *= k;
    std::vector<PmfAxis> axes(2);
    axes[0].name = "A";
    axes[1].name = "B";
    for (std::size_t s = 0; s < kn; ++s) {
      axes[0].symbols.push_back(std::to_string(s));
      axes[1].symbols.push_back(std::to_string(s));
    }
    std::vector<double> table(kn * kn, 1.0);
    for (std::size_t a = 0; a < kn; ++a)
      for (std::size_t b = 0; b < kn; ++b) {
        std::size_t ai = a, bi = b;
        double p = 1.0;
        for (int t = 0; t < n; ++t) {
          p *= pair.table()[(ai % k) * k + (bi % k)];
          ai /= k;
          bi /= k;
        }
        table[a * kn + b] = p;
      }
    double s2 = std::accumulate(table.begin(), table.end(), 0.0);
    for (auto& p : table) p /= s2;
    const JointPmf product(std::move(axes), std::move(table));
    const double multi = maximal_correlation(product, {"A"}, {"B"});

    InstanceOutcome oc;
    track(oc, single - multi, "tensorization rho_m(n) <= rho_m(1)");
    outcomes[i] = oc;
  });
  return reduce_outcomes(outcomes);
}

}  // namespace macbounds
