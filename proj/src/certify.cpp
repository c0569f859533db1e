#include "macbounds/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "macbounds/common.hpp"
#include "macbounds/parallel.hpp"

namespace macbounds {

void DiscreteChannel::validate() const {
  if (x1_card == 0 || x2_card == 0 || y_card == 0)
    throw invalid_input("channel alphabets must be nonempty");
  if (table.size() != x1_card * x2_card * y_card)
    throw invalid_input("channel table size mismatch");
  for (std::size_t x1 = 0; x1 < x1_card; ++x1)
    for (std::size_t x2 = 0; x2 < x2_card; ++x2) {
      double s = 0.0;
      for (std::size_t y = 0; y < y_card; ++y) {
        const double p = prob(x1, x2, y);
        if (p < 0.0) throw invalid_input("channel probability is negative");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-12)
        throw invalid_input("channel rows must sum to 1");
    }
}

DiscreteChannel DiscreteChannel::noiseless(std::size_t x1_card,
                                           std::size_t x2_card) {
  DiscreteChannel ch;
  ch.x1_card = x1_card;
  ch.x2_card = x2_card;
  ch.y_card = x1_card * x2_card;
  ch.table.assign(x1_card * x2_card * ch.y_card, 0.0);
  for (std::size_t x1 = 0; x1 < x1_card; ++x1)
    for (std::size_t x2 = 0; x2 < x2_card; ++x2)
      ch.table[(x1 * x2_card + x2) * ch.y_card + (x1 * x2_card + x2)] = 1.0;
  return ch;
}

DistortionTable DistortionTable::hamming(std::size_t card) {
  DistortionTable t;
  t.rows = t.cols = card;
  t.d.assign(card * card, 1.0);
  for (std::size_t s = 0; s < card; ++s) t.d[s * card + s] = 0.0;
  return t;
}

namespace {

struct SourceInfo {
  std::size_t n1 = 0, n2 = 0;
  std::vector<double> p12;  // [s1][s2]
  CommonPart cp;
};

SourceInfo source_info(const JointPmf& source) {
  SourceInfo si;
  const auto marg = source.marginal({"S1", "S2"});
  si.n1 = marg.axes()[0].symbols.size();
  si.n2 = marg.axes()[1].symbols.size();
  si.p12 = marg.table();
  si.cp = extract_common_part(source, "S1", "S2");
  return si;
}

std::vector<PmfAxis> make_axes(const std::vector<std::pair<std::string, std::size_t>>& spec) {
  std::vector<PmfAxis> axes;
  for (const auto& [name, card] : spec) {
    PmfAxis ax;
    ax.name = name;
    for (std::size_t s = 0; s < card; ++s)
      ax.symbols.push_back(std::to_string(s));
    axes.push_back(std::move(ax));
  }
  return axes;
}

// One simplex row of the conditional tables. Modes: raw Dirichlet, Dirichlet
// snapped to the g-lattice, or a structured deterministic/noisy pattern.
void dirichlet_row(std::mt19937_64& eng, double* row, std::size_t m) {
  std::exponential_distribution<double> ed(1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    row[i] = ed(eng);
    s += row[i];
  }
  for (std::size_t i = 0; i < m; ++i) row[i] /= s;
}

void snap_row(double* row, std::size_t m, int grid) {
  if (grid < 2) return;
  const double steps = grid - 1;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    row[i] = std::round(row[i] * steps) / steps;
    s += row[i];
  }
  if (s <= 0.0) {
    row[0] = 1.0;
    s = 1.0;
  }
  for (std::size_t i = 0; i < m; ++i) row[i] /= s;
}

enum class RowPattern { Identity, Noisy, Uniform };

void pattern_row(double* row, std::size_t m, std::size_t input_symbol,
                 RowPattern pat) {
  std::fill(row, row + m, 0.0);
  switch (pat) {
    case RowPattern::Identity:
      row[input_symbol % m] = 1.0;
      break;
    case RowPattern::Noisy: {
      const std::size_t hit = input_symbol % m;
      for (std::size_t i = 0; i < m; ++i)
        row[i] = i == hit ? 0.75 : 0.25 / std::max<std::size_t>(1, m - 1);
      if (m == 1) row[0] = 1.0;
      break;
    }
    case RowPattern::Uniform:
      for (std::size_t i = 0; i < m; ++i) row[i] = 1.0 / m;
      break;
  }
}

struct Conditionals {
  std::vector<double> q0;  // [s0][v0]
  std::vector<double> q1;  // [s1][v0][v1]
  std::vector<double> q2;  // [s2][v0][v2]
};

Conditionals draw_conditionals(const SourceInfo& si,
                               const CertifySearchConfig& cfg,
                               std::size_t restart) {
  const std::size_t s0c = si.cp.s0_cardinality;
  const std::size_t m0 = cfg.v0_card, m1 = cfg.v1_card, m2 = cfg.v2_card;
  Conditionals c;
  c.q0.resize(s0c * m0);
  c.q1.resize(si.n1 * m0 * m1);
  c.q2.resize(si.n2 * m0 * m2);

  // First restarts probe structured patterns; the rest are seeded draws,
  // alternating raw Dirichlet and grid-snapped rows.
  if (restart < 3) {
    const RowPattern pat = restart == 0   ? RowPattern::Identity
                           : restart == 1 ? RowPattern::Noisy
                                          : RowPattern::Uniform;
    for (std::size_t s0 = 0; s0 < s0c; ++s0)
      pattern_row(&c.q0[s0 * m0], m0, s0, pat);
    for (std::size_t s1 = 0; s1 < si.n1; ++s1)
      for (std::size_t v0 = 0; v0 < m0; ++v0)
        pattern_row(&c.q1[(s1 * m0 + v0) * m1], m1, s1, pat);
    for (std::size_t s2 = 0; s2 < si.n2; ++s2)
      for (std::size_t v0 = 0; v0 < m0; ++v0)
        pattern_row(&c.q2[(s2 * m0 + v0) * m2], m2, s2, pat);
    return c;
  }

  std::mt19937_64 eng(derive_seed(cfg.seed, restart));
  const bool snap = restart % 2 == 0;
  auto fill = [&](double* row, std::size_t m) {
    dirichlet_row(eng, row, m);
    if (snap) snap_row(row, m, cfg.simplex_grid);
  };
  for (std::size_t s0 = 0; s0 < s0c; ++s0) fill(&c.q0[s0 * m0], m0);
  for (std::size_t s1 = 0; s1 < si.n1; ++s1)
    for (std::size_t v0 = 0; v0 < m0; ++v0)
      fill(&c.q1[(s1 * m0 + v0) * m1], m1);
  for (std::size_t s2 = 0; s2 < si.n2; ++s2)
    for (std::size_t v0 = 0; v0 < m0; ++v0)
      fill(&c.q2[(s2 * m0 + v0) * m2], m2);
  return c;
}

// Joint over (S1,S2,V0,V1,V2,Y) for given conditionals and encoder maps.
JointPmf build_joint(const SourceInfo& si, const DiscreteChannel& ch,
                     const Conditionals& c, const CertifySearchConfig& cfg,
                     const std::vector<int>& x1, const std::vector<int>& x2) {
  const std::size_t m0 = cfg.v0_card, m1 = cfg.v1_card, m2 = cfg.v2_card;
  const std::size_t ny = ch.y_card;
  std::vector<double> table(si.n1 * si.n2 * m0 * m1 * m2 * ny, 0.0);

  for (std::size_t s1 = 0; s1 < si.n1; ++s1) {
    const std::size_t s0 = si.cp.f1[s1];
    for (std::size_t s2 = 0; s2 < si.n2; ++s2) {
      const double p12 = si.p12[s1 * si.n2 + s2];
      if (p12 == 0.0) continue;
      for (std::size_t v0 = 0; v0 < m0; ++v0) {
        const double p0 = p12 * c.q0[s0 * m0 + v0];
        if (p0 == 0.0) continue;
        for (std::size_t v1 = 0; v1 < m1; ++v1) {
          const double p1 = p0 * c.q1[(s1 * m0 + v0) * m1 + v1];
          if (p1 == 0.0) continue;
          const int xx1 = x1[(v0 * m1 + v1) * si.n1 + s1];
          for (std::size_t v2 = 0; v2 < m2; ++v2) {
            const double p2 = p1 * c.q2[(s2 * m0 + v0) * m2 + v2];
            if (p2 == 0.0) continue;
            const int xx2 = x2[(v0 * m2 + v2) * si.n2 + s2];
            const std::size_t base =
                ((((s1 * si.n2 + s2) * m0 + v0) * m1 + v1) * m2 + v2) * ny;
            for (std::size_t y = 0; y < ny; ++y)
              table[base + y] += p2 * ch.prob(xx1, xx2, y);
          }
        }
      }
    }
  }
  double sum = 0.0;
  for (double p : table) sum += p;
  if (sum > 0.0)
    for (auto& p : table) p /= sum;
  return JointPmf(make_axes({{"S1", si.n1},
                             {"S2", si.n2},
                             {"V0", m0},
                             {"V1", m1},
                             {"V2", m2},
                             {"Y", ny}}),
                  std::move(table));
}

std::array<double, 4> inner_margins(const JointPmf& joint) {
  std::array<double, 4> m{};
  m[0] = joint.mutual_information({"V1"}, {"Y"}, {"V0", "V2"}) -
         joint.mutual_information({"V1"}, {"S1"}, {"V0", "V2"});
  m[1] = joint.mutual_information({"V2"}, {"Y"}, {"V0", "V1"}) -
         joint.mutual_information({"V2"}, {"S2"}, {"V0", "V1"});
  m[2] = joint.mutual_information({"V1", "V2"}, {"Y"}, {"V0"}) -
         joint.mutual_information({"V1", "V2"}, {"S1", "S2"}, {"V0"});
  m[3] = joint.mutual_information({"V0", "V1", "V2"}, {"Y"}, {}) -
         joint.mutual_information({"V0", "V1", "V2"}, {"S1", "S2"}, {});
  return m;
}

// Optimal reconstruction maps and the distortions they achieve. The decoder
// sees (V0,V1,V2,Y); ties break to the lowest reconstruction index.
struct DecoderResult {
  std::vector<int> shat1, shat2;
  double d1 = 0.0, d2 = 0.0;
};

DecoderResult optimal_decoders(const JointPmf& joint,
                               const DistortionTable& dist1,
                               const DistortionTable& dist2) {
  const auto& axes = joint.axes();
  const std::size_t n1 = axes[0].symbols.size(), n2 = axes[1].symbols.size();
  const std::size_t m0 = axes[2].symbols.size(), m1 = axes[3].symbols.size();
  const std::size_t m2 = axes[4].symbols.size(), ny = axes[5].symbols.size();
  const std::size_t cells = m0 * m1 * m2 * ny;

  std::vector<double> post1(cells * n1, 0.0), post2(cells * n2, 0.0);
  const auto& t = joint.table();
  for (std::size_t s1 = 0; s1 < n1; ++s1)
    for (std::size_t s2 = 0; s2 < n2; ++s2) {
      const std::size_t row = (s1 * n2 + s2) * cells;
      for (std::size_t cell = 0; cell < cells; ++cell) {
        const double p = t[row + cell];
        if (p == 0.0) continue;
        post1[cell * n1 + s1] += p;
        post2[cell * n2 + s2] += p;
      }
    }

  DecoderResult res;
  res.shat1.assign(cells, 0);
  res.shat2.assign(cells, 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double best1 = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < dist1.cols; ++r) {
      double v = 0.0;
      for (std::size_t s = 0; s < n1; ++s)
        v += post1[cell * n1 + s] * dist1.at(s, r);
      if (v < best1) {
        best1 = v;
        res.shat1[cell] = static_cast<int>(r);
      }
    }
    res.d1 += best1;
    double best2 = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < dist2.cols; ++r) {
      double v = 0.0;
      for (std::size_t s = 0; s < n2; ++s)
        v += post2[cell * n2 + s] * dist2.at(s, r);
      if (v < best2) {
        best2 = v;
        res.shat2[cell] = static_cast<int>(r);
      }
    }
    res.d2 += best2;
  }
  return res;
}

// Canonical encoder maps worth probing regardless of the random draw.
std::vector<std::vector<int>> structured_maps(std::size_t m0, std::size_t mk,
                                              std::size_t nk,
                                              std::size_t x_card) {
  const std::size_t dom = m0 * mk * nk;
  std::vector<std::vector<int>> maps;
  auto add = [&](auto&& fn) {
    std::vector<int> m(dom);
    for (std::size_t v0 = 0; v0 < m0; ++v0)
      for (std::size_t vk = 0; vk < mk; ++vk)
        for (std::size_t s = 0; s < nk; ++s)
          m[(v0 * mk + vk) * nk + s] =
              static_cast<int>(fn(v0, vk, s) % x_card);
    maps.push_back(std::move(m));
  };
  add([](std::size_t, std::size_t vk, std::size_t) { return vk; });
  add([](std::size_t, std::size_t, std::size_t s) { return s; });
  add([](std::size_t v0, std::size_t, std::size_t) { return v0; });
  add([](std::size_t v0, std::size_t vk, std::size_t) { return v0 + vk; });
  add([](std::size_t, std::size_t vk, std::size_t s) { return vk + s; });
  add([](std::size_t, std::size_t, std::size_t) { return std::size_t{0}; });
  return maps;
}

std::vector<int> decode_map_index(std::size_t code, std::size_t dom,
                                  std::size_t x_card) {
  std::vector<int> m(dom);
  for (std::size_t i = 0; i < dom; ++i) {
    m[i] = static_cast<int>(code % x_card);
    code /= x_card;
  }
  return m;
}

double ipow_size(std::size_t base, std::size_t exp, std::size_t cap) {
  double v = 1.0;
  for (std::size_t i = 0; i < exp; ++i) {
    v *= static_cast<double>(base);
    if (v > static_cast<double>(cap) * 1e6) return v;
  }
  return v;
}

}  // namespace

CertificateEvaluation evaluate_certificate(const JointPmf& source,
                                           const DiscreteChannel& channel,
                                           const DistortionTable& dist1,
                                           const DistortionTable& dist2,
                                           const InnerCertificate& cert) {
  channel.validate();
  const SourceInfo si = source_info(source);
  CertifySearchConfig cfg;
  cfg.v0_card = cert.v0_card;
  cfg.v1_card = cert.v1_card;
  cfg.v2_card = cert.v2_card;
  Conditionals c{cert.p_v0_given_s0, cert.p_v1_given_s1v0,
                 cert.p_v2_given_s2v0};
  const JointPmf joint = build_joint(si, channel, c, cfg, cert.x1, cert.x2);

  CertificateEvaluation ev;
  ev.margins = inner_margins(joint);
  // Distortion of the stored reconstruction maps (not re-optimised).
  const auto& axes = joint.axes();
  const std::size_t n1 = axes[0].symbols.size(), n2 = axes[1].symbols.size();
  const std::size_t cells = joint.size() / (n1 * n2);
  const auto& t = joint.table();
  for (std::size_t s1 = 0; s1 < n1; ++s1)
    for (std::size_t s2 = 0; s2 < n2; ++s2) {
      const std::size_t row = (s1 * n2 + s2) * cells;
      for (std::size_t cell = 0; cell < cells; ++cell) {
        const double p = t[row + cell];
        if (p == 0.0) continue;
        ev.d1 += p * dist1.at(s1, cert.shat1[cell]);
        ev.d2 += p * dist2.at(s2, cert.shat2[cell]);
      }
    }
  return ev;
}

std::optional<InnerCertificate> certify_inner_point(
    const JointPmf& source, const DiscreteChannel& channel, double d1,
    double d2, const DistortionTable& dist1, const DistortionTable& dist2,
    const CertifySearchConfig& config) {
  channel.validate();
  const SourceInfo si = source_info(source);
  const std::size_t m0 = config.v0_card, m1 = config.v1_card,
                    m2 = config.v2_card;

  const std::size_t dom1 = m0 * m1 * si.n1, dom2 = m0 * m2 * si.n2;
  const double space1 = ipow_size(channel.x1_card, dom1, config.max_function_enumeration);
  const double space2 = ipow_size(channel.x2_card, dom2, config.max_function_enumeration);
  const bool enumerate =
      space1 * space2 <= static_cast<double>(config.max_function_enumeration);

  auto try_candidate = [&](const Conditionals& c, const std::vector<int>& x1,
                           const std::vector<int>& x2)
      -> std::optional<InnerCertificate> {
    const JointPmf joint = build_joint(si, channel, c, config, x1, x2);
    const auto margins = inner_margins(joint);
    for (double m : margins)
      if (!(m > config.margin)) return std::nullopt;
    const auto dec = optimal_decoders(joint, dist1, dist2);
    if (dec.d1 > d1 + 1e-12 || dec.d2 > d2 + 1e-12) return std::nullopt;

    InnerCertificate cert;
    cert.v0_card = static_cast<int>(m0);
    cert.v1_card = static_cast<int>(m1);
    cert.v2_card = static_cast<int>(m2);
    cert.p_v0_given_s0 = c.q0;
    cert.p_v1_given_s1v0 = c.q1;
    cert.p_v2_given_s2v0 = c.q2;
    cert.x1 = x1;
    cert.x2 = x2;
    cert.shat1 = dec.shat1;
    cert.shat2 = dec.shat2;
    cert.d1 = dec.d1;
    cert.d2 = dec.d2;
    cert.margins = margins;
    return cert;
  };

  const auto structured1 = structured_maps(m0, m1, si.n1, channel.x1_card);
  const auto structured2 = structured_maps(m0, m2, si.n2, channel.x2_card);

  const std::size_t restarts = std::max(1, config.restarts);
  std::vector<std::optional<InnerCertificate>> found(restarts);

  auto run_restart = [&](std::size_t r) {
    const Conditionals c = draw_conditionals(si, config, r);
    if (enumerate) {
      const auto total1 = static_cast<std::size_t>(space1);
      const auto total2 = static_cast<std::size_t>(space2);
      for (std::size_t c1 = 0; c1 < total1 && !found[r]; ++c1) {
        const auto x1 = decode_map_index(c1, dom1, channel.x1_card);
        for (std::size_t c2 = 0; c2 < total2 && !found[r]; ++c2)
          found[r] = try_candidate(c, x1, decode_map_index(c2, dom2, channel.x2_card));
      }
      return;
    }
    for (const auto& x1 : structured1) {
      for (const auto& x2 : structured2) {
        if (found[r]) return;
        found[r] = try_candidate(c, x1, x2);
      }
    }
    std::mt19937_64 eng(derive_seed(config.seed, 90000 + r));
    std::uniform_int_distribution<int> ux1(0, static_cast<int>(channel.x1_card) - 1);
    std::uniform_int_distribution<int> ux2(0, static_cast<int>(channel.x2_card) - 1);
    for (int s = 0; s < config.sampled_function_pairs && !found[r]; ++s) {
      std::vector<int> x1(dom1), x2(dom2);
      for (auto& v : x1) v = ux1(eng);
      for (auto& v : x2) v = ux2(eng);
      found[r] = try_candidate(c, x1, x2);
    }
  };

  constexpr std::size_t kChunk = 16;
  for (std::size_t chunk = 0; chunk < restarts; chunk += kChunk) {
    const std::size_t hi = std::min(restarts, chunk + kChunk);
    parallel_for(hi - chunk, config.threads,
                 [&](std::size_t k) { run_restart(chunk + k); });
    for (std::size_t r = chunk; r < hi; ++r)
      if (found[r]) return found[r];
  }
  return std::nullopt;
}

std::optional<InnerCertificate> dsc_inner_check(
    const JointPmf& source, double r1, double r2, double d1, double d2,
    const DistortionTable& dist1, const DistortionTable& dist2,
    const CertifySearchConfig& config) {
  // Reuse the channel machinery with a blank unit-output channel: Y carries
  // nothing, the decoder works from (V0, V1, V2), and the information
  // right-hand sides become the rates.
  DiscreteChannel blank;
  blank.x1_card = 1;
  blank.x2_card = 1;
  blank.y_card = 1;
  blank.table = {1.0};

  const SourceInfo si = source_info(source);
  const std::size_t m0 = config.v0_card, m1 = config.v1_card,
                    m2 = config.v2_card;
  const std::vector<int> x1(m0 * m1 * si.n1, 0), x2(m0 * m2 * si.n2, 0);

  const std::size_t restarts = std::max(1, config.restarts);
  std::vector<std::optional<InnerCertificate>> found(restarts);

  auto run_restart = [&](std::size_t r) {
    const Conditionals c = draw_conditionals(si, config, r);
    const JointPmf joint = build_joint(si, blank, c, config, x1, x2);
    std::array<double, 4> margins{};
    margins[0] = r1 - joint.mutual_information({"V1"}, {"S1"}, {"V0", "V2"});
    margins[1] = r2 - joint.mutual_information({"V2"}, {"S2"}, {"V0", "V1"});
    margins[2] =
        r1 + r2 - joint.mutual_information({"V0", "V1", "V2"}, {"S1", "S2"}, {});
    margins[3] = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k)
      if (!(margins[k] > config.margin)) return;
    const auto dec = optimal_decoders(joint, dist1, dist2);
    if (dec.d1 > d1 + 1e-12 || dec.d2 > d2 + 1e-12) return;

    InnerCertificate cert;
    cert.v0_card = static_cast<int>(m0);
    cert.v1_card = static_cast<int>(m1);
    cert.v2_card = static_cast<int>(m2);
    cert.p_v0_given_s0 = c.q0;
    cert.p_v1_given_s1v0 = c.q1;
    cert.p_v2_given_s2v0 = c.q2;
    cert.x1 = x1;
    cert.x2 = x2;
    cert.shat1 = dec.shat1;
    cert.shat2 = dec.shat2;
    cert.d1 = dec.d1;
    cert.d2 = dec.d2;
    cert.margins = margins;
    found[r] = cert;
  };

  constexpr std::size_t kChunk = 16;
  for (std::size_t chunk = 0; chunk < restarts; chunk += kChunk) {
    const std::size_t hi = std::min(restarts, chunk + kChunk);
    parallel_for(hi - chunk, config.threads,
                 [&](std::size_t k) { run_restart(chunk + k); });
    for (std::size_t r = chunk; r < hi; ++r)
      if (found[r]) return found[r];
  }
  return std::nullopt;
}

std::optional<LosslessWitness> check_lossless_admissible(
    const JointPmf& source, const DiscreteChannel& channel,
    const LosslessSearchConfig& config) {
  channel.validate();
  const SourceInfo si = source_info(source);
  const std::size_t nw = std::max(1, config.w_card);
  const std::size_t nx1 = channel.x1_card, nx2 = channel.x2_card,
                    ny = channel.y_card;
  const std::size_t s0c = si.cp.s0_cardinality;

  // Source-side entropies are candidate-independent.
  const JointPmf s12 = attach_common_part(source, si.cp, "S1", "S2");
  const double h12 = s12.entropy({"S1", "S2"});
  const double h1g2 = h12 - s12.entropy({"S2"});
  const double h2g1 = h12 - s12.entropy({"S1"});
  const double h12g0 = h12 - s12.entropy({"S0"});

  auto axes = make_axes({{"S0", s0c},
                         {"S1", si.n1},
                         {"S2", si.n2},
                         {"W", nw},
                         {"X1", nx1},
                         {"X2", nx2},
                         {"Y", ny}});

  auto evaluate = [&](const std::vector<double>& pw,
                      const std::vector<double>& px1,
                      const std::vector<double>& px2)
      -> std::optional<LosslessWitness> {
    std::vector<double> table(s0c * si.n1 * si.n2 * nw * nx1 * nx2 * ny, 0.0);
    for (std::size_t s1 = 0; s1 < si.n1; ++s1) {
      const std::size_t s0 = si.cp.f1[s1];
      for (std::size_t s2 = 0; s2 < si.n2; ++s2) {
        const double p12 = si.p12[s1 * si.n2 + s2];
        if (p12 == 0.0) continue;
        for (std::size_t w = 0; w < nw; ++w) {
          const double p_w = p12 * pw[w];
          if (p_w == 0.0) continue;
          for (std::size_t x1 = 0; x1 < nx1; ++x1) {
            const double p_x1 = p_w * px1[(s1 * nw + w) * nx1 + x1];
            if (p_x1 == 0.0) continue;
            for (std::size_t x2 = 0; x2 < nx2; ++x2) {
              const double p_x2 = p_x1 * px2[(s2 * nw + w) * nx2 + x2];
              if (p_x2 == 0.0) continue;
              const std::size_t base =
                  (((((s0 * si.n1 + s1) * si.n2 + s2) * nw + w) * nx1 + x1) *
                       nx2 +
                   x2) *
                  ny;
              for (std::size_t y = 0; y < ny; ++y)
                table[base + y] += p_x2 * channel.prob(x1, x2, y);
            }
          }
        }
      }
    }
    double sum = 0.0;
    for (double p : table) sum += p;
    for (auto& p : table) p /= sum;
    const JointPmf joint(axes, std::move(table));

    LosslessWitness w;
    w.margins[0] =
        joint.mutual_information({"X1"}, {"Y"}, {"X2", "S2", "W"}) - h1g2;
    w.margins[1] =
        joint.mutual_information({"X2"}, {"Y"}, {"X1", "S1", "W"}) - h2g1;
    w.margins[2] =
        joint.mutual_information({"X1", "X2"}, {"Y"}, {"S0", "W"}) - h12g0;
    w.margins[3] = joint.mutual_information({"X1", "X2"}, {"Y"}, {}) - h12;
    for (double m : w.margins)
      if (m < -1e-12) return std::nullopt;
    w.w_card = static_cast<int>(nw);
    w.p_w = pw;
    w.p_x1_given_s1w = px1;
    w.p_x2_given_s2w = px2;
    return w;
  };

  const std::size_t restarts = std::max(1, config.restarts);
  std::vector<std::optional<LosslessWitness>> found(restarts);

  auto run_restart = [&](std::size_t r) {
    std::vector<double> pw(nw), px1(si.n1 * nw * nx1), px2(si.n2 * nw * nx2);
    if (r < 3) {
      const RowPattern pat = r == 0   ? RowPattern::Identity
                             : r == 1 ? RowPattern::Noisy
                                      : RowPattern::Uniform;
      pattern_row(pw.data(), nw, 0, RowPattern::Uniform);
      for (std::size_t s1 = 0; s1 < si.n1; ++s1)
        for (std::size_t w = 0; w < nw; ++w)
          pattern_row(&px1[(s1 * nw + w) * nx1], nx1, s1 + (r == 2 ? w : 0), pat);
      for (std::size_t s2 = 0; s2 < si.n2; ++s2)
        for (std::size_t w = 0; w < nw; ++w)
          pattern_row(&px2[(s2 * nw + w) * nx2], nx2, s2 + (r == 2 ? w : 0), pat);
      if (r == 2) {
        for (std::size_t s1 = 0; s1 < si.n1; ++s1)
          for (std::size_t w = 0; w < nw; ++w)
            pattern_row(&px1[(s1 * nw + w) * nx1], nx1, s1, RowPattern::Identity);
        for (std::size_t s2 = 0; s2 < si.n2; ++s2)
          for (std::size_t w = 0; w < nw; ++w)
            pattern_row(&px2[(s2 * nw + w) * nx2], nx2, s2, RowPattern::Identity);
      }
    } else {
      std::mt19937_64 eng(derive_seed(config.seed, 5000 + r));
      const bool snap = r % 2 == 0;
      auto fill = [&](double* row, std::size_t m) {
        dirichlet_row(eng, row, m);
        if (snap) snap_row(row, m, config.simplex_grid);
      };
      fill(pw.data(), nw);
      for (std::size_t s1 = 0; s1 < si.n1; ++s1)
        for (std::size_t w = 0; w < nw; ++w) fill(&px1[(s1 * nw + w) * nx1], nx1);
      for (std::size_t s2 = 0; s2 < si.n2; ++s2)
        for (std::size_t w = 0; w < nw; ++w) fill(&px2[(s2 * nw + w) * nx2], nx2);
    }
    found[r] = evaluate(pw, px1, px2);
  };

  constexpr std::size_t kChunk = 16;
  for (std::size_t chunk = 0; chunk < restarts; chunk += kChunk) {
    const std::size_t hi = std::min(restarts, chunk + kChunk);
    parallel_for(hi - chunk, config.threads,
                 [&](std::size_t k) { run_restart(chunk + k); });
    for (std::size_t r = chunk; r < hi; ++r)
      if (found[r]) return found[r];
  }
  return std::nullopt;
}

std::vector<CapacityTuple> capacity_region_common_message(
    const DiscreteChannel& channel, const CapacityGridConfig& config) {
  channel.validate();
  const std::size_t nw = std::max(1, config.w_card);
  const std::size_t nx1 = channel.x1_card, nx2 = channel.x2_card,
                    ny = channel.y_card;

  auto axes = make_axes({{"W", nw}, {"X1", nx1}, {"X2", nx2}, {"Y", ny}});

  auto tuple_of = [&](const std::vector<double>& pw,
                      const std::vector<double>& px1,
                      const std::vector<double>& px2) {
    std::vector<double> table(nw * nx1 * nx2 * ny, 0.0);
    for (std::size_t w = 0; w < nw; ++w)
      for (std::size_t x1 = 0; x1 < nx1; ++x1)
        for (std::size_t x2 = 0; x2 < nx2; ++x2) {
          const double p = pw[w] * px1[w * nx1 + x1] * px2[w * nx2 + x2];
          if (p == 0.0) continue;
          const std::size_t base = ((w * nx1 + x1) * nx2 + x2) * ny;
          for (std::size_t y = 0; y < ny; ++y)
            table[base + y] += p * channel.prob(x1, x2, y);
        }
    double sum = 0.0;
    for (double p : table) sum += p;
    for (auto& p : table) p /= sum;
    const JointPmf joint(axes, std::move(table));
    CapacityTuple t;
    t.i1 = joint.mutual_information({"X1"}, {"Y"}, {"X2", "W"});
    t.i2 = joint.mutual_information({"X2"}, {"Y"}, {"X1", "W"});
    t.i12 = joint.mutual_information({"X1", "X2"}, {"Y"}, {"W"});
    t.i012 = joint.mutual_information({"X1", "X2"}, {"Y"}, {});
    return t;
  };

  // Deterministic input maps are enumerable for small alphabets; combine with
  // the uniform W and seeded Dirichlet (p_W, conditional) draws.
  std::vector<std::vector<double>> pw_candidates;
  pw_candidates.emplace_back(nw, 1.0 / nw);
  {
    std::mt19937_64 eng(derive_seed(config.seed, 17));
    for (int k = 0; k < config.dirichlet_draws / 4; ++k) {
      std::vector<double> pw(nw);
      dirichlet_row(eng, pw.data(), nw);
      pw_candidates.push_back(std::move(pw));
    }
  }

  std::vector<std::vector<double>> det1, det2;
  // Uniform conditionals first: the full-cooperation and independent-input
  // corners both live on them.
  det1.emplace_back(nw * nx1, 1.0 / nx1);
  det2.emplace_back(nw * nx2, 1.0 / nx2);
  const double space1 = ipow_size(nx1, nw, 4096);
  const double space2 = ipow_size(nx2, nw, 4096);
  if (space1 <= 4096 && space2 <= 4096) {
    for (std::size_t code = 0; code < static_cast<std::size_t>(space1); ++code) {
      std::vector<double> px(nw * nx1, 0.0);
      std::size_t c = code;
      for (std::size_t w = 0; w < nw; ++w) {
        px[w * nx1 + (c % nx1)] = 1.0;
        c /= nx1;
      }
      det1.push_back(std::move(px));
    }
    for (std::size_t code = 0; code < static_cast<std::size_t>(space2); ++code) {
      std::vector<double> px(nw * nx2, 0.0);
      std::size_t c = code;
      for (std::size_t w = 0; w < nw; ++w) {
        px[w * nx2 + (c % nx2)] = 1.0;
        c /= nx2;
      }
      det2.push_back(std::move(px));
    }
  }

  struct Candidate {
    std::vector<double> pw, px1, px2;
  };
  std::vector<Candidate> candidates;
  for (const auto& pw : pw_candidates)
    for (const auto& p1 : det1)
      for (const auto& p2 : det2) candidates.push_back({pw, p1, p2});
  {
    std::mt19937_64 eng(derive_seed(config.seed, 23));
    for (int k = 0; k < config.dirichlet_draws; ++k) {
      Candidate c;
      c.pw.resize(nw);
      c.px1.resize(nw * nx1);
      c.px2.resize(nw * nx2);
      dirichlet_row(eng, c.pw.data(), nw);
      for (std::size_t w = 0; w < nw; ++w) {
        dirichlet_row(eng, &c.px1[w * nx1], nx1);
        dirichlet_row(eng, &c.px2[w * nx2], nx2);
      }
      candidates.push_back(std::move(c));
    }
  }

  std::vector<CapacityTuple> tuples(candidates.size());
  parallel_for(candidates.size(), config.threads, [&](std::size_t i) {
    tuples[i] = tuple_of(candidates[i].pw, candidates[i].px1, candidates[i].px2);
  });
  return tuples;
}

bool capacity_point_achievable(const std::vector<CapacityTuple>& tuples,
                               double r0, double r1, double r2, double slack) {
  for (const auto& t : tuples) {
    if (r1 <= t.i1 + slack && r2 <= t.i2 + slack &&
        r1 + r2 <= t.i12 + slack && r0 + r1 + r2 <= t.i012 + slack)
      return true;
  }
  return false;
}

namespace {

JointPmf random_thinned_source(std::uint64_t seed, std::size_t n1,
                               std::size_t n2) {
  std::mt19937_64 eng(seed);
  std::exponential_distribution<double> ed(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(n1 * n2, 0.0);
  double sum = 0.0;
  for (auto& p : t) {
    if (u(eng) < 0.45) continue;  // thin the support to grow components
    p = ed(eng);
    sum += p;
  }
  if (sum == 0.0) {
    t[0] = 1.0;
    sum = 1.0;
  }
  for (auto& p : t) p /= sum;
  double s2 = 0.0;
  for (double p : t) s2 += p;
  for (auto& p : t) p /= s2;
  std::vector<PmfAxis> axes(2);
  axes[0].name = "S1";
  axes[1].name = "S2";
  for (std::size_t i = 0; i < n1; ++i)
    axes[0].symbols.push_back(std::to_string(i));
  for (std::size_t i = 0; i < n2; ++i)
    axes[1].symbols.push_back(std::to_string(i));
  return JointPmf(std::move(axes), std::move(t));
}

}  // namespace

DiscretePropertyReport verify_common_part(std::size_t count,
                                          std::uint64_t seed, int threads) {
  std::vector<std::string> failures(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const auto pmf = random_thinned_source(derive_seed(seed, 600 + i), 4, 4);
    const auto cp = extract_common_part(pmf);

    // f1(S1) = f2(S2) with probability one.
    const auto& t = pmf.table();
    for (int s1 = 0; s1 < 4; ++s1)
      for (int s2 = 0; s2 < 4; ++s2)
        if (t[s1 * 4 + s2] > 0.0 && cp.f1[s1] != cp.f2[s2])
          failures[i] = "common maps disagree on the support";

    // The attached joint marginalises back to the source.
    const auto joint = attach_common_part(pmf, cp);
    const auto marg = joint.marginal({"S1", "S2"});
    for (std::size_t k = 0; k < t.size(); ++k)
      if (std::abs(marg.table()[k] - t[k]) > 1e-12)
        failures[i] = "attached joint does not marginalise back";

    // Re-extraction on (S0, S1) returns S0 itself (component per s0 value).
    const auto s0s1 = joint.marginal({"S0", "S1"});
    std::vector<PmfAxis> axes = s0s1.axes();
    axes[0].name = "S1";
    axes[1].name = "S2";
    const auto re = extract_common_part(JointPmf(axes, s0s1.table()));
    if (re.s0_cardinality != cp.s0_cardinality)
      failures[i] = "re-extraction is not idempotent";
  });

  DiscretePropertyReport rep;
  rep.instances = count;
  for (const auto& f : failures)
    if (!f.empty()) {
      ++rep.violations;
      rep.worst_case = f;
    }
  return rep;
}

DiscretePropertyReport verify_certificates(std::size_t count,
                                           std::uint64_t seed, int threads) {
  std::vector<std::string> failures(count);
  parallel_for(count, threads, [&](std::size_t i) {
    std::mt19937_64 eng(derive_seed(seed, 8800 + i));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto source = random_thinned_source(derive_seed(seed, 700 + i), 2, 2);
    const auto channel = DiscreteChannel::noiseless(2, 2);
    const auto dist = DistortionTable::hamming(2);
    const double d1 = 0.1 + 0.4 * u(eng);
    const double d2 = 0.1 + 0.4 * u(eng);

    CertifySearchConfig cfg;
    cfg.restarts = 24;
    cfg.sampled_function_pairs = 12;
    cfg.seed = derive_seed(seed, 7100 + i);
    cfg.threads = 1;  // already parallel over instances
    const auto cert =
        certify_inner_point(source, channel, d1, d2, dist, dist, cfg);
    if (!cert) return;  // absence asserts nothing

    const auto ev = evaluate_certificate(source, channel, dist, dist, *cert);
    if (std::abs(ev.d1 - cert->d1) > 1e-9 || std::abs(ev.d2 - cert->d2) > 1e-9)
      failures[i] = "distortions drift on re-evaluation";
    for (int k = 0; k < 4; ++k) {
      if (std::abs(ev.margins[k] - cert->margins[k]) > 1e-9)
        failures[i] = "margins drift on re-evaluation";
      if (!(ev.margins[k] > 0.0)) failures[i] = "re-evaluated margin not strict";
    }
    if (ev.d1 > d1 + 1e-9 || ev.d2 > d2 + 1e-9)
      failures[i] = "certificate misses its distortion target";
  });

  DiscretePropertyReport rep;
  rep.instances = count;
  for (const auto& f : failures)
    if (!f.empty()) {
      ++rep.violations;
      rep.worst_case = f;
    }
  return rep;
}

}  // namespace macbounds
