#include "macbounds/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include "macbounds/common.hpp"

namespace macbounds {

JointPmf::JointPmf(std::vector<PmfAxis> axes, std::vector<double> table)
    : axes_(std::move(axes)), table_(std::move(table)) {
  if (axes_.empty()) throw invalid_input("pmf needs at least one axis");
  std::size_t total = 1;
  std::set<std::string> names;
  for (auto& ax : axes_) {
    if (ax.symbols.empty()) throw invalid_input("pmf axis has no symbols");
    if (!names.insert(ax.name).second)
      throw invalid_input("duplicate pmf axis name: " + ax.name);
    if (ax.values.empty()) {
      ax.values.resize(ax.symbols.size());
      std::iota(ax.values.begin(), ax.values.end(), 0.0);
    }
    if (ax.values.size() != ax.symbols.size())
      throw invalid_input("axis values do not match symbol count: " + ax.name);
    total *= ax.symbols.size();
  }
  if (table_.size() != total)
    throw invalid_input("pmf table size does not match alphabet product");

  double sum = 0.0;
  for (auto& p : table_) {
    if (p < 0.0) {
      if (p < -1e-15) throw invalid_input("pmf mass is negative");
      p = 0.0;
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw invalid_input("pmf masses sum to " + format_double(sum));

  strides_.assign(axes_.size(), 1);
  for (std::size_t i = axes_.size(); i-- > 1;)
    strides_[i - 1] = strides_[i] * axes_[i].symbols.size();
}

std::size_t JointPmf::axis_index(const std::string& name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].name == name) return i;
  throw invalid_input("unknown pmf axis: " + name);
}

const PmfAxis& JointPmf::axis(const std::string& name) const {
  return axes_[axis_index(name)];
}

double JointPmf::mass(const std::vector<std::size_t>& idx) const {
  return table_[flatten(idx)];
}

std::vector<std::size_t> JointPmf::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    idx[i] = flat / strides_[i];
    flat %= strides_[i];
  }
  return idx;
}

std::size_t JointPmf::flatten(const std::vector<std::size_t>& idx) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) flat += idx[i] * strides_[i];
  return flat;
}

namespace {

// flat index -> group index over the selected axes.
struct Grouper {
  std::vector<std::size_t> sel_strides;   // stride within the pmf
  std::vector<std::size_t> sel_cards;
  std::size_t group_size = 1;

  Grouper(const JointPmf& pmf, const std::vector<std::size_t>& axes_sel,
          const std::vector<std::size_t>& pmf_strides) {
    for (std::size_t a : axes_sel) {
      sel_strides.push_back(pmf_strides[a]);
      sel_cards.push_back(pmf.axes()[a].symbols.size());
      group_size *= pmf.axes()[a].symbols.size();
    }
  }

  std::size_t group_of(std::size_t flat) const {
    std::size_t g = 0;
    for (std::size_t i = 0; i < sel_strides.size(); ++i) {
      g = g * sel_cards[i] + (flat / sel_strides[i]) % sel_cards[i];
    }
    return g;
  }
};

double entropy_of_groups(const std::vector<double>& masses) {
  double h = 0.0;
  for (double p : masses)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace

JointPmf JointPmf::marginal(const std::vector<std::string>& labels) const {
  std::vector<std::size_t> sel;
  std::vector<PmfAxis> new_axes;
  for (const auto& l : labels) {
    sel.push_back(axis_index(l));
    new_axes.push_back(axes_[sel.back()]);
  }
  Grouper g(*this, sel, strides_);
  std::vector<double> out(g.group_size, 0.0);
  for (std::size_t f = 0; f < table_.size(); ++f) out[g.group_of(f)] += table_[f];
  return JointPmf(std::move(new_axes), std::move(out));
}

double JointPmf::entropy(const std::vector<std::string>& labels) const {
  if (labels.empty()) return 0.0;
  std::vector<std::size_t> sel;
  for (const auto& l : labels) sel.push_back(axis_index(l));
  Grouper g(*this, sel, strides_);
  std::vector<double> masses(g.group_size, 0.0);
  for (std::size_t f = 0; f < table_.size(); ++f)
    masses[g.group_of(f)] += table_[f];
  return entropy_of_groups(masses);
}

double JointPmf::mutual_information(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b,
                                    const std::vector<std::string>& cond) const {
  std::set<std::string> seen;
  for (const auto& l : a) seen.insert(l);
  for (const auto& l : b)
    if (!seen.insert(l).second)
      throw invalid_input("mutual information label sets must be disjoint");
  for (const auto& l : cond)
    if (!seen.insert(l).second)
      throw invalid_input("mutual information label sets must be disjoint");

  auto join = [](std::vector<std::string> lhs,
                 const std::vector<std::string>& rhs) {
    lhs.insert(lhs.end(), rhs.begin(), rhs.end());
    return lhs;
  };
  // I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)
  const double v = entropy(join(a, cond)) + entropy(join(b, cond)) -
                   entropy(join(join(a, b), cond)) - entropy(cond);
  if (v < 0.0 && v > -1e-12) return 0.0;
  return v;
}

CommonPart extract_common_part(const JointPmf& pmf, const std::string& label1,
                               const std::string& label2) {
  const std::size_t a1 = pmf.axis_index(label1);
  const std::size_t a2 = pmf.axis_index(label2);
  const std::size_t n1 = pmf.axes()[a1].symbols.size();
  const std::size_t n2 = pmf.axes()[a2].symbols.size();

  // Union-find over the disjoint union of both alphabets.
  std::vector<int> parent(n1 + n2);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int x, int y) { parent[find(x)] = find(y); };

  std::vector<char> has_mass1(n1, 0), has_mass2(n2, 0);
  for (std::size_t f = 0; f < pmf.size(); ++f) {
    if (pmf.table()[f] > 0.0) {
      const auto idx = pmf.unflatten(f);
      unite(static_cast<int>(idx[a1]), static_cast<int>(n1 + idx[a2]));
      has_mass1[idx[a1]] = 1;
      has_mass2[idx[a2]] = 1;
    }
  }

  // Canonical component ids in order of first appearance on the S1 side.
  CommonPart cp;
  cp.f1.assign(n1, 0);
  cp.f2.assign(n2, 0);
  std::vector<int> id(n1 + n2, -1);
  int next = 0;
  for (std::size_t s = 0; s < n1; ++s) {
    if (!has_mass1[s]) continue;
    const int root = find(static_cast<int>(s));
    if (id[root] < 0) id[root] = next++;
    cp.f1[s] = id[root];
  }
  for (std::size_t s = 0; s < n2; ++s) {
    if (!has_mass2[s]) continue;
    const int root = find(static_cast<int>(n1 + s));
    if (id[root] < 0) id[root] = next++;  // unreachable for supported pairs
    cp.f2[s] = id[root];
  }
  cp.s0_cardinality = std::max(next, 1);
  return cp;
}

JointPmf attach_common_part(const JointPmf& pmf, const CommonPart& cp,
                            const std::string& label1,
                            const std::string& label2) {
  const std::size_t a1 = pmf.axis_index(label1);
  const std::size_t a2 = pmf.axis_index(label2);
  const std::size_t n1 = pmf.axes()[a1].symbols.size();
  const std::size_t n2 = pmf.axes()[a2].symbols.size();

  PmfAxis s0_axis;
  s0_axis.name = "S0";
  for (int c = 0; c < cp.s0_cardinality; ++c)
    s0_axis.symbols.push_back("c" + std::to_string(c));

  std::vector<PmfAxis> axes = {s0_axis, pmf.axes()[a1], pmf.axes()[a2]};
  std::vector<double> table(cp.s0_cardinality * n1 * n2, 0.0);
  const auto marg = pmf.marginal({label1, label2});
  for (std::size_t s1 = 0; s1 < n1; ++s1) {
    for (std::size_t s2 = 0; s2 < n2; ++s2) {
      const double p = marg.table()[s1 * n2 + s2];
      if (p <= 0.0) continue;
      const std::size_t s0 = cp.f1[s1];
      table[(s0 * n1 + s1) * n2 + s2] += p;
    }
  }
  return JointPmf(std::move(axes), std::move(table));
}

JointPmf random_pmf(const std::vector<std::string>& names,
                    const std::vector<std::size_t>& cards,
                    std::uint64_t seed) {
  if (names.size() != cards.size())
    throw invalid_input("random_pmf: names and cardinalities differ");
  std::vector<PmfAxis> axes;
  std::size_t total = 1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    PmfAxis ax;
    ax.name = names[i];
    for (std::size_t s = 0; s < cards[i]; ++s)
      ax.symbols.push_back(std::to_string(s));
    axes.push_back(std::move(ax));
    total *= cards[i];
  }
  std::mt19937_64 eng(seed);
  std::exponential_distribution<double> ed(1.0);
  std::vector<double> table(total);
  double sum = 0.0;
  for (auto& p : table) {
    p = ed(eng);
    sum += p;
  }
  for (auto& p : table) p /= sum;
  // Renormalise exactly enough for the 1e-12 constructor check.
  double s2 = std::accumulate(table.begin(), table.end(), 0.0);
  for (auto& p : table) p /= s2;
  return JointPmf(std::move(axes), std::move(table));
}

}  // namespace macbounds
