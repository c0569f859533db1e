#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace macbounds {

struct PmfAxis {
  std::string name;
  std::vector<std::string> symbols;
  std::vector<double> values;  // numeric codes; defaults to 0, 1, ...
};

// Dense joint distribution over named finite alphabets, row-major with the
// last axis fastest. Masses must be nonnegative and sum to 1 within 1e-12.
class JointPmf {
 public:
  JointPmf(std::vector<PmfAxis> axes, std::vector<double> table);

  const std::vector<PmfAxis>& axes() const { return axes_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t axis_index(const std::string& name) const;
  const PmfAxis& axis(const std::string& name) const;
  std::size_t size() const { return table_.size(); }

  double mass(const std::vector<std::size_t>& idx) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<std::size_t>& idx) const;

  JointPmf marginal(const std::vector<std::string>& labels) const;

  // Shannon quantities in nats.
  double entropy(const std::vector<std::string>& labels) const;
  double mutual_information(const std::vector<std::string>& a,
                            const std::vector<std::string>& b,
                            const std::vector<std::string>& cond = {}) const;

 private:
  std::vector<PmfAxis> axes_;
  std::vector<double> table_;
  std::vector<std::size_t> strides_;
};

// Gacs-Korner-Witsenhausen common part of a bivariate pmf: connected
// components of the support bipartite graph. Symbols with zero marginal mass
// map to component 0 (any value works with probability one).
struct CommonPart {
  std::vector<int> f1;  // per symbol of the first axis
  std::vector<int> f2;
  int s0_cardinality = 0;
};

CommonPart extract_common_part(const JointPmf& pmf,
                               const std::string& label1 = "S1",
                               const std::string& label2 = "S2");

// (S0, S1, S2) joint with S0 the extracted common part.
JointPmf attach_common_part(const JointPmf& pmf, const CommonPart& cp,
                            const std::string& label1 = "S1",
                            const std::string& label2 = "S2");

// Seeded Dirichlet(1) pmf over the given axis cardinalities, used by the
// property runners.
JointPmf random_pmf(const std::vector<std::string>& names,
                    const std::vector<std::size_t>& cards, std::uint64_t seed);

}  // namespace macbounds
