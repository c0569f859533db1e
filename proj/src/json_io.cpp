#include "macbounds/json_io.hpp"

#include <functional>

#include "macbounds/common.hpp"

namespace macbounds {

namespace {

double num(const json& j, const char* key) {
  if (!j.contains(key))
    throw invalid_input(std::string("missing field: ") + key);
  return j.at(key).get<double>();
}

double num_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

json to_json(const GaussianProblem& p) {
  return json{{"rho01", p.rho01},
              {"rho02", p.rho02},
              {"rho12", p.rho12},
              {"p1", p.p1},
              {"p2", p.p2}};
}

GaussianProblem problem_from_json(const json& j) {
  GaussianProblem p;
  p.rho01 = num(j, "rho01");
  p.rho02 = num(j, "rho02");
  p.rho12 = num(j, "rho12");
  p.p1 = num(j, "p1");
  p.p2 = num(j, "p2");
  p.validate();
  return p;
}

json to_json(const HybridParams& p) {
  return json{{"f1", p.f1},       {"f2", p.f2},
              {"g1", p.g1},       {"g2", p.g2},
              {"omega0", p.omega0}, {"omega1", p.omega1},
              {"omega2", p.omega2}};
}

HybridParams hybrid_params_from_json(const json& j) {
  HybridParams p;
  const auto f1 = j.at("f1").get<std::vector<double>>();
  const auto f2 = j.at("f2").get<std::vector<double>>();
  const auto g1 = j.at("g1").get<std::vector<double>>();
  const auto g2 = j.at("g2").get<std::vector<double>>();
  if (f1.size() != 3 || f2.size() != 3 || g1.size() != 4 || g2.size() != 4)
    throw invalid_input("hybrid rows must have lengths 3, 3, 4, 4");
  std::copy(f1.begin(), f1.end(), p.f1.begin());
  std::copy(f2.begin(), f2.end(), p.f2.begin());
  std::copy(g1.begin(), g1.end(), p.g1.begin());
  std::copy(g2.begin(), g2.end(), p.g2.begin());
  p.omega0 = num(j, "omega0");
  p.omega1 = num(j, "omega1");
  p.omega2 = num(j, "omega2");
  p.validate();
  return p;
}

json to_json(const UncodedGains& g) {
  return json{{"g10", g.g10}, {"g11", g.g11}, {"g20", g.g20}, {"g22", g.g22}};
}

UncodedGains uncoded_gains_from_json(const json& j) {
  UncodedGains g;
  g.g10 = num(j, "g10");
  g.g11 = num(j, "g11");
  g.g20 = num(j, "g20");
  g.g22 = num(j, "g22");
  return g;
}

json to_json(const HybridEvaluation& ev) {
  return json{{"d1", ev.d1},
              {"d2", ev.d2},
              {"power1", ev.power1},
              {"power2", ev.power2},
              {"margins", ev.margins},
              {"feasible", ev.feasible},
              {"degenerate", ev.degenerate}};
}

json to_json(const HybridSearchResult& r) {
  return json{{"params", to_json(r.params)},
              {"evaluation", to_json(r.evaluation)},
              {"found_feasible", r.found_feasible},
              {"objective", r.objective},
              {"evaluations", r.evaluations}};
}

json to_json(const OuterMembership& m) {
  json j{{"member", m.verdict.member},
         {"violated_constraint",
          m.verdict.member ? json(nullptr) : json(m.verdict.violated_constraint)},
         {"tightest_margin", m.verdict.tightest_margin}};
  if (m.witness) {
    json beta = json::array();
    for (const auto& b : m.witness->per_beta)
      beta.push_back(json{{"beta1", b.beta1},
                          {"theta1", b.theta1},
                          {"theta2", b.theta2},
                          {"min_margin", b.min_margin}});
    j["witness"] = json{{"rho_hat", m.witness->rho_hat},
                        {"rho_hat0", m.witness->rho_hat0},
                        {"per_beta", std::move(beta)}};
  }
  return j;
}

OuterGridConfig outer_grid_from_json(const json& j) {
  OuterGridConfig g;
  g.rho_hat_points = static_cast<int>(num_or(j, "rho_hat_points", g.rho_hat_points));
  g.rho_hat0_points =
      static_cast<int>(num_or(j, "rho_hat0_points", g.rho_hat0_points));
  g.beta_points = static_cast<int>(num_or(j, "beta_points", g.beta_points));
  g.theta_scan_points =
      static_cast<int>(num_or(j, "theta_scan_points", g.theta_scan_points));
  g.theta_refine_iters =
      static_cast<int>(num_or(j, "theta_refine_iters", g.theta_refine_iters));
  return g;
}

json to_json(const JointPmf& pmf) {
  json axes = json::array();
  for (const auto& ax : pmf.axes())
    axes.push_back(
        json{{"name", ax.name}, {"symbols", ax.symbols}, {"values", ax.values}});

  // Nested arrays, last axis innermost.
  std::function<json(std::size_t, std::size_t, std::size_t)> nest =
      [&](std::size_t axis, std::size_t offset, std::size_t stride) -> json {
    const std::size_t card = pmf.axes()[axis].symbols.size();
    json arr = json::array();
    if (axis + 1 == pmf.axes().size()) {
      for (std::size_t i = 0; i < card; ++i)
        arr.push_back(pmf.table()[offset + i]);
      return arr;
    }
    const std::size_t inner = stride / card;
    for (std::size_t i = 0; i < card; ++i)
      arr.push_back(nest(axis + 1, offset + i * inner, inner));
    return arr;
  };
  json table = nest(0, 0, pmf.table().size());
  return json{{"axes", std::move(axes)}, {"table", std::move(table)}};
}

JointPmf pmf_from_json(const json& j) {
  std::vector<PmfAxis> axes;
  for (const auto& a : j.at("axes")) {
    PmfAxis ax;
    ax.name = a.at("name").get<std::string>();
    ax.symbols = a.at("symbols").get<std::vector<std::string>>();
    if (a.contains("values"))
      ax.values = a.at("values").get<std::vector<double>>();
    axes.push_back(std::move(ax));
  }
  std::vector<double> table;
  std::function<void(const json&)> flatten = [&](const json& node) {
    if (node.is_array()) {
      for (const auto& child : node) flatten(child);
    } else {
      table.push_back(node.get<double>());
    }
  };
  flatten(j.at("table"));
  return JointPmf(std::move(axes), std::move(table));
}

json to_json(const DiscreteChannel& ch) {
  return json{{"x1_card", ch.x1_card},
              {"x2_card", ch.x2_card},
              {"y_card", ch.y_card},
              {"table", ch.table}};
}

DiscreteChannel channel_from_json(const json& j) {
  DiscreteChannel ch;
  if (j.is_string() && j.get<std::string>() == "noiseless-binary")
    return DiscreteChannel::noiseless(2, 2);
  if (j.contains("noiseless") && j.at("noiseless").get<bool>()) {
    ch = DiscreteChannel::noiseless(j.at("x1_card").get<std::size_t>(),
                                    j.at("x2_card").get<std::size_t>());
    return ch;
  }
  ch.x1_card = j.at("x1_card").get<std::size_t>();
  ch.x2_card = j.at("x2_card").get<std::size_t>();
  ch.y_card = j.at("y_card").get<std::size_t>();
  if (j.at("table").is_array() && !j.at("table").empty() &&
      j.at("table").front().is_array()) {
    // Nested [(x1,x2)][y] or [x1][x2][y] forms.
    std::function<void(const json&)> flatten = [&](const json& node) {
      if (node.is_array()) {
        for (const auto& child : node) flatten(child);
      } else {
        ch.table.push_back(node.get<double>());
      }
    };
    flatten(j.at("table"));
  } else {
    ch.table = j.at("table").get<std::vector<double>>();
  }
  ch.validate();
  return ch;
}

DistortionTable distortion_from_json(const json& j) {
  DistortionTable t;
  if (j.is_string() && j.get<std::string>() == "hamming")
    throw invalid_input("hamming distortion needs the alphabet size");
  t.rows = j.at("rows").get<std::size_t>();
  t.cols = j.at("cols").get<std::size_t>();
  t.d = j.at("d").get<std::vector<double>>();
  if (t.d.size() != t.rows * t.cols)
    throw invalid_input("distortion table size mismatch");
  return t;
}

json to_json(const InnerCertificate& c) {
  return json{{"v0_card", c.v0_card},
              {"v1_card", c.v1_card},
              {"v2_card", c.v2_card},
              {"p_v0_given_s0", c.p_v0_given_s0},
              {"p_v1_given_s1v0", c.p_v1_given_s1v0},
              {"p_v2_given_s2v0", c.p_v2_given_s2v0},
              {"x1", c.x1},
              {"x2", c.x2},
              {"shat1", c.shat1},
              {"shat2", c.shat2},
              {"d1", c.d1},
              {"d2", c.d2},
              {"margins", c.margins}};
}

json to_json(const LosslessWitness& w) {
  return json{{"w_card", w.w_card},
              {"p_w", w.p_w},
              {"p_x1_given_s1w", w.p_x1_given_s1w},
              {"p_x2_given_s2w", w.p_x2_given_s2w},
              {"margins", w.margins}};
}

json to_json(const CapacityTuple& t) {
  return json{{"i1", t.i1}, {"i2", t.i2}, {"i12", t.i12}, {"i012", t.i012}};
}

json to_json(const CorrelationReport& r) {
  return json{{"pearson", r.pearson},
              {"ratio_12", r.ratio_12},
              {"ratio_21", r.ratio_21},
              {"maximal", r.maximal},
              {"pearson_given", r.pearson_given},
              {"ratio_12_given", r.ratio_12_given},
              {"ratio_21_given", r.ratio_21_given},
              {"maximal_given", r.maximal_given}};
}

json to_json(const PropertyReport& r) {
  return json{{"instances", r.instances},
              {"violations", r.violations},
              {"worst_margin", r.worst_margin},
              {"worst_case", r.worst_case}};
}

json to_json(const SimulatedDistortion& s) {
  return json{{"d1", s.d1},
              {"d2", s.d2},
              {"stderr1", s.stderr1},
              {"stderr2", s.stderr2},
              {"n", s.n}};
}

std::string dump_deterministic(const json& j) {
  // nlohmann orders object keys and renders doubles with shortest
  // round-trip text, so the dump is already byte-stable.
  return j.dump(2) + "\n";
}

}  // namespace macbounds
