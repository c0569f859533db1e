#pragma once

#include <json.hpp>

#include "macbounds/certify.hpp"
#include "macbounds/correlation.hpp"
#include "macbounds/hybrid.hpp"
#include "macbounds/outer.hpp"
#include "macbounds/pmf.hpp"

namespace macbounds {

using nlohmann::json;

// GaussianProblem is a flat object {rho01, rho02, rho12, p1, p2}.
json to_json(const GaussianProblem& p);
GaussianProblem problem_from_json(const json& j);

json to_json(const HybridParams& p);
HybridParams hybrid_params_from_json(const json& j);

json to_json(const UncodedGains& g);
UncodedGains uncoded_gains_from_json(const json& j);

json to_json(const HybridEvaluation& ev);
json to_json(const HybridSearchResult& r);

json to_json(const OuterMembership& m);
OuterGridConfig outer_grid_from_json(const json& j);

// Pmf: axes as {name, symbols, values?}, table as nested arrays.
json to_json(const JointPmf& pmf);
JointPmf pmf_from_json(const json& j);

json to_json(const DiscreteChannel& ch);
DiscreteChannel channel_from_json(const json& j);

DistortionTable distortion_from_json(const json& j);

json to_json(const InnerCertificate& c);
json to_json(const LosslessWitness& w);
json to_json(const CapacityTuple& t);
json to_json(const CorrelationReport& r);
json to_json(const PropertyReport& r);
json to_json(const SimulatedDistortion& s);

// Full-precision serialisation: doubles rendered with shortest round-trip
// text so identical runs produce byte-identical files.
std::string dump_deterministic(const json& j);

}  // namespace macbounds
