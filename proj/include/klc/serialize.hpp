#pragma once

#include <iosfwd>
#include <string>

#include "klc/model.hpp"

namespace klc {

/// JSON document with fields n_agents, space_sizes, gamma, cost,
/// kernels (per agent, per joint state: arrays of [substate, prob] pairs).
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

/// Policy JSON: {"n_states": N, "rows": [[[successor, prob], ...], ...]}.
std::string policy_to_json(const JointPolicy& pi);
JointPolicy policy_from_json(const std::string& text);

void save_policy(const JointPolicy& pi, const std::string& path);
JointPolicy load_policy(const std::string& path);

/// Flat CSV `state_index,value`; `header_comment` lines are prefixed with '#'.
void save_values_csv(const Vec& v, const std::string& path,
                     const std::string& header_comment = "");
Vec load_values_csv(const std::string& path);

}  // namespace klc
