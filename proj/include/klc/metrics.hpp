#pragma once

#include "klc/model.hpp"
#include "klc/operators.hpp"
#include "klc/rng.hpp"

namespace klc {

struct ReturnStats {
  double mean = 0.0;
  double std_dev = 0.0;
  int n_episodes = 0;
};

/// Monte-Carlo estimate of the (un)discounted finite-horizon cost return of
/// pi from s0. Per-step cost is C(s_t) + analytic KL of the policy row.
ReturnStats monte_carlo_return(const Model& model, const JointPolicy& pi, long s0,
                               int horizon, int n_episodes, bool discounted,
                               std::uint64_t seed);

struct PolicyComparisonRow {
  long start_state = 0;
  std::string policy;
  ReturnStats stats;
};

/// Paired monte_carlo_return for two policies over a list of start states.
std::vector<PolicyComparisonRow> compare_policies(
    const Model& model, const JointPolicy& pi_a, const JointPolicy& pi_b,
    const std::vector<long>& start_states, int horizon, int n_episodes,
    std::uint64_t seed, const std::string& name_a = "a",
    const std::string& name_b = "b");

void save_comparison_csv(const std::vector<PolicyComparisonRow>& rows, int horizon,
                         const std::string& path,
                         const std::string& header_comment = "");

}  // namespace klc
