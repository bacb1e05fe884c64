#pragma once

#include "klc/model.hpp"

namespace klc {

/// Product distribution over joint next states at s:
/// P_0(s'|s) = prod_i P_{i,0}(s_i'|s). Support is the Cartesian product of
/// the per-agent supports.
Distribution joint_kernel_row(const Model& model, long s);

/// The full uncontrolled joint kernel as a policy (one product row per state).
JointPolicy uncontrolled_policy(const Model& model);

/// KL divergence in nats. Requires support(p) subset of support(q); throws
/// ModelError otherwise (an Assumption-violating policy row).
double kl_divergence(const Distribution& p, const Distribution& q);

/// One-step cost q(s, pi) = C(s) + KL(pi_row || P_0(.|s)).
double one_step_cost(const Model& model, long s, const Distribution& pi_row);

/// Evaluation Bellman operator:
/// (T^pi V)(s) = C(s) + KL(pi(.|s)||P_0(.|s)) + gamma * sum_s' pi(s'|s) V(s').
Vec apply_evaluation_operator(const Model& model, const JointPolicy& pi, const Vec& v);

/// Optimal Bellman operator via max-shifted log-sum-exp:
/// (T V)(s) = C(s) - ln sum_{s'} P_0(s'|s) exp(-gamma V(s')).
Vec apply_optimal_operator(const Model& model, const Vec& v);

/// Max-shifted log-sum-exp backup for one row:
/// -ln sum_{s'} p0(s'|s) exp(-gamma v(s')).
double lse_backup(const Distribution& p0_row, const Vec& v, double gamma);

/// Boltzmann row: probs proportional to p0(s'|s) exp(-gamma v(s')), computed
/// in log-space and renormalized once. Support equals support(p0_row).
Distribution boltzmann_row(const Distribution& p0_row, const Vec& v, double gamma);

/// Boltzmann greedy policy: pi(s'|s) proportional to P_0(s'|s) exp(-gamma V(s')),
/// computed in log-space and renormalized once. Support equals support(P_0(.|s)).
JointPolicy greedy_policy(const Model& model, const Vec& v);

/// Greedy row at a single state.
Distribution greedy_row(const Model& model, const Vec& v, long s);

/// Marginal of a joint policy row for one agent: sums the row over all other
/// agents' sub-state combinations.
Distribution marginal_row(const Model& model, const Distribution& joint_row, int agent);

/// Per-joint-state marginal policy of `agent`.
std::vector<Distribution> marginal_policy(const Model& model, const JointPolicy& pi,
                                          int agent);

/// Cole-Hopf transform z = exp(-V) entrywise; reports saturation.
Desirability desirability(const Vec& v);

/// Upper bound on the one-step cost magnitude:
/// max_s |C(s)| + max_{s, s' in support} ln(1/P_0(s'|s)).
double q_max(const Model& model);

/// Throws ModelError if any row of pi has support outside P_0's support or
/// the state count does not match the model.
void check_policy(const Model& model, const JointPolicy& pi);

struct AssumptionReport {
  bool factored_state = false;             // A1: valid factored model
  bool homogeneous_kernels = false;        // A2: P_{i,0}(x|s) = P_{j,0}(x|s)
  std::string homogeneity_detail;          // first violating (s, i, j, x) if any
  bool support_zero_feasible = false;      // A3: all kernel rows nonempty
  bool batch_uniqueness = false;           // A4: |S| >= 1 so unique batches exist
};

/// Diagnostics for the model-level assumptions. Kernel homogeneity is
/// reported, never enforced.
AssumptionReport validate_assumptions(const Model& model);

inline double sup_norm_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ModelError("sup_norm_diff: length mismatch");
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace klc
