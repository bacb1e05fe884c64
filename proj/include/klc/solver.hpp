#pragma once

#include "klc/model.hpp"
#include "klc/operators.hpp"

namespace klc {

struct SolveReport {
  Vec v_star;
  JointPolicy pi_star;
  int iterations = 0;
  double final_residual = 0.0;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), last_residual(residual) {}
  double last_residual;
};

/// Fixed-point iteration of the optimal Bellman operator from V = 0 until
/// ||T V - V||_inf <= tol. Throws ConvergenceError past max_iters.
SolveReport value_iteration(const Model& model, double tol = 1e-8,
                            int max_iters = 100000);

/// Exact V^pi from the affine fixed point V = q^pi + gamma Pi V, by sparse
/// direct solve. Residual contract: ||T^pi V - V||_inf <= 1e-9.
Vec exact_policy_evaluation(const Model& model, const JointPolicy& pi);

/// Alternates Boltzmann greedy improvement and exact evaluation until
/// ||V_{k+1} - V_k||_inf <= 1e-10.
SolveReport exact_policy_iteration(const Model& model, const Vec& v0,
                                   int max_iters = 1000);

}  // namespace klc
