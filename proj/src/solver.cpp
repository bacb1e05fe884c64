#include "klc/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace klc {

SolveReport value_iteration(const Model& model, double tol, int max_iters) {
  if (!(tol > 0.0)) throw ModelError("value_iteration: tol must be positive");
  Vec v = Vec::Zero(model.n_states());
  double residual = 0.0;
  for (int k = 0; k < max_iters; ++k) {
    Vec next = apply_optimal_operator(model, v);
    residual = sup_norm_diff(next, v);
    v = std::move(next);
    if (residual <= tol) {
      SolveReport report;
      report.v_star = std::move(v);
      report.pi_star = greedy_policy(model, report.v_star);
      report.iterations = k + 1;
      report.final_residual = residual;
      return report;
    }
  }
  throw ConvergenceError("value_iteration: max_iters reached, residual " +
                             std::to_string(residual),
                         residual);
}

Vec exact_policy_evaluation(const Model& model, const JointPolicy& pi) {
  check_policy(model, pi);
  const long n = model.n_states();
  // (I - gamma Pi) V = q^pi
  std::vector<Eigen::Triplet<double>> triplets;
  Vec q(n);
  for (long s = 0; s < n; ++s) {
    const Distribution& row = pi.row(s);
    q[s] = one_step_cost(model, s, row);
    triplets.emplace_back(s, s, 1.0);
    for (size_t i = 0; i < row.support.size(); ++i)
      triplets.emplace_back(s, row.support[i], -model.gamma * row.probs[i]);
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  if (lu.info() != Eigen::Success)
    throw ModelError("exact_policy_evaluation: factorization failed");
  Vec v = lu.solve(q);
  return v;
}

SolveReport exact_policy_iteration(const Model& model, const Vec& v0, int max_iters) {
  Vec v = v0;
  double diff = 0.0;
  for (int k = 0; k < max_iters; ++k) {
    JointPolicy pi = greedy_policy(model, v);
    Vec next = exact_policy_evaluation(model, pi);
    diff = sup_norm_diff(next, v);
    v = std::move(next);
    if (diff <= 1e-10) {
      SolveReport report;
      report.v_star = std::move(v);
      report.pi_star = greedy_policy(model, report.v_star);
      report.iterations = k + 1;
      report.final_residual = sup_norm_diff(apply_optimal_operator(model, report.v_star),
                                            report.v_star);
      return report;
    }
  }
  throw ConvergenceError("exact_policy_iteration: max_iters reached, last step " +
                             std::to_string(diff),
                         diff);
}

}  // namespace klc
