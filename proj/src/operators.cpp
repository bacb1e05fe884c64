#include "klc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace klc {

Distribution joint_kernel_row(const Model& model, long s) {
  if (s < 0 || s >= model.n_states()) throw ModelError("joint_kernel_row: index out of range");
  const int n = model.n_agents();
  std::vector<const Distribution*> rows(n);
  size_t count = 1;
  for (int i = 0; i < n; ++i) {
    rows[i] = &model.agent_kernel_row(i, s);
    count *= rows[i]->support.size();
  }
  std::vector<int> out_support;
  std::vector<double> out_probs;
  out_support.reserve(count);
  out_probs.reserve(count);
  // Odometer over the per-agent supports; agent 0 is the most significant
  // digit, so the emitted joint indices are already strictly increasing.
  std::vector<size_t> idx(n, 0);
  std::vector<int> tuple(n);
  while (true) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
      tuple[i] = rows[i]->support[idx[i]];
      p *= rows[i]->probs[idx[i]];
    }
    // Kernel rows over sub-states index sub-states directly.
    long joint = model.indexer.encode(tuple);
    out_support.push_back(static_cast<int>(joint));
    out_probs.push_back(p);
    int digit = n - 1;
    while (digit >= 0 && ++idx[digit] == rows[digit]->support.size()) {
      idx[digit] = 0;
      --digit;
    }
    if (digit < 0) break;
  }
  Distribution d;
  d.support = std::move(out_support);
  d.probs = std::move(out_probs);
  d.renormalize();
  return d;
}

JointPolicy uncontrolled_policy(const Model& model) {
  JointPolicy pi;
  pi.rows.reserve(model.n_states());
  for (long s = 0; s < model.n_states(); ++s) pi.rows.push_back(joint_kernel_row(model, s));
  return pi;
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  double kl = 0.0;
  size_t j = 0;
  for (size_t i = 0; i < p.support.size(); ++i) {
    while (j < q.support.size() && q.support[j] < p.support[i]) ++j;
    if (j == q.support.size() || q.support[j] != p.support[i])
      throw ModelError("kl_divergence: support(p) not contained in support(q)");
    kl += p.probs[i] * std::log(p.probs[i] / q.probs[j]);
  }
  return std::max(kl, 0.0);
}

double one_step_cost(const Model& model, long s, const Distribution& pi_row) {
  return model.cost[s] + kl_divergence(pi_row, joint_kernel_row(model, s));
}

Vec apply_evaluation_operator(const Model& model, const JointPolicy& pi, const Vec& v) {
  if (pi.n_states() != model.n_states() || v.size() != model.n_states())
    throw ModelError("apply_evaluation_operator: dimension mismatch");
  Vec out(model.n_states());
  for (long s = 0; s < model.n_states(); ++s) {
    const Distribution& row = pi.row(s);
    double future = 0.0;
    for (size_t i = 0; i < row.support.size(); ++i) future += row.probs[i] * v[row.support[i]];
    out[s] = one_step_cost(model, s, row) + model.gamma * future;
  }
  return out;
}

double lse_backup(const Distribution& p0_row, const Vec& v, double gamma) {
  double shift = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < p0_row.support.size(); ++i) {
    double l = std::log(p0_row.probs[i]) - gamma * v[p0_row.support[i]];
    shift = std::max(shift, l);
  }
  double sum = 0.0;
  for (size_t i = 0; i < p0_row.support.size(); ++i) {
    double l = std::log(p0_row.probs[i]) - gamma * v[p0_row.support[i]];
    sum += std::exp(l - shift);
  }
  return -(shift + std::log(sum));
}

Vec apply_optimal_operator(const Model& model, const Vec& v) {
  if (v.size() != model.n_states())
    throw ModelError("apply_optimal_operator: dimension mismatch");
  Vec out(model.n_states());
  for (long s = 0; s < model.n_states(); ++s) {
    out[s] = model.cost[s] + lse_backup(joint_kernel_row(model, s), v, model.gamma);
  }
  return out;
}

Distribution boltzmann_row(const Distribution& p0_row, const Vec& v, double gamma) {
  Distribution row = p0_row;
  double shift = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(row.support.size());
  for (size_t i = 0; i < row.support.size(); ++i) {
    logw[i] = std::log(row.probs[i]) - gamma * v[row.support[i]];
    shift = std::max(shift, logw[i]);
  }
  for (size_t i = 0; i < row.support.size(); ++i) row.probs[i] = std::exp(logw[i] - shift);
  row.renormalize();
  return row;
}

Distribution greedy_row(const Model& model, const Vec& v, long s) {
  return boltzmann_row(joint_kernel_row(model, s), v, model.gamma);
}

JointPolicy greedy_policy(const Model& model, const Vec& v) {
  if (v.size() != model.n_states())
    throw ModelError("greedy_policy: dimension mismatch");
  JointPolicy pi;
  pi.rows.reserve(model.n_states());
  for (long s = 0; s < model.n_states(); ++s) pi.rows.push_back(greedy_row(model, v, s));
  return pi;
}

Distribution marginal_row(const Model& model, const Distribution& joint_row, int agent) {
  if (agent < 0 || agent >= model.n_agents())
    throw ModelError("marginal_row: agent index out of range");
  std::vector<double> mass(model.indexer.size(agent), 0.0);
  for (size_t i = 0; i < joint_row.support.size(); ++i) {
    mass[model.indexer.substate_of(joint_row.support[i], agent)] += joint_row.probs[i];
  }
  std::vector<int> support;
  std::vector<double> probs;
  for (int x = 0; x < static_cast<int>(mass.size()); ++x) {
    if (mass[x] > 0.0) {
      support.push_back(x);
      probs.push_back(mass[x]);
    }
  }
  Distribution d;
  d.support = std::move(support);
  d.probs = std::move(probs);
  d.renormalize();
  return d;
}

std::vector<Distribution> marginal_policy(const Model& model, const JointPolicy& pi,
                                          int agent) {
  std::vector<Distribution> out;
  out.reserve(pi.rows.size());
  for (const auto& row : pi.rows) out.push_back(marginal_row(model, row, agent));
  return out;
}

Desirability desirability(const Vec& v) {
  Desirability d;
  d.z.resize(v.size());
  for (long i = 0; i < v.size(); ++i) {
    d.z[i] = std::exp(-v[i]);
    if (d.z[i] == 0.0 || std::isinf(d.z[i])) d.saturated = true;
  }
  return d;
}

double q_max(const Model& model) {
  double c_max = model.cost.cwiseAbs().maxCoeff();
  double kl_max = 0.0;
  for (long s = 0; s < model.n_states(); ++s) {
    Distribution p0 = joint_kernel_row(model, s);
    for (double p : p0.probs) kl_max = std::max(kl_max, -std::log(p));
  }
  return c_max + kl_max;
}

void check_policy(const Model& model, const JointPolicy& pi) {
  if (pi.n_states() != model.n_states())
    throw ModelError("check_policy: row count != |S|");
  for (long s = 0; s < model.n_states(); ++s) {
    Distribution p0 = joint_kernel_row(model, s);
    size_t j = 0;
    for (int t : pi.row(s).support) {
      while (j < p0.support.size() && p0.support[j] < t) ++j;
      if (j == p0.support.size() || p0.support[j] != t)
        throw ModelError("check_policy: row support escapes P_0 at state " +
                         std::to_string(s));
    }
  }
}

AssumptionReport validate_assumptions(const Model& model) {
  AssumptionReport r;
  r.factored_state = model.n_agents() >= 1 && model.n_states() >= 1;
  r.support_zero_feasible = true;
  for (int i = 0; i < model.n_agents() && r.support_zero_feasible; ++i) {
    for (const auto& row : model.kernels[i]) {
      if (row.support.empty()) {
        r.support_zero_feasible = false;
        break;
      }
    }
  }
  r.batch_uniqueness = model.n_states() >= 1;
  r.homogeneous_kernels = true;
  for (long s = 0; s < model.n_states() && r.homogeneous_kernels; ++s) {
    for (int i = 0; i < model.n_agents() && r.homogeneous_kernels; ++i) {
      for (int j = i + 1; j < model.n_agents(); ++j) {
        if (model.indexer.size(i) != model.indexer.size(j)) {
          r.homogeneous_kernels = false;
          r.homogeneity_detail = "sub-state spaces of agents " + std::to_string(i) +
                                 " and " + std::to_string(j) + " differ in size";
          break;
        }
        const Distribution& a = model.agent_kernel_row(i, s);
        const Distribution& b = model.agent_kernel_row(j, s);
        for (int x = 0; x < model.indexer.size(i); ++x) {
          if (std::abs(a.prob_of(x) - b.prob_of(x)) > 1e-12) {
            r.homogeneous_kernels = false;
            r.homogeneity_detail = "state " + std::to_string(s) + ": P_" +
                                   std::to_string(i) + ",0 and P_" + std::to_string(j) +
                                   ",0 differ at sub-state " + std::to_string(x);
            break;
          }
        }
        if (!r.homogeneous_kernels) break;
      }
    }
  }
  return r;
}

}  // namespace klc
