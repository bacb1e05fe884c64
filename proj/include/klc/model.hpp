#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace klc {

using Vec = Eigen::VectorXd;

constexpr double kRowSumTol = 1e-12;

/// Sparse probability vector over a finite index set with explicit support.
/// Support indices are strictly increasing; all stored probabilities are
/// positive and sum to 1 within kRowSumTol.
struct Distribution {
  std::vector<int> support;
  std::vector<double> probs;

  Distribution() = default;
  Distribution(std::vector<int> support_, std::vector<double> probs_);

  static Distribution point_mass(int index) { return Distribution({index}, {1.0}); }

  int size() const { return static_cast<int>(support.size()); }

  /// Probability of `index`, 0 if outside the support. Binary search.
  double prob_of(int index) const;

  /// Renormalizes in place so the probabilities sum to exactly 1.
  void renormalize();

  /// Inverse-CDF sample given a uniform draw u in [0,1).
  int sample(double u) const;

  bool operator==(const Distribution& other) const = default;
};

/// Mixed-radix encoder between flat joint state indices and per-agent
/// sub-state tuples. Radices are the sub-state space sizes (|S_1|,...,|S_n|);
/// agent 0 is the most significant digit.
class JointIndexer {
 public:
  JointIndexer() = default;
  explicit JointIndexer(std::vector<int> sizes);

  int n_agents() const { return static_cast<int>(sizes_.size()); }
  int size(int agent) const { return sizes_.at(agent); }
  const std::vector<int>& sizes() const { return sizes_; }
  long n_states() const { return n_states_; }

  long encode(const std::vector<int>& substates) const;
  std::vector<int> decode(long flat) const;
  int substate_of(long flat, int agent) const;

  /// Replaces agent's digit in `flat` with `substate`.
  long with_substate(long flat, int agent, int substate) const;

 private:
  std::vector<int> sizes_;
  std::vector<long> strides_;
  long n_states_ = 0;
};

/// Factored multi-agent MDP with KL control costs: per-agent uncontrolled
/// kernels P_{i,0}(.|s) over that agent's sub-states, an intrinsic cost
/// vector over joint states, and a discount in [0,1).
struct Model {
  JointIndexer indexer;
  // kernels[agent][joint_state] is a Distribution over agent's sub-states.
  std::vector<std::vector<Distribution>> kernels;
  Vec cost;
  double gamma = 0.0;

  Model() = default;
  Model(JointIndexer indexer_, std::vector<std::vector<Distribution>> kernels_,
        Vec cost_, double gamma_);

  int n_agents() const { return indexer.n_agents(); }
  long n_states() const { return indexer.n_states(); }

  const Distribution& agent_kernel_row(int agent, long s) const {
    return kernels[agent][s];
  }
};

/// Per-joint-state distribution over next joint states. Support of each row
/// must be contained in the support of the uncontrolled joint kernel row.
struct JointPolicy {
  std::vector<Distribution> rows;

  long n_states() const { return static_cast<long>(rows.size()); }
  const Distribution& row(long s) const { return rows[s]; }
};

/// Cole-Hopf transform z = exp(-V). `saturated` is set when any entry
/// under- or overflowed to 0 or inf.
struct Desirability {
  Vec z;
  bool saturated = false;
};

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace klc
