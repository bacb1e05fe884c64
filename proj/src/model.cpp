#include "klc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace klc {

Distribution::Distribution(std::vector<int> support_, std::vector<double> probs_)
    : support(std::move(support_)), probs(std::move(probs_)) {
  if (support.size() != probs.size())
    throw ModelError("Distribution: support/probs length mismatch");
  if (support.empty()) throw ModelError("Distribution: empty support");
  for (size_t i = 0; i + 1 < support.size(); ++i) {
    if (support[i] >= support[i + 1])
      throw ModelError("Distribution: support not strictly increasing");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw ModelError("Distribution: nonpositive probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTol)
    throw ModelError("Distribution: probabilities sum to " + std::to_string(sum));
}

double Distribution::prob_of(int index) const {
  auto it = std::lower_bound(support.begin(), support.end(), index);
  if (it == support.end() || *it != index) return 0.0;
  return probs[static_cast<size_t>(it - support.begin())];
}

void Distribution::renormalize() {
  double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= sum;
}

int Distribution::sample(double u) const {
  double cum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return support[i];
  }
  return support.back();
}

JointIndexer::JointIndexer(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw ModelError("JointIndexer: no agents");
  for (int sz : sizes_) {
    if (sz < 1) throw ModelError("JointIndexer: sub-state space size < 1");
  }
  strides_.resize(sizes_.size());
  long stride = 1;
  for (int i = static_cast<int>(sizes_.size()) - 1; i >= 0; --i) {
    strides_[i] = stride;
    stride *= sizes_[i];
  }
  n_states_ = stride;
}

long JointIndexer::encode(const std::vector<int>& substates) const {
  if (substates.size() != sizes_.size())
    throw ModelError("encode: wrong tuple length");
  long flat = 0;
  for (size_t i = 0; i < sizes_.size(); ++i) {
    if (substates[i] < 0 || substates[i] >= sizes_[i])
      throw ModelError("encode: sub-state out of range");
    flat += substates[i] * strides_[i];
  }
  return flat;
}

std::vector<int> JointIndexer::decode(long flat) const {
  if (flat < 0 || flat >= n_states_) throw ModelError("decode: index out of range");
  std::vector<int> out(sizes_.size());
  for (size_t i = 0; i < sizes_.size(); ++i) {
    out[i] = static_cast<int>((flat / strides_[i]) % sizes_[i]);
  }
  return out;
}

int JointIndexer::substate_of(long flat, int agent) const {
  return static_cast<int>((flat / strides_[agent]) % sizes_[agent]);
}

long JointIndexer::with_substate(long flat, int agent, int substate) const {
  int old = substate_of(flat, agent);
  return flat + (substate - old) * strides_[agent];
}

Model::Model(JointIndexer indexer_, std::vector<std::vector<Distribution>> kernels_,
             Vec cost_, double gamma_)
    : indexer(std::move(indexer_)),
      kernels(std::move(kernels_)),
      cost(std::move(cost_)),
      gamma(gamma_) {
  if (static_cast<int>(kernels.size()) != indexer.n_agents())
    throw ModelError("Model: kernel table count != n_agents");
  for (int i = 0; i < indexer.n_agents(); ++i) {
    if (static_cast<long>(kernels[i].size()) != indexer.n_states())
      throw ModelError("Model: kernel table length != |S|");
    for (const auto& row : kernels[i]) {
      for (int t : row.support) {
        if (t < 0 || t >= indexer.size(i))
          throw ModelError("Model: kernel support outside sub-state space");
      }
    }
  }
  if (cost.size() != indexer.n_states())
    throw ModelError("Model: cost length != |S|");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ModelError("Model: gamma must lie in [0,1)");
}

}  // namespace klc
