#include "klc/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace klc {

namespace {
// Stream labels so selection and rollout draws never collide.
constexpr std::uint64_t kTagSelect = 1;
constexpr std::uint64_t kTagRollout = 2;
}  // namespace

void RunConfig::validate(long n_states) const {
  if (m < 1) throw ModelError("RunConfig: m must be >= 1");
  if (iterations < 0) throw ModelError("RunConfig: negative iteration budget");
  if (!(lr_c0 > 0.0)) throw ModelError("RunConfig: lr_c0 must be positive");
  if (scheme == Scheme::async) {
    int d = resolved_batch(n_states);
    if (d < 1 || d > n_states)
      throw ModelError("RunConfig: batch size D must lie in [1, |S|]");
  }
  if (workers < 1) throw ModelError("RunConfig: workers must be >= 1");
}

int RunConfig::resolved_batch(long n_states) const {
  if (scheme == Scheme::sync) return static_cast<int>(n_states);
  return batch_size < 0 ? static_cast<int>(n_states) : batch_size;
}

double learning_rate(int k, double lr_c0) {
  if (k < 0 || !(lr_c0 > 0.0)) throw ModelError("learning_rate: bad arguments");
  return lr_c0 / (lr_c0 + static_cast<double>(k));
}

Vec init_value(const Model& model, InitRule rule, const Vec& explicit_v0) {
  Vec v0;
  if (rule == InitRule::upper_constant) {
    double c = std::max(0.0, model.cost.maxCoeff()) / (1.0 - model.gamma);
    v0 = Vec::Constant(model.n_states(), c);
  } else {
    if (explicit_v0.size() != model.n_states())
      throw ModelError("init_value: explicit V0 has wrong length");
    v0 = explicit_v0;
  }
  Vec tv0 = apply_optimal_operator(model, v0);
  for (long s = 0; s < model.n_states(); ++s) {
    if (tv0[s] > v0[s] + 1e-12)
      throw ModelError("init_value: T V0 > V0 at state " + std::to_string(s));
  }
  return v0;
}

RolloutSample rollout(const Model& model, const JointPolicy& pi, long s0, int m,
                      const Vec& v, RngStream& rng, SamplingRule rule) {
  if (m < 1) throw ModelError("rollout: m must be >= 1");
  RolloutSample sample;
  sample.start_state = s0;
  sample.visited.reserve(m + 1);
  sample.visited.push_back(s0);
  long s = s0;
  double discount = 1.0;
  double ret = 0.0;
  for (int t = 0; t < m; ++t) {
    const Distribution& row = pi.row(s);
    ret += discount * one_step_cost(model, s, row);
    long next;
    if (rule == SamplingRule::joint) {
      next = row.sample(rng.uniform());
    } else {
      std::vector<int> tuple(model.n_agents());
      for (int i = 0; i < model.n_agents(); ++i)
        tuple[i] = marginal_row(model, row, i).sample(rng.uniform());
      next = model.indexer.encode(tuple);
    }
    discount *= model.gamma;
    s = next;
    sample.visited.push_back(s);
  }
  ret += discount * v[s];
  sample.return_estimate = ret;
  return sample;
}

Vec expected_m_step(const Model& model, const JointPolicy& pi, const Vec& v, int m) {
  if (m < 1) throw ModelError("expected_m_step: m must be >= 1");
  Vec out = v;
  for (int t = 0; t < m; ++t) out = apply_evaluation_operator(model, pi, out);
  return out;
}

OpiLearner::OpiLearner(const Model& model, RunConfig config)
    : model_(model), config_(std::move(config)) {
  config_.validate(model_.n_states());
  state_.v = init_value(model_, config_.init_rule, config_.v0);
  state_.k = 0;
  p0_rows_.reserve(model_.n_states());
  for (long s = 0; s < model_.n_states(); ++s)
    p0_rows_.push_back(joint_kernel_row(model_, s));
}

void OpiLearner::refresh_policy() {
  const long n = model_.n_states();
  policy_.rows.resize(n);
  q_policy_.resize(n);
  for (long s = 0; s < n; ++s) {
    policy_.rows[s] = boltzmann_row(p0_rows_[s], state_.v, model_.gamma);
    q_policy_[s] = model_.cost[s] + kl_divergence(policy_.rows[s], p0_rows_[s]);
  }
  if (config_.mode == Mode::sampled &&
      config_.sampling_rule == SamplingRule::product_of_marginals) {
    marginals_.assign(model_.n_agents(), {});
    for (int i = 0; i < model_.n_agents(); ++i) {
      marginals_[i].reserve(n);
      for (long s = 0; s < n; ++s)
        marginals_[i].push_back(marginal_row(model_, policy_.rows[s], i));
    }
  }
}

std::vector<long> OpiLearner::sample_batch(int k) {
  const long n = model_.n_states();
  if (config_.scheme == Scheme::sync) {
    std::vector<long> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  const int d = config_.resolved_batch(n);
  // Partial Fisher-Yates: d unique draws, uniform over |S|.
  std::vector<long> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  RngStream rng = derive_stream(config_.seed, kTagSelect, static_cast<std::uint64_t>(k));
  std::vector<long> batch(d);
  for (int i = 0; i < d; ++i) {
    long j = i + static_cast<long>(rng.uniform() * static_cast<double>(n - i));
    if (j >= n) j = n - 1;
    std::swap(pool[i], pool[j]);
    batch[i] = pool[i];
  }
  return batch;
}

double OpiLearner::rollout_return(long s0, RngStream& rng) const {
  long s = s0;
  double discount = 1.0;
  double ret = 0.0;
  for (int t = 0; t < config_.m; ++t) {
    ret += discount * q_policy_[s];
    if (config_.sampling_rule == SamplingRule::joint) {
      s = policy_.rows[s].sample(rng.uniform());
    } else {
      std::vector<int> tuple(model_.n_agents());
      for (int i = 0; i < model_.n_agents(); ++i)
        tuple[i] = marginals_[i][s].sample(rng.uniform());
      s = model_.indexer.encode(tuple);
    }
    discount *= model_.gamma;
  }
  return ret + discount * state_.v[s];
}

TraceRow OpiLearner::step(const Vec* v_star) {
  const int k = state_.k;
  refresh_policy();
  std::vector<long> batch = sample_batch(k);
  const size_t d = batch.size();

  std::vector<double> targets(d);
  if (config_.mode == Mode::expected) {
    // First application through the optimal operator: identical to T^pi v_k
    // for the greedy pi, and bit-exact against value_iteration when m = 1.
    Vec t(model_.n_states());
    for (long s = 0; s < model_.n_states(); ++s)
      t[s] = model_.cost[s] + lse_backup(p0_rows_[s], state_.v, model_.gamma);
    for (int step = 1; step < config_.m; ++step) {
      Vec next(model_.n_states());
      for (long s = 0; s < model_.n_states(); ++s) {
        const Distribution& row = policy_.rows[s];
        double future = 0.0;
        for (size_t i = 0; i < row.support.size(); ++i)
          future += row.probs[i] * t[row.support[i]];
        next[s] = q_policy_[s] + model_.gamma * future;
      }
      t = std::move(next);
    }
    for (size_t i = 0; i < d; ++i) targets[i] = t[batch[i]];
  } else {
    auto worker = [&](size_t begin, size_t end) {
      for (size_t i = begin; i < end; ++i) {
        RngStream rng = derive_stream(config_.seed, kTagRollout,
                                      static_cast<std::uint64_t>(k),
                                      static_cast<std::uint64_t>(batch[i]));
        targets[i] = rollout_return(batch[i], rng);
      }
    };
    const int workers = std::min<int>(config_.workers, static_cast<int>(d));
    if (workers <= 1) {
      worker(0, d);
    } else {
      std::vector<std::thread> threads;
      size_t chunk = (d + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        size_t begin = w * chunk;
        size_t end = std::min(d, begin + chunk);
        if (begin < end) threads.emplace_back(worker, begin, end);
      }
      for (auto& th : threads) th.join();
    }
  }

  const double alpha = config_.alpha_one ? 1.0 : learning_rate(k, config_.lr_c0);
  for (size_t i = 0; i < d; ++i) {
    long s = batch[i];
    state_.v[s] = (1.0 - alpha) * state_.v[s] + alpha * targets[i];
  }
  state_.k = k + 1;

  TraceRow row;
  row.k = k;
  if (v_star != nullptr) row.sup_err_vstar = sup_norm_diff(state_.v, *v_star);
  double residual = 0.0;
  for (long s = 0; s < model_.n_states(); ++s) {
    double tv = model_.cost[s] + lse_backup(p0_rows_[s], state_.v, model_.gamma);
    residual = std::max(residual, std::abs(tv - state_.v[s]));
  }
  row.bellman_residual = residual;
  row.mean_return = d == 0 ? 0.0
                           : std::accumulate(targets.begin(), targets.end(), 0.0) /
                                 static_cast<double>(d);
  row.alpha = alpha;
  row.d_size = static_cast<int>(d);
  if (config_.scheme == Scheme::async) row.sampled_states = std::move(batch);
  return row;
}

std::vector<TraceRow> OpiLearner::run(const Vec* v_star) {
  std::vector<TraceRow> trace;
  trace.reserve(config_.iterations);
  for (int k = 0; k < config_.iterations; ++k) trace.push_back(step(v_star));
  return trace;
}

void save_trace_csv(const std::vector<TraceRow>& trace, const std::string& path,
                    const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "k,sup_err_vstar,bellman_residual,mean_return,alpha,d_size\n";
  out.precision(17);
  for (const auto& row : trace) {
    out << row.k << ",";
    if (row.sup_err_vstar) out << *row.sup_err_vstar;
    out << "," << row.bellman_residual << "," << row.mean_return << "," << row.alpha
        << "," << row.d_size << "\n";
  }
}

void save_trace_jsonl(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path);
  for (const auto& row : trace) {
    out << "{\"k\":" << row.k << ",\"sampled_states\":[";
    for (size_t i = 0; i < row.sampled_states.size(); ++i) {
      if (i) out << ",";
      out << row.sampled_states[i];
    }
    out << "]}\n";
  }
}

}  // namespace klc
