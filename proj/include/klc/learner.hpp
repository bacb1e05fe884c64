#pragma once

#include <optional>

#include "klc/model.hpp"
#include "klc/operators.hpp"
#include "klc/rng.hpp"

namespace klc {

enum class Scheme { sync, async };
enum class Mode { sampled, expected };
enum class SamplingRule { joint, product_of_marginals };
enum class InitRule { upper_constant, explicit_v0 };

struct RunConfig {
  Scheme scheme = Scheme::sync;
  Mode mode = Mode::sampled;
  SamplingRule sampling_rule = SamplingRule::joint;
  InitRule init_rule = InitRule::upper_constant;
  Vec v0;                 // used when init_rule == explicit_v0
  int m = 20;             // rollout length
  int iterations = 3000;  // K
  int batch_size = -1;    // D; -1 means |S| (forced for sync)
  double lr_c0 = 50.0;
  bool alpha_one = false;  // force alpha_k = 1 (VI/PI reduction runs)
  std::uint64_t seed = 0;
  int workers = 1;

  void validate(long n_states) const;
  int resolved_batch(long n_states) const;
};

struct LearnerState {
  Vec v;
  int k = 0;
};

struct RolloutSample {
  long start_state = 0;
  std::vector<long> visited;  // m+1 states, visited[0] == start_state
  double return_estimate = 0.0;
};

struct TraceRow {
  int k = 0;
  std::optional<double> sup_err_vstar;
  double bellman_residual = 0.0;
  double mean_return = 0.0;
  double alpha = 0.0;
  int d_size = 0;
  std::vector<long> sampled_states;
};

/// alpha_k = lr_c0 / (lr_c0 + k); alpha_0 = 1 for any positive lr_c0.
double learning_rate(int k, double lr_c0);

/// Initial estimate satisfying T V0 <= V0. The upper_constant rule returns
/// the constant max(0, max_s C(s)) / (1 - gamma); an explicit V0 is validated
/// against the same inequality and rejected with the violating state named.
Vec init_value(const Model& model, InitRule rule, const Vec& explicit_v0 = Vec());

/// Simulates an m-step trajectory from s0 under pi and returns
/// sum_t gamma^t q(s_t, pi) + gamma^m v(s_m). The per-step KL cost term is
/// analytic; the trajectory is the only noise source.
RolloutSample rollout(const Model& model, const JointPolicy& pi, long s0, int m,
                      const Vec& v, RngStream& rng,
                      SamplingRule rule = SamplingRule::joint);

/// (T^pi)^m v, computed exactly.
Vec expected_m_step(const Model& model, const JointPolicy& pi, const Vec& v, int m);

/// Runs the optimistic policy iteration scheme. Holds the cached uncontrolled
/// kernel rows and the per-iteration policy so that repeated iterations are
/// cheap.
class OpiLearner {
 public:
  OpiLearner(const Model& model, RunConfig config);

  const LearnerState& state() const { return state_; }
  const RunConfig& config() const { return config_; }
  const JointPolicy& current_policy() const { return policy_; }

  /// One greedy-improvement + evaluation-update iteration. Returns the trace
  /// row for the completed iteration.
  TraceRow step(const Vec* v_star = nullptr);

  std::vector<TraceRow> run(const Vec* v_star = nullptr);

 private:
  const Model& model_;
  RunConfig config_;
  LearnerState state_;
  JointPolicy policy_;
  std::vector<Distribution> p0_rows_;
  Vec q_policy_;  // one-step cost under policy_, refreshed each iteration
  std::vector<std::vector<Distribution>> marginals_;  // per agent, when sampling marginals

  void refresh_policy();
  std::vector<long> sample_batch(int k);
  double rollout_return(long s0, RngStream& rng) const;
};

void save_trace_csv(const std::vector<TraceRow>& trace, const std::string& path,
                    const std::string& header_comment = "");

/// Optional JSONL companion with the full sampled-state sets per iteration.
void save_trace_jsonl(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace klc
