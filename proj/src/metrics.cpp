#include "klc/metrics.hpp"

#include <cmath>
#include <fstream>

namespace klc {

namespace {
constexpr std::uint64_t kTagEpisode = 3;
}

ReturnStats monte_carlo_return(const Model& model, const JointPolicy& pi, long s0,
                               int horizon, int n_episodes, bool discounted,
                               std::uint64_t seed) {
  if (horizon < 1 || n_episodes < 1)
    throw ModelError("monte_carlo_return: horizon and n_episodes must be >= 1");
  check_policy(model, pi);

  // Per-state one-step cost under pi, computed once.
  Vec q(model.n_states());
  for (long s = 0; s < model.n_states(); ++s) q[s] = one_step_cost(model, s, pi.row(s));

  double sum = 0.0;
  double sum_sq = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    RngStream rng = derive_stream(seed, kTagEpisode, static_cast<std::uint64_t>(ep),
                                  static_cast<std::uint64_t>(s0));
    long s = s0;
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      ret += discount * q[s];
      s = pi.row(s).sample(rng.uniform());
      if (discounted) discount *= model.gamma;
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  ReturnStats stats;
  stats.n_episodes = n_episodes;
  stats.mean = sum / n_episodes;
  double var = sum_sq / n_episodes - stats.mean * stats.mean;
  stats.std_dev = std::sqrt(std::max(var, 0.0));
  return stats;
}

std::vector<PolicyComparisonRow> compare_policies(
    const Model& model, const JointPolicy& pi_a, const JointPolicy& pi_b,
    const std::vector<long>& start_states, int horizon, int n_episodes,
    std::uint64_t seed, const std::string& name_a, const std::string& name_b) {
  std::vector<PolicyComparisonRow> rows;
  for (long s0 : start_states) {
    if (s0 < 0 || s0 >= model.n_states())
      throw ModelError("compare_policies: start state out of range");
    rows.push_back({s0, name_a,
                    monte_carlo_return(model, pi_a, s0, horizon, n_episodes,
                                       /*discounted=*/false, seed)});
    rows.push_back({s0, name_b,
                    monte_carlo_return(model, pi_b, s0, horizon, n_episodes,
                                       /*discounted=*/false, seed + 1)});
  }
  return rows;
}

void save_comparison_csv(const std::vector<PolicyComparisonRow>& rows, int horizon,
                         const std::string& path, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "start_state,policy,mean_return,std_return,n_episodes,horizon\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << row.start_state << "," << row.policy << "," << row.stats.mean << ","
        << row.stats.std_dev << "," << row.stats.n_episodes << "," << horizon << "\n";
  }
}

}  // namespace klc
