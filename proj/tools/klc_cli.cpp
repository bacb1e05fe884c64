// klc-opi: command-line harness for the KL-control MDP toolkit.
// Subcommands: solve, train, evaluate, compare, validate.
// Exit codes: 0 success, 2 config error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "klc/learner.hpp"
#include "klc/metrics.hpp"
#include "klc/operators.hpp"
#include "klc/serialize.hpp"
#include "klc/solver.hpp"
#include "klc/staghare.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace klc;

namespace {

int log_level() {
  const char* env = std::getenv("KLC_OPI_LOG");
  if (env == nullptr) return 0;
  std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[klc-opi] " << msg << "\n";
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open config " + path);
  json j;
  in >> j;
  return j;
}

// CLI flags override config-file values: apply the config value only when the
// flag was not given on the command line.
template <typename T>
void apply_config(const CLI::App& app, const json& cfg, const std::string& flag,
                  const std::string& key, T& value) {
  if (app.count(flag) == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

GridSpec grid_from_config(const json& cfg) {
  GridSpec spec;
  if (!cfg.contains("grid")) return spec;
  const json& g = cfg.at("grid");
  if (g.contains("width")) spec.width = g.at("width").get<int>();
  if (g.contains("height")) spec.height = g.at("height").get<int>();
  if (g.contains("hare_cells"))
    spec.hare_cells = g.at("hare_cells").get<std::set<int>>();
  if (g.contains("stag_cells"))
    spec.stag_cells = g.at("stag_cells").get<std::set<int>>();
  if (g.contains("stay_prob")) spec.stay_prob = g.at("stay_prob").get<double>();
  if (g.contains("hare_cost")) spec.hare_cost = g.at("hare_cost").get<double>();
  if (g.contains("stag_cost")) spec.stag_cost = g.at("stag_cost").get<double>();
  if (g.contains("n_hunters")) spec.n_hunters = g.at("n_hunters").get<int>();
  if (g.contains("gamma")) spec.gamma = g.at("gamma").get<double>();
  return spec;
}

struct ModelSource {
  std::string env;         // "staghare" or empty
  std::string model_path;  // serialized Model
  double gamma = -1.0;     // override when >= 0

  Model build(const json& cfg) const {
    Model model = [&] {
      if (!model_path.empty()) return load_model(model_path);
      if (env == "staghare") {
        GridSpec spec = grid_from_config(cfg);
        if (gamma >= 0.0) spec.gamma = gamma;
        return build_staghare_model(spec);
      }
      throw ModelError("no model source: pass --env staghare or --model <path>");
    }();
    if (!model_path.empty() && gamma >= 0.0)
      model = Model(model.indexer, model.kernels, model.cost, gamma);
    return model;
  }
};

void add_model_options(CLI::App* sub, ModelSource& src) {
  sub->add_option("--env", src.env, "built-in environment name (staghare)");
  sub->add_option("--model", src.model_path, "path to a serialized model");
  sub->add_option("--gamma", src.gamma, "discount factor override");
}

void apply_model_config(const CLI::App& app, const json& cfg, ModelSource& src) {
  apply_config(app, cfg, "--env", "env", src.env);
  apply_config(app, cfg, "--model", "model", src.model_path);
  apply_config(app, cfg, "--gamma", "gamma", src.gamma);
}

std::string provenance(const json& resolved) { return "config " + resolved.dump(); }

std::vector<long> parse_start_states(const Model& model,
                                     const std::vector<std::string>& raw) {
  std::vector<long> out;
  for (const std::string& item : raw) {
    std::vector<int> tuple;
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) tuple.push_back(std::stoi(part));
    if (static_cast<int>(tuple.size()) == model.n_agents()) {
      out.push_back(model.indexer.encode(tuple));
    } else if (tuple.size() == 1) {
      out.push_back(tuple[0]);
    } else {
      throw ModelError("start state '" + item + "' has wrong arity");
    }
  }
  return out;
}

int cmd_solve(CLI::App& app, const json& cfg, ModelSource& src, double tol,
              int max_iters, const std::string& out_dir) {
  Model model = src.build(cfg);
  log_info("solving |S| = " + std::to_string(model.n_states()));
  SolveReport report = value_iteration(model, tol, max_iters);
  fs::create_directories(out_dir);
  json resolved = {{"command", "solve"},
                   {"env", src.env},
                   {"model", src.model_path},
                   {"gamma", model.gamma},
                   {"tol", tol},
                   {"max_iters", max_iters}};
  save_values_csv(report.v_star, (fs::path(out_dir) / "vstar.csv").string(),
                  provenance(resolved));
  save_policy(report.pi_star, (fs::path(out_dir) / "pistar.json").string());
  std::cout << "iterations=" << report.iterations
            << " final_residual=" << report.final_residual << "\n";
  return 0;
}

struct TrainArgs {
  std::string scheme = "sync";
  std::string mode = "sampled";
  std::string sampling = "joint";
  int d = -1;
  int m = 20;
  int k = 3000;
  double lr_c0 = 50.0;
  bool alpha_one = false;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string oracle;
  std::string out_dir = ".";
  bool jsonl = false;
};

int cmd_train(CLI::App& sub, const json& cfg, ModelSource& src, TrainArgs& args) {
  if (args.scheme == "sync" && sub.count("--d") > 0)
    throw ModelError("--d only applies to --scheme async");
  Model model = src.build(cfg);

  RunConfig config;
  config.scheme = args.scheme == "async" ? Scheme::async : Scheme::sync;
  if (args.scheme != "sync" && args.scheme != "async")
    throw ModelError("unknown scheme '" + args.scheme + "'");
  if (args.mode == "sampled") {
    config.mode = Mode::sampled;
    if (sub.count("--seed") == 0 && !cfg.contains("seed"))
      throw ModelError("--seed is mandatory in sampled mode");
  } else if (args.mode == "expected") {
    config.mode = Mode::expected;
  } else {
    throw ModelError("unknown mode '" + args.mode + "'");
  }
  if (args.sampling == "joint") {
    config.sampling_rule = SamplingRule::joint;
  } else if (args.sampling == "marginals") {
    config.sampling_rule = SamplingRule::product_of_marginals;
  } else {
    throw ModelError("unknown sampling rule '" + args.sampling + "'");
  }
  config.batch_size = args.d;
  config.m = args.m;
  config.iterations = args.k;
  config.lr_c0 = args.lr_c0;
  config.alpha_one = args.alpha_one;
  config.seed = args.seed;
  config.workers = args.workers;

  std::optional<Vec> v_star;
  if (!args.oracle.empty()) {
    v_star = load_values_csv(args.oracle);
    if (v_star->size() != model.n_states())
      throw ModelError("oracle length != |S|");
  }

  log_info("training " + args.scheme + "/" + args.mode + " K=" +
           std::to_string(args.k));
  OpiLearner learner(model, config);
  std::vector<TraceRow> trace = learner.run(v_star ? &*v_star : nullptr);

  fs::create_directories(args.out_dir);
  json resolved = {{"command", "train"},   {"env", src.env},
                   {"model", src.model_path}, {"gamma", model.gamma},
                   {"scheme", args.scheme},   {"mode", args.mode},
                   {"sampling", args.sampling}, {"d", config.resolved_batch(model.n_states())},
                   {"m", args.m},             {"k", args.k},
                   {"lr_c0", args.lr_c0},     {"alpha_one", args.alpha_one},
                   {"seed", args.seed},       {"workers", args.workers}};
  save_trace_csv(trace, (fs::path(args.out_dir) / "trace.csv").string(),
                 provenance(resolved));
  save_values_csv(learner.state().v, (fs::path(args.out_dir) / "vfinal.csv").string(),
                  provenance(resolved));
  save_policy(learner.current_policy(),
              (fs::path(args.out_dir) / "pifinal.json").string());
  if (args.jsonl)
    save_trace_jsonl(trace, (fs::path(args.out_dir) / "trace.jsonl").string());
  std::cout << "iterations=" << trace.size();
  if (!trace.empty()) std::cout << " final_residual=" << trace.back().bellman_residual;
  std::cout << "\n";
  return 0;
}

int cmd_evaluate(const json& cfg, ModelSource& src, const std::string& policy_path,
                 const std::vector<std::string>& starts_raw, int horizon,
                 int episodes, bool discounted, std::uint64_t seed,
                 const std::string& out_dir) {
  Model model = src.build(cfg);
  JointPolicy pi = load_policy(policy_path);
  std::vector<long> starts = parse_start_states(model, starts_raw);
  if (starts.empty()) throw ModelError("evaluate: no start states given");
  fs::create_directories(out_dir);
  json resolved = {{"command", "evaluate"}, {"policy", policy_path},
                   {"horizon", horizon},    {"episodes", episodes},
                   {"discounted", discounted}, {"seed", seed}};
  std::ofstream out(fs::path(out_dir) / "evaluate.csv");
  out << "# " << provenance(resolved) << "\n";
  out << "start_state,mean_return,std_return,n_episodes,horizon\n";
  out.precision(17);
  for (long s0 : starts) {
    ReturnStats stats =
        monte_carlo_return(model, pi, s0, horizon, episodes, discounted, seed);
    out << s0 << "," << stats.mean << "," << stats.std_dev << "," << episodes << ","
        << horizon << "\n";
    std::cout << "state " << s0 << ": mean=" << stats.mean
              << " std=" << stats.std_dev << "\n";
  }
  return 0;
}

int cmd_compare(const json& cfg, ModelSource& src, const std::string& policy_path,
                std::vector<std::string> starts_raw, int horizon, int episodes,
                std::uint64_t seed, const std::string& out_dir) {
  Model model = src.build(cfg);
  JointPolicy learned = load_policy(policy_path);
  GridSpec spec = grid_from_config(cfg);
  if (src.gamma >= 0.0) spec.gamma = src.gamma;
  JointPolicy baseline = deterministic_baseline(spec, model);

  if (starts_raw.empty() && model.n_agents() == 2 && model.n_states() == 625) {
    starts_raw = {"20,4", "5,12", "18,14", "11,13"};
  }
  std::vector<long> starts = parse_start_states(model, starts_raw);
  if (starts.empty()) throw ModelError("compare: no start states given");

  auto rows = compare_policies(model, learned, baseline, starts, horizon, episodes,
                               seed, "learned", "baseline");
  fs::create_directories(out_dir);
  json resolved = {{"command", "compare"}, {"policy", policy_path},
                   {"horizon", horizon},   {"episodes", episodes},
                   {"seed", seed}};
  save_comparison_csv(rows, horizon, (fs::path(out_dir) / "compare.csv").string(),
                      provenance(resolved));
  for (const auto& row : rows) {
    std::cout << row.start_state << " " << row.policy << " mean=" << row.stats.mean
              << " std=" << row.stats.std_dev << "\n";
  }
  return 0;
}

int cmd_validate(const json& cfg, ModelSource& src) {
  Model model = src.build(cfg);
  AssumptionReport r = validate_assumptions(model);
  std::cout << "A1 factored state:            " << (r.factored_state ? "pass" : "FAIL")
            << "\n";
  std::cout << "A2 homogeneous kernels:       "
            << (r.homogeneous_kernels ? "pass" : "reported: " + r.homogeneity_detail)
            << "\n";
  std::cout << "A3 support-zero feasibility:  "
            << (r.support_zero_feasible ? "pass" : "FAIL") << "\n";
  std::cout << "A4 batch uniqueness:          " << (r.batch_uniqueness ? "pass" : "FAIL")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KL-control multi-agent MDP solver and OPI learning toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)")
      ->expected(1);

  // solve
  auto* solve = app.add_subcommand("solve", "exact value iteration to V*");
  ModelSource solve_src;
  add_model_options(solve, solve_src);
  double tol = 1e-8;
  int max_iters = 100000;
  std::string solve_out = ".";
  solve->add_option("--tol", tol, "sup-norm residual tolerance");
  solve->add_option("--max-iters", max_iters, "iteration ceiling");
  solve->add_option("--out-dir", solve_out, "output directory");

  // train
  auto* train = app.add_subcommand("train", "run KLC-OPI / ASYNC-KLC-OPI");
  ModelSource train_src;
  add_model_options(train, train_src);
  TrainArgs targs;
  train->add_option("--scheme", targs.scheme, "sync|async");
  train->add_option("--mode", targs.mode, "sampled|expected");
  train->add_option("--sampling", targs.sampling, "joint|marginals");
  train->add_option("--d", targs.d, "async batch size D");
  train->add_option("--m", targs.m, "rollout length");
  train->add_option("--k", targs.k, "iteration budget K");
  train->add_option("--lr-c0", targs.lr_c0, "learning-rate constant c0");
  train->add_flag("--alpha-one", targs.alpha_one, "force alpha_k = 1");
  train->add_option("--seed", targs.seed, "master seed (mandatory when sampled)");
  train->add_option("--workers", targs.workers, "rollout worker threads");
  train->add_option("--oracle", targs.oracle, "vstar.csv for the sup_err column");
  train->add_option("--out-dir", targs.out_dir, "output directory");
  train->add_flag("--jsonl", targs.jsonl, "also write trace.jsonl with sampled sets");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo policy evaluation");
  ModelSource eval_src;
  add_model_options(evaluate, eval_src);
  std::string eval_policy;
  std::vector<std::string> eval_starts;
  int eval_horizon = 20, eval_episodes = 1000;
  bool eval_discounted = false;
  std::uint64_t eval_seed = 0;
  std::string eval_out = ".";
  evaluate->add_option("--policy", eval_policy, "policy json")->required();
  evaluate->add_option("--start", eval_starts, "start state, e.g. 11,13");
  evaluate->add_option("--horizon", eval_horizon, "episode horizon");
  evaluate->add_option("--episodes", eval_episodes, "episodes per start state");
  evaluate->add_flag("--discounted", eval_discounted, "discount the return");
  evaluate->add_option("--seed", eval_seed, "master seed")->required();
  evaluate->add_option("--out-dir", eval_out, "output directory");

  // compare
  auto* compare = app.add_subcommand("compare", "learned vs deterministic baseline");
  ModelSource cmp_src;
  add_model_options(compare, cmp_src);
  std::string cmp_policy;
  std::vector<std::string> cmp_starts;
  int cmp_horizon = 20, cmp_episodes = 1000;
  std::uint64_t cmp_seed = 0;
  std::string cmp_out = ".";
  compare->add_option("--policy", cmp_policy, "learned policy json")->required();
  compare->add_option("--start", cmp_starts, "extra start states");
  compare->add_option("--horizon", cmp_horizon, "episode horizon");
  compare->add_option("--episodes", cmp_episodes, "episodes per start state");
  compare->add_option("--seed", cmp_seed, "master seed")->required();
  compare->add_option("--out-dir", cmp_out, "output directory");

  // validate
  auto* validate = app.add_subcommand("validate", "report the model assumptions");
  ModelSource val_src;
  add_model_options(validate, val_src);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json cfg = load_config(config_path);
    if (solve->parsed()) {
      apply_model_config(*solve, cfg, solve_src);
      apply_config(*solve, cfg, "--tol", "tol", tol);
      apply_config(*solve, cfg, "--max-iters", "max_iters", max_iters);
      apply_config(*solve, cfg, "--out-dir", "out_dir", solve_out);
      return cmd_solve(*solve, cfg, solve_src, tol, max_iters, solve_out);
    }
    if (train->parsed()) {
      apply_model_config(*train, cfg, train_src);
      apply_config(*train, cfg, "--scheme", "scheme", targs.scheme);
      apply_config(*train, cfg, "--mode", "mode", targs.mode);
      apply_config(*train, cfg, "--sampling", "sampling", targs.sampling);
      apply_config(*train, cfg, "--d", "d", targs.d);
      apply_config(*train, cfg, "--m", "m", targs.m);
      apply_config(*train, cfg, "--k", "k", targs.k);
      apply_config(*train, cfg, "--lr-c0", "lr_c0", targs.lr_c0);
      apply_config(*train, cfg, "--seed", "seed", targs.seed);
      apply_config(*train, cfg, "--workers", "workers", targs.workers);
      apply_config(*train, cfg, "--oracle", "oracle", targs.oracle);
      apply_config(*train, cfg, "--out-dir", "out_dir", targs.out_dir);
      return cmd_train(*train, cfg, train_src, targs);
    }
    if (evaluate->parsed()) {
      apply_model_config(*evaluate, cfg, eval_src);
      return cmd_evaluate(cfg, eval_src, eval_policy, eval_starts, eval_horizon,
                          eval_episodes, eval_discounted, eval_seed, eval_out);
    }
    if (compare->parsed()) {
      apply_model_config(*compare, cfg, cmp_src);
      return cmd_compare(cfg, cmp_src, cmp_policy, cmp_starts, cmp_horizon,
                         cmp_episodes, cmp_seed, cmp_out);
    }
    if (validate->parsed()) {
      apply_model_config(*validate, cfg, val_src);
      return cmd_validate(cfg, val_src);
    }
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
