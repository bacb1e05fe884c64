#include "klc/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace klc {

using nlohmann::json;

namespace {

json pairs_from(const Distribution& d) {
  json arr = json::array();
  for (size_t i = 0; i < d.support.size(); ++i)
    arr.push_back(json::array({d.support[i], d.probs[i]}));
  return arr;
}

Distribution pairs_to(const json& arr) {
  std::vector<int> support;
  std::vector<double> probs;
  for (const auto& pair : arr) {
    support.push_back(pair.at(0).get<int>());
    probs.push_back(pair.at(1).get<double>());
  }
  return Distribution(std::move(support), std::move(probs));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path);
  out << text;
}

}  // namespace

std::string model_to_json(const Model& model) {
  json j;
  j["n_agents"] = model.n_agents();
  j["space_sizes"] = model.indexer.sizes();
  j["gamma"] = model.gamma;
  j["cost"] = std::vector<double>(model.cost.data(), model.cost.data() + model.cost.size());
  json kernels = json::array();
  for (int i = 0; i < model.n_agents(); ++i) {
    json table = json::array();
    for (const auto& row : model.kernels[i]) table.push_back(pairs_from(row));
    kernels.push_back(std::move(table));
  }
  j["kernels"] = std::move(kernels);
  return j.dump();
}

Model model_from_json(const std::string& text) {
  json j = json::parse(text);
  JointIndexer indexer(j.at("space_sizes").get<std::vector<int>>());
  if (j.at("n_agents").get<int>() != indexer.n_agents())
    throw ModelError("model json: n_agents disagrees with space_sizes");
  std::vector<std::vector<Distribution>> kernels;
  for (const auto& table : j.at("kernels")) {
    std::vector<Distribution> rows;
    rows.reserve(table.size());
    for (const auto& row : table) rows.push_back(pairs_to(row));
    kernels.push_back(std::move(rows));
  }
  auto cost_vals = j.at("cost").get<std::vector<double>>();
  Vec cost = Eigen::Map<Vec>(cost_vals.data(), static_cast<long>(cost_vals.size()));
  return Model(std::move(indexer), std::move(kernels), std::move(cost),
               j.at("gamma").get<double>());
}

void save_model(const Model& model, const std::string& path) {
  write_file(path, model_to_json(model));
}

Model load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string policy_to_json(const JointPolicy& pi) {
  json j;
  j["n_states"] = pi.n_states();
  json rows = json::array();
  for (const auto& row : pi.rows) rows.push_back(pairs_from(row));
  j["rows"] = std::move(rows);
  return j.dump();
}

JointPolicy policy_from_json(const std::string& text) {
  json j = json::parse(text);
  JointPolicy pi;
  for (const auto& row : j.at("rows")) pi.rows.push_back(pairs_to(row));
  if (j.at("n_states").get<long>() != pi.n_states())
    throw ModelError("policy json: n_states disagrees with rows");
  return pi;
}

void save_policy(const JointPolicy& pi, const std::string& path) {
  write_file(path, policy_to_json(pi));
}

JointPolicy load_policy(const std::string& path) {
  return policy_from_json(read_file(path));
}

void save_values_csv(const Vec& v, const std::string& path,
                     const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "state_index,value\n";
  out.precision(17);
  for (long s = 0; s < v.size(); ++s) out << s << "," << v[s] << "\n";
}

Vec load_values_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("state_index", 0) == 0) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ModelError("bad csv line: " + line);
    vals.push_back(std::stod(line.substr(comma + 1)));
  }
  return Eigen::Map<Vec>(vals.data(), static_cast<long>(vals.size()));
}

}  // namespace klc
