#include "klc/staghare.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace klc {

void GridSpec::validate() const {
  if (width < 1 || height < 1) throw ModelError("GridSpec: nonpositive grid size");
  if (n_hunters < 1) throw ModelError("GridSpec: need at least one hunter");
  if (!(stay_prob > 0.0 && stay_prob < 1.0))
    throw ModelError("GridSpec: stay_prob must lie in (0,1)");
  for (int c : hare_cells) {
    if (c < 0 || c >= n_cells()) throw ModelError("GridSpec: hare cell out of range");
    if (stag_cells.count(c)) throw ModelError("GridSpec: hare and stag cells overlap");
  }
  for (int c : stag_cells) {
    if (c < 0 || c >= n_cells()) throw ModelError("GridSpec: stag cell out of range");
  }
}

std::vector<int> grid_neighbors(const GridSpec& spec, int cell) {
  int row = cell / spec.width;
  int col = cell % spec.width;
  std::vector<int> out;
  if (row > 0) out.push_back(cell - spec.width);
  if (col > 0) out.push_back(cell - 1);
  if (col + 1 < spec.width) out.push_back(cell + 1);
  if (row + 1 < spec.height) out.push_back(cell + spec.width);
  std::sort(out.begin(), out.end());
  return out;
}

double staghare_cost(const GridSpec& spec, const std::vector<int>& cells) {
  int on_hare = 0;
  int on_stag = 0;
  for (int c : cells) {
    on_hare += spec.hare_cells.count(c) ? 1 : 0;
    on_stag += spec.stag_cells.count(c) ? 1 : 0;
  }
  return spec.hare_cost * on_hare + (on_stag > 1 ? spec.stag_cost : 0.0);
}

Model build_staghare_model(const GridSpec& spec) {
  spec.validate();
  const int cells = spec.n_cells();

  // Per-cell row: stay w.p. stay_prob, each of b neighbors w.p. (1-stay_prob)/b.
  std::vector<Distribution> cell_rows;
  cell_rows.reserve(cells);
  for (int c = 0; c < cells; ++c) {
    std::vector<int> nbrs = grid_neighbors(spec, c);
    std::vector<int> support = nbrs;
    support.push_back(c);
    std::sort(support.begin(), support.end());
    std::vector<double> probs;
    double move_p = (1.0 - spec.stay_prob) / static_cast<double>(nbrs.size());
    for (int t : support) probs.push_back(t == c ? spec.stay_prob : move_p);
    cell_rows.emplace_back(std::move(support), std::move(probs));
  }

  JointIndexer indexer(std::vector<int>(spec.n_hunters, cells));
  std::vector<std::vector<Distribution>> kernels(spec.n_hunters);
  Vec cost(indexer.n_states());
  for (long s = 0; s < indexer.n_states(); ++s) {
    std::vector<int> tuple = indexer.decode(s);
    cost[s] = staghare_cost(spec, tuple);
    for (int i = 0; i < spec.n_hunters; ++i) kernels[i].push_back(cell_rows[tuple[i]]);
  }
  return Model(std::move(indexer), std::move(kernels), std::move(cost), spec.gamma);
}

namespace {

// BFS distances to the nearest stag cell.
std::vector<int> stag_distances(const GridSpec& spec) {
  std::vector<int> dist(spec.n_cells(), std::numeric_limits<int>::max());
  std::queue<int> frontier;
  for (int c : spec.stag_cells) {
    dist[c] = 0;
    frontier.push(c);
  }
  while (!frontier.empty()) {
    int c = frontier.front();
    frontier.pop();
    for (int nb : grid_neighbors(spec, c)) {
      if (dist[nb] > dist[c] + 1) {
        dist[nb] = dist[c] + 1;
        frontier.push(nb);
      }
    }
  }
  return dist;
}

}  // namespace

JointPolicy deterministic_baseline(const GridSpec& spec, const Model& model) {
  spec.validate();
  if (spec.stag_cells.empty()) throw ModelError("deterministic_baseline: no stag cell");
  std::vector<int> dist = stag_distances(spec);
  for (int c = 0; c < spec.n_cells(); ++c) {
    if (dist[c] == std::numeric_limits<int>::max())
      throw ModelError("deterministic_baseline: stag unreachable from cell " +
                       std::to_string(c));
  }

  // One shortest-path step per cell; lowest-indexed successor breaks ties.
  std::vector<int> step(spec.n_cells());
  for (int c = 0; c < spec.n_cells(); ++c) {
    if (dist[c] == 0) {
      step[c] = c;
      continue;
    }
    int best = -1;
    for (int nb : grid_neighbors(spec, c)) {
      if (dist[nb] == dist[c] - 1) {
        best = nb;
        break;  // neighbors are ascending
      }
    }
    step[c] = best;
  }

  JointPolicy pi;
  pi.rows.reserve(model.n_states());
  for (long s = 0; s < model.n_states(); ++s) {
    std::vector<int> tuple = model.indexer.decode(s);
    for (int& c : tuple) c = step[c];
    pi.rows.push_back(Distribution::point_mass(static_cast<int>(model.indexer.encode(tuple))));
  }
  return pi;
}

}  // namespace klc
