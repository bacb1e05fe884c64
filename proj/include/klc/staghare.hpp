#pragma once

#include <set>

#include "klc/model.hpp"

namespace klc {

/// Rectangular gridworld with hare cells (small reward each) and stag cells
/// (large reward when at least two hunters co-occupy one). Cell indexing is
/// row-major: cell = row * width + col.
struct GridSpec {
  int width = 5;
  int height = 5;
  std::set<int> hare_cells = {0, 4, 20, 24};
  std::set<int> stag_cells = {12};
  double stay_prob = 0.9;
  double hare_cost = -2.0;
  double stag_cost = -10.0;
  int n_hunters = 2;
  double gamma = 0.95;

  int n_cells() const { return width * height; }
  void validate() const;
};

/// 4-connected neighbors of a cell, ascending.
std::vector<int> grid_neighbors(const GridSpec& spec, int cell);

/// Intrinsic joint-state cost:
/// hare_cost * (# hunters on hare cells) + stag_cost * I{>1 hunters on stag cells}.
double staghare_cost(const GridSpec& spec, const std::vector<int>& cells);

/// Builds the factored model: each agent stays with stay_prob and moves to
/// each of its b 4-neighbors with (1 - stay_prob)/b, independent of the other
/// agents' positions.
Model build_staghare_model(const GridSpec& spec);

/// Deterministic shortest-path policy: every hunter takes one step along a
/// shortest 4-connected path toward the nearest stag cell (stays once there).
/// Ties break toward the lowest-indexed successor cell.
JointPolicy deterministic_baseline(const GridSpec& spec, const Model& model);

}  // namespace klc
