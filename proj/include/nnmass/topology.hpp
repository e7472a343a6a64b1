#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nnmass/arch.hpp"

namespace nnmass {

// Count of long-range edges entering layer `layer` (zero-indexed within the
// cell, valid range [2, d_c-1]): min{w_c(i-1), t_c} source units, each wired
// to all w_c units of the target layer.
long long layer_longrange_links(const CellSpec& cell, int layer);

// All (source unit, target unit) pairs with target layer >= source layer + 2:
// w_c^2 (d_c-1)(d_c-2) / 2.
long long total_possible_links(const CellSpec& cell);

// Realized / possible link ratio in [0, 1].
double cell_density(const CellSpec& cell);

// Arithmetic mean of cell_density across cells.
double nn_density(const ArchitectureSpec& spec);

// Sum over cells of w_c d_c rho_c, evaluated in exact integer rationals and
// rounded once at the end.
double nn_mass(const ArchitectureSpec& spec);

// (estimate, exact_longrange). Estimate is w_c + m_c/2 per cell; the exact
// long-range degree works out to (sum of per-layer source counts) / d_c.
// Multi-cell specs report neuron-count-weighted means of the per-cell values.
std::pair<double, double> avg_degree(const ArchitectureSpec& spec);

struct MassReport {
  std::vector<double> per_cell_density;
  double nn_density = 0.0;
  double nn_mass = 0.0;
  double avg_degree_estimate = 0.0;
  double avg_degree_exact_longrange = 0.0;
  std::vector<double> per_cell_degree_estimate;
  std::vector<double> per_cell_degree_exact_longrange;
};

MassReport mass_report(const ArchitectureSpec& spec);
nlohmann::json mass_report_to_json(const MassReport& report);

// A concrete draw of the long-range wiring. Source units are identified as
// (layer, unit) within their cell; lists are kept sorted by (layer, unit).
struct SourceUnit {
  int layer = 0;
  int unit = 0;

  bool operator==(const SourceUnit&) const = default;
  auto operator<=>(const SourceUnit&) const = default;
};

struct TopologyRealization {
  // sources[c][i] = chosen source units feeding layer i of cell c.
  // Entries for i in {0, 1} are always empty.
  std::vector<std::vector<std::vector<SourceUnit>>> sources;
  std::vector<CellSpec> cells;
  uint64_t seed = 0;
};

TopologyRealization realize_topology(const ArchitectureSpec& spec, uint64_t seed);

struct LinkCount {
  std::vector<long long> per_layer;  // cell-major, one entry per layer
  long long total = 0;
};

// Counts edges by walking every (source, target unit) pair of the realization,
// independently of the closed forms above.
LinkCount count_links_oracle(const TopologyRealization& real);

nlohmann::json realization_to_json(const TopologyRealization& real);

}  // namespace nnmass
