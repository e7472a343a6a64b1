#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nnmass/arch.hpp"

namespace nnmass {

struct CellGeometry {
  int depth = 0;
  int width = 0;
};

struct DesignQuery {
  double target_mass = 0.0;
  std::vector<CellGeometry> cells;
  double tolerance = 0.0;  // relative, in [0, 1)
  std::optional<long long> max_params;
  // Cosmetic fields for the architecture embedded in the result.
  Activation activation = Activation::relu;
  int input_dim = 2;
  int output_dim = 2;
};

struct DesignResult {
  std::vector<int> budgets;
  double achieved_mass = 0.0;
  long long param_count = 0;
  double gap = 0.0;  // |achieved - target| / target (0 when target is 0)
  bool within_tolerance = false;
  ArchitectureSpec spec;
  // Set by compress: reference params / designed params.
  double reduction_ratio = 0.0;
  double reference_mass = 0.0;
};

// Attainable interval of nn_mass over integer budgets: [0, sum of w_c * d_c].
std::pair<double, double> mass_range(const std::vector<CellGeometry>& cells);

// Find integer budgets whose closed-form mass lands within tolerance of the
// target, minimizing param_count (ties: lexicographically smallest budgets).
// Only arithmetic on the formulas is performed: no realizations, no weights,
// no training. Infeasible targets throw; an in-range target with no
// within-tolerance integer solution returns the nearest achievable mass with
// within_tolerance = false.
DesignResult design_for_mass(const DesignQuery& q);

// Redesign `reference` onto a new geometry at comparable-or-higher mass:
// accepted masses lie in [m_ref, (1+tolerance) * m_ref]. Reports the
// parameter reduction ratio against the reference.
DesignResult compress(const ArchitectureSpec& reference,
                      const std::vector<CellGeometry>& new_cells, double tolerance);

nlohmann::json design_result_to_json(const DesignResult& r);

// Internals exposed for property tests: both must agree on every query.
int solve_single_cell_binary(const CellGeometry& cell, double lo, double hi);
int solve_single_cell_exhaustive(const CellGeometry& cell, double lo, double hi);

}  // namespace nnmass
