#include "nnmass/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nnmass/analysis.hpp"
#include "nnmass/error.hpp"
#include "nnmass/format.hpp"
#include "nnmass/topology.hpp"

namespace nnmass {

namespace {

int saturation_budget(const CellGeometry& cell) { return cell.width * (cell.depth - 2); }

void validate_cells(const std::vector<CellGeometry>& cells) {
  if (cells.empty()) throw RangeError("design: need at least one cell");
  for (const CellGeometry& cell : cells) {
    if (cell.depth < 3)
      throw DegenerateCellError("design: cell depth must be >= 3",
                                "depth " + std::to_string(cell.depth));
    if (cell.width < 1) throw RangeError("design: cell width must be positive");
  }
}

ArchitectureSpec assemble(const std::vector<CellGeometry>& cells, const std::vector<int>& budgets,
                          Activation act, int input_dim, int output_dim) {
  ArchitectureSpec spec;
  for (size_t c = 0; c < cells.size(); ++c)
    spec.cells.push_back({cells[c].depth, cells[c].width, budgets[c]});
  spec.activation = act;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  return spec;
}

double cell_mass(const CellGeometry& cell, int budget) {
  ArchitectureSpec spec;
  spec.cells.push_back({cell.depth, cell.width, budget});
  spec.input_dim = spec.output_dim = 1;
  return nn_mass(spec);
}

// Largest budget whose cell mass stays <= cap (possibly 0). Mass is
// non-decreasing in the budget, so plain binary search applies.
int largest_budget_below(const CellGeometry& cell, double cap) {
  int lo = 0, hi = saturation_budget(cell);
  if (cell_mass(cell, lo) > cap) return 0;
  while (lo < hi) {
    int mid = lo + (hi - lo + 1) / 2;
    if (cell_mass(cell, mid) <= cap * (1.0 + 1e-12) + 1e-12)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

struct Candidate {
  std::vector<int> budgets;
  double mass = 0.0;
  long long params = 0;
};

// Shared body of design_for_mass and compress: find budgets whose mass falls
// in [lo, hi], minimizing parameters (ties: lexicographically smallest).
// `target` is only used for gap reporting.
DesignResult search_budgets(const std::vector<CellGeometry>& cells, double target, double lo,
                            double hi, std::optional<long long> max_params, Activation act,
                            int input_dim, int output_dim) {
  const size_t n = cells.size();

  std::vector<int> greedy(n, 0);
  if (n == 1) {
    int t = solve_single_cell_binary(cells[0], lo, hi);
    greedy[0] = t >= 0 ? t : largest_budget_below(cells[0], lo);
  } else {
    // Cells ordered by marginal mass per parameter: adding one source unit to
    // cell c costs w_c parameters per unsaturated layer and adds
    // 2 d_c / ((d_c-1)(d_c-2)) mass per layer, so the ratio is constant per
    // cell and the cheap cells should saturate first.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      double ra = 2.0 * cells[a].depth /
                  (static_cast<double>(cells[a].width) * (cells[a].depth - 1) * (cells[a].depth - 2));
      double rb = 2.0 * cells[b].depth /
                  (static_cast<double>(cells[b].width) * (cells[b].depth - 1) * (cells[b].depth - 2));
      return ra > rb;
    });
    double remaining = lo;
    for (size_t idx : order) {
      greedy[idx] = largest_budget_below(cells[idx], remaining);
      remaining -= cell_mass(cells[idx], greedy[idx]);
      if (remaining < 0.0) remaining = 0.0;
    }
  }

  // Exhaustive pass over the +/-2 ball around the greedy point.
  std::vector<std::vector<int>> choices(n);
  for (size_t c = 0; c < n; ++c) {
    int t_max = saturation_budget(cells[c]);
    for (int t = std::max(0, greedy[c] - 2); t <= std::min(t_max, greedy[c] + 2); ++t)
      choices[c].push_back(t);
  }

  std::optional<Candidate> best_in_band;
  std::optional<Candidate> nearest;
  std::vector<int> budgets(n, 0);
  std::vector<size_t> pos(n, 0);
  while (true) {
    for (size_t c = 0; c < n; ++c) budgets[c] = choices[c][pos[c]];
    ArchitectureSpec spec = assemble(cells, budgets, act, input_dim, output_dim);
    Candidate cand{budgets, nn_mass(spec), param_count(spec)};
    bool params_ok = !max_params || cand.params <= *max_params;
    if (params_ok) {
      if (cand.mass >= lo && cand.mass <= hi) {
        if (!best_in_band || cand.params < best_in_band->params ||
            (cand.params == best_in_band->params && cand.budgets < best_in_band->budgets))
          best_in_band = cand;
      }
      auto distance = [&](const Candidate& x) { return std::abs(x.mass - target); };
      if (!nearest || distance(cand) < distance(*nearest) ||
          (distance(cand) == distance(*nearest) &&
           (cand.params < nearest->params ||
            (cand.params == nearest->params && cand.budgets < nearest->budgets))))
        nearest = cand;
    }
    size_t c = 0;
    while (c < n && ++pos[c] == choices[c].size()) {
      pos[c] = 0;
      ++c;
    }
    if (c == n) break;
  }

  if (!nearest)
    throw RangeError("design: max_params excludes every candidate budget vector");

  const Candidate& chosen = best_in_band ? *best_in_band : *nearest;
  DesignResult result;
  result.budgets = chosen.budgets;
  result.achieved_mass = chosen.mass;
  result.param_count = chosen.params;
  result.within_tolerance = best_in_band.has_value();
  result.gap = target != 0.0 ? std::abs(chosen.mass - target) / target
                             : (chosen.mass == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  result.spec = assemble(cells, chosen.budgets, act, input_dim, output_dim);
  return result;
}

}  // namespace

std::pair<double, double> mass_range(const std::vector<CellGeometry>& cells) {
  validate_cells(cells);
  double max = 0.0;
  for (const CellGeometry& cell : cells)
    max += static_cast<double>(cell.width) * cell.depth;
  return {0.0, max};
}

int solve_single_cell_exhaustive(const CellGeometry& cell, double lo, double hi) {
  for (int t = 0; t <= saturation_budget(cell); ++t) {
    double m = cell_mass(cell, t);
    if (m >= lo && m <= hi) return t;
    if (m > hi) break;  // monotone: later budgets only overshoot further
  }
  return -1;
}

int solve_single_cell_binary(const CellGeometry& cell, double lo, double hi) {
  // Smallest t with mass >= lo; masses are non-decreasing in t.
  int a = 0, b = saturation_budget(cell);
  if (cell_mass(cell, b) < lo) return -1;
  while (a < b) {
    int mid = a + (b - a) / 2;
    if (cell_mass(cell, mid) >= lo)
      b = mid;
    else
      a = mid + 1;
  }
  return cell_mass(cell, a) <= hi ? a : -1;
}

DesignResult design_for_mass(const DesignQuery& q) {
  validate_cells(q.cells);
  if (!(q.tolerance >= 0.0 && q.tolerance < 1.0))
    throw RangeError("design: tolerance must be in [0, 1)");
  auto [min_mass, max_mass] = mass_range(q.cells);
  if (!(q.target_mass >= min_mass) || q.target_mass > max_mass)
    throw InfeasibleError("design target outside attainable mass range", min_mass, max_mass,
                          "attainable [" + format_double(min_mass) + ", " +
                              format_double(max_mass) + "]");
  double lo = q.target_mass * (1.0 - q.tolerance);
  double hi = q.target_mass * (1.0 + q.tolerance);
  return search_budgets(q.cells, q.target_mass, lo, hi, q.max_params, q.activation,
                        q.input_dim, q.output_dim);
}

DesignResult compress(const ArchitectureSpec& reference,
                      const std::vector<CellGeometry>& new_cells, double tolerance) {
  validate(reference);
  validate_cells(new_cells);
  if (!(tolerance >= 0.0 && tolerance < 1.0))
    throw RangeError("compress: tolerance must be in [0, 1)");
  double m_ref = nn_mass(reference);
  auto [min_mass, max_mass] = mass_range(new_cells);
  (void)min_mass;

  DesignResult result;
  if (max_mass < m_ref) {
    // New geometry cannot reach the reference mass: report the densest
    // configuration it has, flagged out of tolerance.
    std::vector<int> budgets;
    for (const CellGeometry& cell : new_cells) budgets.push_back(saturation_budget(cell));
    ArchitectureSpec spec = assemble(new_cells, budgets, reference.activation,
                                     reference.input_dim, reference.output_dim);
    result.budgets = budgets;
    result.achieved_mass = nn_mass(spec);
    result.param_count = param_count(spec);
    result.within_tolerance = false;
    result.gap = m_ref != 0.0 ? std::abs(result.achieved_mass - m_ref) / m_ref : 0.0;
    result.spec = spec;
  } else {
    // Comparable or higher: accepted masses in [m_ref, (1+tol) m_ref].
    result = search_budgets(new_cells, m_ref, m_ref, (1.0 + tolerance) * m_ref, std::nullopt,
                            reference.activation, reference.input_dim, reference.output_dim);
  }
  result.reference_mass = m_ref;
  long long ref_params = param_count(reference);
  result.reduction_ratio = static_cast<double>(ref_params) / static_cast<double>(result.param_count);
  return result;
}

nlohmann::json design_result_to_json(const DesignResult& r) {
  return {{"budgets", r.budgets},
          {"achieved_mass", r.achieved_mass},
          {"param_count", r.param_count},
          {"gap", r.gap},
          {"within_tolerance", r.within_tolerance},
          {"spec", arch_to_json(r.spec)},
          {"reduction_ratio", r.reduction_ratio},
          {"reference_mass", r.reference_mass}};
}

}  // namespace nnmass
