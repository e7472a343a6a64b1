#include "nnmass/topology.hpp"

#include <numeric>

#include "nnmass/error.hpp"
#include "nnmass/instrumentation.hpp"
#include "nnmass/rng.hpp"

namespace nnmass {

namespace {

// Sum over layers i = 2..d-1 of min{w(i-1), t}: the per-target-layer source
// counts. Everything downstream (density, mass, degrees) is a ratio of this
// integer and products of small integers.
long long source_count_sum(const CellSpec& cell) {
  long long total = 0;
  for (int i = 2; i <= cell.depth - 1; ++i) {
    long long pool = static_cast<long long>(cell.width) * (i - 1);
    total += std::min(pool, static_cast<long long>(cell.shortcut_budget));
  }
  return total;
}

void require_dense_cell(const CellSpec& cell) {
  validate(cell);
  if (cell.depth < 3)
    throw DegenerateCellError("density needs depth >= 3",
                              "depth " + std::to_string(cell.depth));
}

long long i128_gcd(__int128 a, __int128 b) {
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return static_cast<long long>(a);
}

// Exact rational accumulator. Keeps nn_mass free of intermediate rounding so
// integer-valued masses come out bit-exact (28 is 28.0, not 28.000000000000004).
struct Fraction {
  __int128 num = 0;
  __int128 den = 1;

  void add(long long n, long long d) {
    num = num * d + den * static_cast<__int128>(n);
    den *= d;
    __int128 g = i128_gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace

long long layer_longrange_links(const CellSpec& cell, int layer) {
  validate(cell);
  if (layer < 2 || layer > cell.depth - 1)
    throw RangeError("layer outside [2, depth-1]",
                     "layer " + std::to_string(layer) + ", depth " + std::to_string(cell.depth));
  long long pool = static_cast<long long>(cell.width) * (layer - 1);
  long long sources = std::min(pool, static_cast<long long>(cell.shortcut_budget));
  return sources * cell.width;
}

long long total_possible_links(const CellSpec& cell) {
  require_dense_cell(cell);
  long long w = cell.width, d = cell.depth;
  return w * w * (d - 1) * (d - 2) / 2;
}

double cell_density(const CellSpec& cell) {
  require_dense_cell(cell);
  long long num = 2 * source_count_sum(cell);
  long long den = static_cast<long long>(cell.width) * (cell.depth - 1) * (cell.depth - 2);
  return static_cast<double>(num) / static_cast<double>(den);
}

double nn_density(const ArchitectureSpec& spec) {
  validate(spec);
  double sum = 0.0;
  for (const CellSpec& cell : spec.cells) sum += cell_density(cell);
  return sum / static_cast<double>(spec.cells.size());
}

double nn_mass(const ArchitectureSpec& spec) {
  validate(spec);
  Fraction total;
  for (const CellSpec& cell : spec.cells) {
    require_dense_cell(cell);
    // Cell contribution: w d rho = 2 d * sum_i min{w(i-1), t} / ((d-1)(d-2)).
    total.add(2 * cell.depth * source_count_sum(cell),
              static_cast<long long>(cell.depth - 1) * (cell.depth - 2));
  }
  return total.value();
}

std::pair<double, double> avg_degree(const ArchitectureSpec& spec) {
  MassReport report = mass_report(spec);
  return {report.avg_degree_estimate, report.avg_degree_exact_longrange};
}

MassReport mass_report(const ArchitectureSpec& spec) {
  validate(spec);
  MassReport report;
  double density_sum = 0.0;
  double neuron_total = 0.0;
  double estimate_weighted = 0.0;
  double exact_weighted = 0.0;
  for (const CellSpec& cell : spec.cells) {
    require_dense_cell(cell);
    long long sum = source_count_sum(cell);
    double rho = cell_density(cell);
    double cell_mass = 2.0 * cell.depth * static_cast<double>(sum) /
                       (static_cast<double>(cell.depth - 1) * (cell.depth - 2));
    // Two degree views: "estimate" treats every long-range link as if it
    // reached the full width; "exact" counts actual shortcut sources, and
    // m (d-1)(d-2) / (2 d^2) collapses to sum / d.
    double estimate = cell.width + cell_mass / 2.0;
    double exact = static_cast<double>(sum) / cell.depth;
    report.per_cell_density.push_back(rho);
    report.per_cell_degree_estimate.push_back(estimate);
    report.per_cell_degree_exact_longrange.push_back(exact);
    density_sum += rho;
    double neurons = static_cast<double>(cell.width) * cell.depth;
    neuron_total += neurons;
    estimate_weighted += neurons * estimate;
    exact_weighted += neurons * exact;
  }
  report.nn_density = density_sum / static_cast<double>(spec.cells.size());
  report.nn_mass = nn_mass(spec);
  report.avg_degree_estimate = estimate_weighted / neuron_total;
  report.avg_degree_exact_longrange = exact_weighted / neuron_total;
  return report;
}

nlohmann::json mass_report_to_json(const MassReport& report) {
  return {{"per_cell_density", report.per_cell_density},
          {"nn_density", report.nn_density},
          {"nn_mass", report.nn_mass},
          {"avg_degree_estimate", report.avg_degree_estimate},
          {"avg_degree_exact_longrange", report.avg_degree_exact_longrange},
          {"per_cell_degree_estimate", report.per_cell_degree_estimate},
          {"per_cell_degree_exact_longrange", report.per_cell_degree_exact_longrange}};
}

TopologyRealization realize_topology(const ArchitectureSpec& spec, uint64_t seed) {
  validate(spec);
  instrumentation::count_realization();
  TopologyRealization real;
  real.seed = seed;
  real.cells = spec.cells;
  real.sources.resize(spec.cells.size());
  for (size_t c = 0; c < spec.cells.size(); ++c) {
    const CellSpec& cell = spec.cells[c];
    real.sources[c].resize(cell.depth);
    for (int i = 2; i <= cell.depth - 1; ++i) {
      uint32_t pool = static_cast<uint32_t>(cell.width) * (i - 1);
      uint32_t k = std::min(pool, static_cast<uint32_t>(cell.shortcut_budget));
      // Candidate units are all units of layers 0..i-2, flattened layer-major,
      // so a sorted id list is already sorted by (layer, unit).
      Rng rng = Rng::derive(seed, {static_cast<uint64_t>(c), static_cast<uint64_t>(i)});
      std::vector<uint32_t> picks = rng.sample_without_replacement(pool, k);
      auto& list = real.sources[c][i];
      list.reserve(k);
      for (uint32_t id : picks)
        list.push_back({static_cast<int>(id / cell.width), static_cast<int>(id % cell.width)});
    }
  }
  return real;
}

LinkCount count_links_oracle(const TopologyRealization& real) {
  LinkCount count;
  for (size_t c = 0; c < real.sources.size(); ++c) {
    const CellSpec& cell = real.cells[c];
    for (int i = 0; i < cell.depth; ++i) {
      long long layer_total = 0;
      if (i < static_cast<int>(real.sources[c].size())) {
        for (const SourceUnit& src : real.sources[c][i]) {
          if (src.layer < 0 || src.layer > i - 2 || src.unit < 0 || src.unit >= cell.width)
            throw ConsistencyError("realization source outside its candidate pool");
          layer_total += cell.width;  // the source feeds every unit of layer i
        }
      }
      count.per_layer.push_back(layer_total);
      count.total += layer_total;
    }
  }
  return count;
}

nlohmann::json realization_to_json(const TopologyRealization& real) {
  nlohmann::json cells = nlohmann::json::array();
  for (size_t c = 0; c < real.sources.size(); ++c) {
    nlohmann::json layers = nlohmann::json::array();
    for (int i = 0; i < real.cells[c].depth; ++i) {
      nlohmann::json sources = nlohmann::json::array();
      if (i < static_cast<int>(real.sources[c].size()))
        for (const SourceUnit& src : real.sources[c][i])
          sources.push_back({src.layer, src.unit});
      layers.push_back({{"layer", i}, {"sources", sources}});
    }
    cells.push_back({{"depth", real.cells[c].depth},
                     {"width", real.cells[c].width},
                     {"layers", layers}});
  }
  LinkCount count = count_links_oracle(real);
  return {{"seed", real.seed},
          {"cells", cells},
          {"link_total", count.total},
          {"links_per_layer", count.per_layer}};
}

}  // namespace nnmass
