#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "nnmass/error.hpp"
#include "nnmass/rng.hpp"
#include "nnmass/topology.hpp"
#include "support/oracles.hpp"

using namespace nnmass;

namespace {

// Three cells of depth 4, widths [2,3,4], budgets [3,4,5].
ArchitectureSpec reference_arch() {
  ArchitectureSpec spec;
  spec.cells = {{4, 2, 3}, {4, 3, 4}, {4, 4, 5}};
  spec.activation = Activation::relu;
  spec.input_dim = 2;
  spec.output_dim = 2;
  return spec;
}

}  // namespace

TEST_CASE("per-layer link counts match edge enumeration") {
  CellSpec a{4, 2, 3};
  CHECK(layer_longrange_links(a, 2) == 4);
  CHECK(layer_longrange_links(a, 3) == 6);
  CellSpec b{4, 3, 4};
  CHECK(layer_longrange_links(b, 3) == 12);
  CellSpec zero{6, 5, 0};
  for (int i = 2; i <= 5; ++i) CHECK(layer_longrange_links(zero, i) == 0);
  CHECK_THROWS_AS(layer_longrange_links(a, 1), RangeError);
  CHECK_THROWS_AS(layer_longrange_links(a, 4), RangeError);
}

TEST_CASE("total possible links") {
  CHECK(total_possible_links(CellSpec{4, 2, 0}) == 12);
  CHECK(total_possible_links(CellSpec{3, 1, 0}) == 1);
  CHECK(total_possible_links(CellSpec{3, 5, 0}) == 25);
  CHECK_THROWS_AS(total_possible_links(CellSpec{2, 4, 0}), DegenerateCellError);
}

TEST_CASE("cell density matches brute-force link ratios") {
  CHECK(cell_density(CellSpec{9, 6, 0}) == 0.0);
  CHECK(cell_density(CellSpec{5, 2, 6}) == 1.0);   // t >= w(d-2)
  CHECK(cell_density(CellSpec{5, 2, 99}) == 1.0);  // beyond saturation
  CHECK(cell_density(CellSpec{4, 2, 3}) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(cell_density(CellSpec{4, 3, 4}) == doctest::Approx(7.0 / 9.0).epsilon(1e-15));
  CHECK(cell_density(CellSpec{4, 4, 5}) == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("network density is the mean of cell densities") {
  auto spec = reference_arch();
  CHECK(nn_density(spec) == doctest::Approx(85.0 / 108.0).epsilon(1e-15));
  ArchitectureSpec one = single_cell(7, 3, 4);
  CHECK(nn_density(one) == cell_density(one.cells[0]));
  ArchitectureSpec none;
  none.cells = {{5, 3, 0}, {8, 2, 0}};
  CHECK(nn_density(none) == 0.0);
}

TEST_CASE("reference architecture has mass exactly 28") {
  CHECK(nn_mass(reference_arch()) == 28.0);
}

TEST_CASE("zero budgets give zero mass") {
  ArchitectureSpec spec;
  spec.cells = {{5, 3, 0}, {8, 2, 0}, {3, 9, 0}};
  CHECK(nn_mass(spec) == 0.0);
}

TEST_CASE("single wide cell matches the hand-computed value") {
  auto spec = single_cell(16, 8, 10);
  CHECK(nn_mass(spec) == doctest::Approx(4416.0 / 210.0).epsilon(1e-15));
}

TEST_CASE("mass identity against per-cell densities") {
  Rng rng(2024);
  for (int round = 0; round < 50; ++round) {
    ArchitectureSpec spec;
    int n_cells = 1 + static_cast<int>(rng.below(4));
    for (int c = 0; c < n_cells; ++c) {
      int d = 3 + static_cast<int>(rng.below(30));
      int w = 1 + static_cast<int>(rng.below(16));
      int t = static_cast<int>(rng.below(static_cast<uint64_t>(w * (d - 2) + 6)));
      spec.cells.push_back({d, w, t});
    }
    double direct = nn_mass(spec);
    double via_density = 0.0;
    for (const auto& cell : spec.cells)
      via_density += static_cast<double>(cell.width) * cell.depth * cell_density(cell);
    CHECK(direct == doctest::Approx(via_density).epsilon(1e-12));
  }
}

TEST_CASE("mass is non-decreasing in each budget") {
  Rng rng(77);
  for (int round = 0; round < 30; ++round) {
    int d = 3 + static_cast<int>(rng.below(20));
    int w = 1 + static_cast<int>(rng.below(8));
    double prev = -1.0;
    for (int t = 0; t <= w * (d - 2) + 3; ++t) {
      double m = nn_mass(single_cell(d, w, t));
      CHECK(m >= prev);
      prev = m;
    }
  }
}

TEST_CASE("mass saturates at w*d once the budget covers every pool") {
  for (int d : {3, 5, 12}) {
    for (int w : {1, 4, 7}) {
      int sat = w * (d - 2);
      double at = nn_mass(single_cell(d, w, sat));
      CHECK(at == doctest::Approx(static_cast<double>(w) * d).epsilon(1e-15));
      CHECK(nn_mass(single_cell(d, w, sat + 9)) == at);
    }
  }
}

TEST_CASE("closed form for budgets between w and 2w") {
  Rng rng(4040);
  for (int round = 0; round < 100; ++round) {
    int d = 3 + static_cast<int>(rng.below(40));
    int w = 1 + static_cast<int>(rng.below(20));
    int t = w + static_cast<int>(rng.below(static_cast<uint64_t>(w + 1)));
    double generic = nn_mass(single_cell(d, w, t));
    double closed = 2.0 * d * (w + static_cast<double>(d - 3) * t) /
                    (static_cast<double>(d - 1) * (d - 2));
    CHECK(generic == doctest::Approx(closed).epsilon(1e-12));
  }
}

TEST_CASE("average degree closed forms") {
  auto zero = single_cell(10, 6, 0);
  auto [est0, exact0] = avg_degree(zero);
  CHECK(est0 == 6.0);
  CHECK(exact0 == 0.0);

  auto spec = single_cell(16, 8, 10);
  auto [est, exact] = avg_degree(spec);
  double m = nn_mass(spec);
  CHECK(est == doctest::Approx(8.0 + m / 2.0).epsilon(1e-15));
  CHECK(exact == doctest::Approx(138.0 / 16.0).epsilon(1e-15));
  // The two forms differ by exactly (d-1)(d-2)/d^2.
  CHECK(exact / (m / 2.0) == doctest::Approx(15.0 * 14.0 / 256.0).epsilon(1e-12));

  auto big = single_cell(64, 16, 23);
  auto [est64, exact64] = avg_degree(big);
  double m64 = nn_mass(big);
  CHECK(est64 == doctest::Approx(16.0 + m64 / 2.0).epsilon(1e-15));
  CHECK(exact64 / (m64 / 2.0) ==
        doctest::Approx(63.0 * 62.0 / 4096.0).epsilon(1e-12));
}

TEST_CASE("realizations respect list sizes, ranges and determinism") {
  auto spec = reference_arch();
  auto real_a = realize_topology(spec, 99);
  auto real_b = realize_topology(spec, 99);
  auto real_c = realize_topology(spec, 100);

  REQUIRE(real_a.sources.size() == spec.cells.size());
  bool any_diff = false;
  for (size_t c = 0; c < spec.cells.size(); ++c) {
    const auto& cell = spec.cells[c];
    REQUIRE(real_a.sources[c].size() == static_cast<size_t>(cell.depth));
    CHECK(real_a.sources[c][0].empty());
    CHECK(real_a.sources[c][1].empty());
    for (int i = 2; i < cell.depth; ++i) {
      const auto& list = real_a.sources[c][i];
      size_t expect = static_cast<size_t>(
          std::min<long long>(static_cast<long long>(cell.width) * (i - 1),
                              cell.shortcut_budget));
      CHECK(list.size() == expect);
      CHECK(std::is_sorted(list.begin(), list.end()));
      std::set<std::pair<int, int>> seen;
      for (const auto& src : list) {
        CHECK(src.layer >= 0);
        CHECK(src.layer <= i - 2);
        CHECK(src.unit >= 0);
        CHECK(src.unit < cell.width);
        seen.insert({src.layer, src.unit});
      }
      CHECK(seen.size() == list.size());
      CHECK(real_b.sources[c][i] == list);
      if (real_c.sources[c][i] != list) any_diff = true;
    }
  }
  CHECK(any_diff);
}

TEST_CASE("saturated budgets select the whole candidate pool") {
  auto spec = single_cell(6, 3, 1000);
  auto real = realize_topology(spec, 5);
  for (int i = 2; i < 6; ++i)
    CHECK(real.sources[0][i].size() == static_cast<size_t>(3 * (i - 1)));
}

TEST_CASE("link-count oracle agrees with the closed form") {
  auto spec = single_cell(4, 2, 3);
  auto real = realize_topology(spec, 17);
  auto counted = count_links_oracle(real);
  CHECK(counted.total == 10);

  ArchitectureSpec empty;
  empty.cells = {{7, 4, 0}};
  auto zero = count_links_oracle(realize_topology(empty, 1));
  CHECK(zero.total == 0);
  for (long long v : zero.per_layer) CHECK(v == 0);
}

TEST_CASE("density equals realized over possible links for random specs") {
  Rng rng(31337);
  for (int round = 0; round < 200; ++round) {
    int d = 3 + static_cast<int>(rng.below(62));
    int w = 1 + static_cast<int>(rng.below(32));
    int t = static_cast<int>(rng.below(static_cast<uint64_t>(w * (d - 2) + 6)));
    CellSpec cell{d, w, t};
    auto spec = single_cell(d, w, t);
    auto real = realize_topology(spec, rng.next_u64());
    auto counted = count_links_oracle(real);
    long long possible = total_possible_links(cell);

    // Exact integer cross-multiplication: total/possible == num/den.
    auto ratio = testsupport::density_ratio(cell);
    CHECK(static_cast<__int128>(counted.total) * ratio.den ==
          static_cast<__int128>(ratio.num) * possible);
    double density = cell_density(cell);
    double realized_ratio =
        static_cast<double>(counted.total) / static_cast<double>(possible);
    CHECK(density == doctest::Approx(realized_ratio).epsilon(1e-12));
  }
}

TEST_CASE("every target unit sees exactly the prescribed in-degree") {
  Rng rng(555);
  for (int round = 0; round < 20; ++round) {
    int d = 3 + static_cast<int>(rng.below(12));
    int w = 1 + static_cast<int>(rng.below(6));
    int t = static_cast<int>(rng.below(static_cast<uint64_t>(w * (d - 2) + 3)));
    auto real = realize_topology(single_cell(d, w, t), rng.next_u64());
    for (int i = 2; i < d; ++i) {
      long long expect = std::min<long long>(static_cast<long long>(w) * (i - 1), t);
      // Every unit of layer i receives one edge per selected source.
      CHECK(static_cast<long long>(real.sources[0][i].size()) == expect);
    }
  }
}

TEST_CASE("mass report is consistent with the scalar operations") {
  auto spec = reference_arch();
  auto report = mass_report(spec);
  REQUIRE(report.per_cell_density.size() == 3);
  CHECK(report.per_cell_density[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(report.per_cell_density[1] == doctest::Approx(7.0 / 9.0).epsilon(1e-15));
  CHECK(report.per_cell_density[2] == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
  CHECK(report.nn_density == nn_density(spec));
  CHECK(report.nn_mass == 28.0);
  auto [est, exact] = avg_degree(spec);
  CHECK(report.avg_degree_estimate == est);
  CHECK(report.avg_degree_exact_longrange == exact);

  auto j = mass_report_to_json(report);
  CHECK(j.at("nn_mass").get<double>() == 28.0);
  CHECK(j.at("per_cell_density").size() == 3);
  CHECK(j.contains("nn_density"));
  CHECK(j.contains("avg_degree_estimate"));
  CHECK(j.contains("avg_degree_exact_longrange"));
}

TEST_CASE("spec validation rejects degenerate cells") {
  CellSpec bad{2, 4, 1};
  CHECK_THROWS_AS(validate(bad), DegenerateCellError);
  CellSpec shallow_ok{2, 4, 0};
  CHECK_NOTHROW(validate(shallow_ok));
  ArchitectureSpec empty;
  CHECK_THROWS_AS(validate(empty), nnmass::Error);
}

TEST_CASE("architecture JSON round-trips") {
  auto spec = reference_arch();
  auto j = arch_to_json(spec);
  auto back = arch_from_json(j);
  CHECK(back == spec);
  CHECK(j.at("cells").size() == 3);
  CHECK(j.at("cells")[0].at("depth") == 4);
  CHECK(j.at("cells")[0].at("width") == 2);
  CHECK(j.at("cells")[0].at("shortcut_budget") == 3);
  CHECK(j.at("activation") == "relu");
  CHECK(j.at("input_dim") == 2);
  CHECK(j.at("output_dim") == 2);
}
