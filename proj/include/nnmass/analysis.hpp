#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnmass/arch.hpp"
#include "nnmass/network.hpp"

namespace nnmass {

// Exact trainable-parameter count: input projection, every fully-connected
// layer (shortcut columns included), biases, and the output head.
long long param_count(const ArchitectureSpec& spec);

// 2 x multiply-accumulates of one forward pass through the projection and
// cell layers; biases and the classifier head excluded.
long long flop_count(const ArchitectureSpec& spec);

struct DatasetRef {
  std::string kind = "circle";  // circle | seg | idx
  int param = 20;               // rings or segments
  int train_samples = 60000;
  int test_samples = 12000;
  // idx file paths, used only when kind == "idx"
  std::string train_images, train_labels, test_images, test_labels;
};

struct SweepGrid {
  std::vector<int> widths;
  std::vector<int> depths;
  std::vector<int> budgets;
  int repeats = 1;
  TrainConfig hyper;
  DatasetRef dataset;
  Activation activation = Activation::relu;
  uint64_t master_seed = 0;
  int probe_count = 16;
};

SweepGrid grid_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const SweepGrid& grid);

// Train/test pair for a dataset reference; synthetic sets derive their seeds
// from the master seed, idx sets load the referenced files.
std::pair<Dataset, Dataset> load_dataset_pair(const DatasetRef& ref, uint64_t master_seed);

// Built-in grids: "desk" is sized to run on one workstation in minutes,
// "full" mirrors the 5-depth x 15-budget x 5-repeat protocol.
SweepGrid desk_grid();
SweepGrid full_grid();

struct SweepRow {
  int depth = 0, width = 0, budget = 0;
  uint64_t seed = 0;  // repeat index; per-job streams derive from the master seed
  double nn_mass = 0.0, nn_density = 0.0;
  long long param_count = 0, flop_count = 0;
  double test_acc = 0.0, train_loss = 0.0, mean_init_sv = 0.0;
  bool diverged = false;
};

// One row per (config, repeat), ordered by (config index, repeat index) no
// matter how jobs were scheduled. `on_row` fires in that order as rows become
// final, so output can stream. A diverged training marks its row instead of
// aborting the sweep.
std::vector<SweepRow> run_sweep(const SweepGrid& grid, int parallelism,
                                const std::function<void(const SweepRow&)>& on_row = nullptr);

void write_sweep_header(std::ostream& out);
void write_sweep_row(const SweepRow& row, std::ostream& out);

// All-numeric CSV with a header row, e.g. a sweep output read back for fits.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv_numeric(const std::string& path);

enum class XTransform { identity, log_x };

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  XTransform x_transform = XTransform::identity;
};

// Ordinary least squares of y on T(x); R^2 = 1 - SS_res/SS_tot.
LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                     XTransform transform);

// slope * log(m) + intercept for each mass; requires a log-x fit.
std::vector<double> predict_accuracy(const LinearFit& fit,
                                     const std::vector<double>& nn_mass_values);

}  // namespace nnmass
