#include "nnmass/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnmass/analysis.hpp"
#include "nnmass/arch.hpp"
#include "nnmass/datasets.hpp"
#include "nnmass/design.hpp"
#include "nnmass/error.hpp"
#include "nnmass/format.hpp"
#include "nnmass/network.hpp"
#include "nnmass/randmat.hpp"
#include "nnmass/rng.hpp"
#include "nnmass/topology.hpp"

namespace nnmass::cli {

namespace {

// "a:b:c" = begin:end:step with end exclusive; a bare number is a single mass.
std::vector<double> parse_mass_grid(const std::string& text) {
  std::vector<double> masses;
  auto first = text.find(':');
  if (first == std::string::npos) {
    masses.push_back(std::stod(text));
    return masses;
  }
  auto second = text.find(':', first + 1);
  if (second == std::string::npos)
    throw RangeError("mass grid must be begin:end:step", text);
  double begin = std::stod(text.substr(0, first));
  double end = std::stod(text.substr(first + 1, second - first - 1));
  double step = std::stod(text.substr(second + 1));
  if (!(step > 0.0)) throw RangeError("mass grid step must be positive", text);
  for (double m = begin; m < end; m += step) masses.push_back(m);
  if (masses.empty()) throw RangeError("mass grid is empty", text);
  return masses;
}

// "4x2,4x3,4x4" = comma-separated depth x width pairs.
std::vector<CellGeometry> parse_cells(const std::string& text) {
  std::vector<CellGeometry> cells;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto x = item.find('x');
    if (x == std::string::npos)
      throw RangeError("cell geometry must be DEPTHxWIDTH", item);
    CellGeometry cell;
    cell.depth = std::stoi(item.substr(0, x));
    cell.width = std::stoi(item.substr(x + 1));
    cells.push_back(cell);
  }
  if (cells.empty()) throw RangeError("no cells given");
  return cells;
}

void emit_json(const nlohmann::json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << j.dump(2) << "\n";
  } else {
    std::ofstream file(out_path);
    if (!file) throw FormatError("cannot write output file", out_path);
    file << j.dump(2) << "\n";
  }
}

struct DatasetFlags {
  std::string kind = "circle";
  int param = 20;
  int train_samples = 60000;
  int test_samples = 12000;
  std::string train_images, train_labels, test_images, test_labels;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", kind, "Dataset kind: circle, seg or idx")
        ->check(CLI::IsMember({"circle", "seg", "idx"}));
    cmd->add_option("--param", param, "Ring/segment count for synthetic data");
    cmd->add_option("--train-samples", train_samples, "Synthetic training set size");
    cmd->add_option("--test-samples", test_samples, "Synthetic test set size");
    cmd->add_option("--train-images", train_images, "IDX training images");
    cmd->add_option("--train-labels", train_labels, "IDX training labels");
    cmd->add_option("--test-images", test_images, "IDX test images");
    cmd->add_option("--test-labels", test_labels, "IDX test labels");
  }

  DatasetRef ref() const {
    DatasetRef r;
    r.kind = kind;
    r.param = param;
    r.train_samples = train_samples;
    r.test_samples = test_samples;
    r.train_images = train_images;
    r.train_labels = train_labels;
    r.test_images = test_images;
    r.test_labels = test_labels;
    return r;
  }
};

nlohmann::json ldi_report_json(const MlpModel& model, const JacobianReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : report.layers)
    layers.push_back({{"layer", layer.layer},
                      {"rows", layer.rows},
                      {"cols", layer.cols},
                      {"mean_sv", layer.mean_sv}});
  return {{"layers", layers},
          {"summary_mean_sv", report.summary_mean_sv},
          {"nn_mass", nn_mass(model.spec)}};
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed-form topology metrics, Jacobian simulations and training-free design"};
  app.name("nnmass");
  app.require_subcommand(1);

  // --- mass ---------------------------------------------------------------
  auto* mass_cmd = app.add_subcommand("mass", "Density/mass/degree report for an architecture");
  std::string mass_arch, mass_out;
  mass_cmd->add_option("--arch", mass_arch, "Architecture JSON file")->required();
  mass_cmd->add_option("--out", mass_out, "Write the report JSON here instead of stdout");
  mass_cmd->callback([&] {
    MassReport report = mass_report(load_arch(mass_arch));
    emit_json(mass_report_to_json(report), mass_out, out);
  });

  // --- degree ---------------------------------------------------------------
  auto* degree_cmd = app.add_subcommand("degree", "Average-degree figures only");
  std::string degree_arch, degree_out;
  degree_cmd->add_option("--arch", degree_arch, "Architecture JSON file")->required();
  degree_cmd->add_option("--out", degree_out, "Output file (default stdout)");
  degree_cmd->callback([&] {
    MassReport report = mass_report(load_arch(degree_arch));
    emit_json({{"avg_degree_estimate", report.avg_degree_estimate},
               {"avg_degree_exact_longrange", report.avg_degree_exact_longrange},
               {"per_cell_degree_estimate", report.per_cell_degree_estimate},
               {"per_cell_degree_exact_longrange", report.per_cell_degree_exact_longrange},
               {"nn_mass", report.nn_mass}},
              degree_out, out);
  });

  // --- realize ---------------------------------------------------------------
  auto* realize_cmd = app.add_subcommand("realize", "Draw the long-range wiring for a seed");
  std::string realize_arch, realize_out;
  uint64_t realize_seed = 0;
  realize_cmd->add_option("--arch", realize_arch, "Architecture JSON file")->required();
  realize_cmd->add_option("--seed", realize_seed, "Realization seed")->required();
  realize_cmd->add_option("--out", realize_out, "Output file (default stdout)");
  realize_cmd->callback([&] {
    TopologyRealization real = realize_topology(load_arch(realize_arch), realize_seed);
    emit_json(realization_to_json(real), realize_out, out);
  });

  // --- simulate-sv ---------------------------------------------------------------
  auto* sv_cmd = app.add_subcommand("simulate-sv",
                                    "Mean singular values of Gaussian matrices sized by mass");
  int sv_width = 8, sv_trials = 50;
  double sv_variance = 1.0;
  uint64_t sv_seed = 0;
  std::string sv_mass, sv_out;
  sv_cmd->add_option("--width", sv_width, "Matrix column count w")->required();
  sv_cmd->add_option("--mass", sv_mass, "Mass grid begin:end:step (end exclusive) or one value")
      ->required();
  sv_cmd->add_option("--trials", sv_trials, "Trials per mass")->required();
  sv_cmd->add_option("--seed", sv_seed, "Simulation seed")->required();
  sv_cmd->add_option("--variance", sv_variance, "Entry variance (default 1)");
  sv_cmd->add_option("--out", sv_out, "CSV output path")->required();
  sv_cmd->callback([&] {
    std::ofstream csv(sv_out);
    if (!csv) throw FormatError("cannot write CSV file", sv_out);
    csv << "width,mass,matrix_rows,trials,mean_sv,stddev_sv\n" << std::flush;
    simulate_mass_sweep(sv_width, parse_mass_grid(sv_mass), sv_trials, sv_variance, sv_seed,
                        [&](const SimSweepRow& row) {
                          csv << row.width << "," << format_double(row.mass) << ","
                              << row.matrix_rows << "," << row.trials << ","
                              << format_double(row.mean_sv) << ","
                              << format_double(row.stddev_sv) << "\n"
                              << std::flush;
                        });
  });

  // --- gen-data ---------------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV");
  std::string gen_kind, gen_out;
  int gen_param = 20, gen_samples = 60000;
  uint64_t gen_seed = 0;
  gen_cmd->add_option("--kind", gen_kind, "seg or circle")
      ->required()
      ->check(CLI::IsMember({"seg", "circle"}));
  gen_cmd->add_option("--param", gen_param, "Segment/ring count")->required();
  gen_cmd->add_option("--samples", gen_samples, "Sample count")->required();
  gen_cmd->add_option("--seed", gen_seed, "Generation seed")->required();
  gen_cmd->add_option("--out", gen_out, "CSV output path")->required();
  gen_cmd->callback([&] {
    Dataset data = gen_kind == "seg" ? gen_seg(gen_param, gen_samples, gen_seed)
                                     : gen_circle(gen_param, gen_samples, gen_seed);
    std::ofstream csv(gen_out);
    if (!csv) throw FormatError("cannot write CSV file", gen_out);
    write_dataset_csv(data, csv);
    emit_json({{"kind", gen_kind},
               {"param", gen_param},
               {"samples", gen_samples},
               {"out", gen_out}},
              "", out);
  });

  // --- load-idx ---------------------------------------------------------------
  auto* idx_cmd = app.add_subcommand("load-idx", "Parse an IDX image/label pair");
  std::string idx_images, idx_labels, idx_out;
  idx_cmd->add_option("--images", idx_images, "IDX image file")->required();
  idx_cmd->add_option("--labels", idx_labels, "IDX label file")->required();
  idx_cmd->add_option("--out", idx_out, "Optional CSV export path");
  idx_cmd->callback([&] {
    Dataset data = load_idx(idx_images, idx_labels);
    if (!idx_out.empty()) {
      std::ofstream csv(idx_out);
      if (!csv) throw FormatError("cannot write CSV file", idx_out);
      write_dataset_csv(data, csv);
    }
    std::vector<int> histogram(10, 0);
    for (int label : data.labels) ++histogram[label];
    emit_json({{"count", data.size()},
               {"feature_dim", data.feature_dim()},
               {"image_rows", data.image_rows},
               {"image_cols", data.image_cols},
               {"label_histogram", histogram}},
              "", out);
  });

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "SGD-train one architecture");
  std::string train_arch, train_out, train_checkpoint;
  uint64_t train_seed = 0;
  TrainConfig train_config;
  DatasetFlags train_data;
  train_cmd->add_option("--arch", train_arch, "Architecture JSON file")->required();
  train_cmd->add_option("--seed", train_seed, "Master seed (topology/init/data order)")->required();
  train_cmd->add_option("--epochs", train_config.epochs, "Training epochs")->required();
  train_cmd->add_option("--batch-size", train_config.batch_size, "Minibatch size (default 128)");
  train_cmd->add_option("--lr0", train_config.lr0, "Initial learning rate (default 0.05)");
  train_cmd->add_option("--out", train_out, "Per-epoch trace CSV path");
  train_cmd->add_option("--checkpoint", train_checkpoint, "Write the trained model here");
  train_data.attach(train_cmd);
  train_cmd->callback([&] {
    ArchitectureSpec spec = load_arch(train_arch);
    auto [train_set, test_set] = load_dataset_pair(train_data.ref(), train_seed);
    if (spec.input_dim != train_set.feature_dim() || spec.output_dim < train_set.n_classes)
      throw ShapeError("architecture dims do not fit the dataset",
                       "need input_dim " + std::to_string(train_set.feature_dim()) +
                           ", output_dim >= " + std::to_string(train_set.n_classes));
    MlpModel model = build_model(spec, Rng::mix_key(train_seed, {0}), Rng::mix_key(train_seed, {1}),
                                 InitScheme::for_activation(spec.activation));
    train_config.data_seed = Rng::mix_key(train_seed, {2});
    TrainTrace trace = train(model, train_set, test_set, train_config);
    if (!train_out.empty()) {
      std::ofstream csv(train_out);
      if (!csv) throw FormatError("cannot write CSV file", train_out);
      write_trace_csv(trace, csv);
    }
    if (!train_checkpoint.empty()) save_model(model, train_checkpoint);
    const auto& last = trace.epochs.back();
    emit_json({{"epochs", static_cast<int>(trace.epochs.size())},
               {"final_train_loss", last.train_loss},
               {"final_train_acc", last.train_acc},
               {"final_test_acc", last.test_acc},
               {"nn_mass", nn_mass(spec)},
               {"param_count", param_count(spec)}},
              "", out);
  });

  // --- ldi ---------------------------------------------------------------
  auto* ldi_cmd = app.add_subcommand("ldi", "Layerwise Jacobian spectrum report at initialization");
  std::string ldi_arch, ldi_out;
  uint64_t ldi_seed = 0;
  int ldi_probes = 16;
  ldi_cmd->add_option("--arch", ldi_arch, "Architecture JSON file")->required();
  ldi_cmd->add_option("--seed", ldi_seed, "Master seed (topology/init/probes)")->required();
  ldi_cmd->add_option("--probes", ldi_probes, "Probe sample count (default 16)");
  ldi_cmd->add_option("--out", ldi_out, "Output file (default stdout)");
  ldi_cmd->callback([&] {
    ArchitectureSpec spec = load_arch(ldi_arch);
    MlpModel model = build_model(spec, Rng::mix_key(ldi_seed, {0}), Rng::mix_key(ldi_seed, {1}),
                                 InitScheme::for_activation(spec.activation),
                                 ModelPurpose::jacobian_experiment);
    Matrix probes = gaussian_probes(ldi_probes, spec.input_dim, Rng::mix_key(ldi_seed, {2}));
    emit_json(ldi_report_json(model, ldi_report(model, probes)), ldi_out, out);
  });

  // --- sweep ---------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "Train a depth/width/budget grid and emit rows");
  std::string sweep_grid = "desk", sweep_out;
  uint64_t sweep_seed = 0;
  int sweep_jobs = 1;
  DatasetFlags sweep_data_flags;
  bool sweep_data_given = false;
  sweep_cmd->add_option("--grid", sweep_grid, "Grid JSON path, or preset name desk|full");
  sweep_cmd->add_option("--seed", sweep_seed, "Master seed")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "Concurrent trainings (default 1)");
  sweep_cmd->add_option("--out", sweep_out, "CSV output path")->required();
  auto* ds_opt = sweep_cmd->add_flag("--override-dataset", sweep_data_given,
                                     "Replace the grid's dataset with the --dataset flags");
  sweep_data_flags.attach(sweep_cmd);
  (void)ds_opt;
  sweep_cmd->callback([&] {
    SweepGrid grid;
    if (sweep_grid == "desk") {
      grid = desk_grid();
    } else if (sweep_grid == "full") {
      grid = full_grid();
    } else {
      std::ifstream in(sweep_grid);
      if (!in) throw FormatError("cannot open grid JSON", sweep_grid);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("grid JSON parse failure: ") + e.what(), sweep_grid);
      }
      grid = grid_from_json(j);
    }
    grid.master_seed = sweep_seed;
    if (sweep_data_given) grid.dataset = sweep_data_flags.ref();
    std::ofstream csv(sweep_out);
    if (!csv) throw FormatError("cannot write CSV file", sweep_out);
    write_sweep_header(csv);
    csv << std::flush;
    run_sweep(grid, sweep_jobs, [&](const SweepRow& row) {
      write_sweep_row(row, csv);
      csv << std::flush;
    });
  });

  // --- fit ---------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "Least-squares line over two CSV columns");
  std::string fit_csv, fit_x, fit_y, fit_out;
  bool fit_log_x = false, fit_per_repeat = false;
  fit_cmd->add_option("--csv", fit_csv, "Input CSV (e.g. a sweep output)")->required();
  fit_cmd->add_option("--x", fit_x, "X column name")->required();
  fit_cmd->add_option("--y", fit_y, "Y column name")->required();
  fit_cmd->add_flag("--log-x", fit_log_x, "Fit against log(x)");
  fit_cmd->add_flag("--per-repeat", fit_per_repeat,
                    "Fit raw rows instead of averaging repeats per config");
  fit_cmd->add_option("--out", fit_out, "Output file (default stdout)");
  fit_cmd->callback([&] {
    CsvTable table = read_csv_numeric(fit_csv);
    auto column = [&](const std::string& name) {
      for (size_t i = 0; i < table.columns.size(); ++i)
        if (table.columns[i] == name) return i;
      throw FormatError("CSV has no column \"" + name + "\"", fit_csv);
    };
    size_t xi = column(fit_x), yi = column(fit_y);
    std::vector<double> xs, ys;
    bool grouped = false;
    if (!fit_per_repeat) {
      // Config identity = (depth, width, budget) when present; repeats of the
      // same config are averaged before fitting.
      std::vector<size_t> keys;
      for (const char* name : {"depth", "width", "budget"})
        for (size_t i = 0; i < table.columns.size(); ++i)
          if (table.columns[i] == name) keys.push_back(i);
      if (keys.size() == 3) {
        grouped = true;
        std::map<std::vector<double>, std::pair<std::vector<double>, std::vector<double>>> groups;
        for (const auto& row : table.rows) {
          std::vector<double> key = {row[keys[0]], row[keys[1]], row[keys[2]]};
          groups[key].first.push_back(row[xi]);
          groups[key].second.push_back(row[yi]);
        }
        for (const auto& [key, vals] : groups) {
          double sx = 0.0, sy = 0.0;
          for (double v : vals.first) sx += v;
          for (double v : vals.second) sy += v;
          xs.push_back(sx / vals.first.size());
          ys.push_back(sy / vals.second.size());
        }
      }
    }
    if (!grouped) {
      for (const auto& row : table.rows) {
        xs.push_back(row[xi]);
        ys.push_back(row[yi]);
      }
    }
    LinearFit fit = linear_fit(xs, ys, fit_log_x ? XTransform::log_x : XTransform::identity);
    emit_json({{"slope", fit.slope},
               {"intercept", fit.intercept},
               {"r_squared", fit.r_squared},
               {"n_points", static_cast<int>(xs.size())},
               {"x", fit_x},
               {"y", fit_y},
               {"log_x", fit_log_x},
               {"averaged_repeats", grouped}},
              fit_out, out);
  });

  // --- design ---------------------------------------------------------------
  auto* design_cmd = app.add_subcommand("design", "Find budgets hitting a target mass");
  std::string design_cells, design_out, design_act = "relu";
  double design_target = 0.0, design_tol = 0.0;
  long long design_max_params = -1;
  int design_in = 2, design_out_dim = 2;
  design_cmd->add_option("--target-mass", design_target, "Target mass")->required();
  design_cmd->add_option("--cells", design_cells, "Geometries DEPTHxWIDTH,comma-separated")
      ->required();
  design_cmd->add_option("--tol", design_tol, "Relative tolerance (default 0)");
  design_cmd->add_option("--max-params", design_max_params, "Upper parameter bound");
  design_cmd->add_option("--activation", design_act, "Activation for the emitted spec");
  design_cmd->add_option("--input-dim", design_in, "Input dim for the emitted spec");
  design_cmd->add_option("--output-dim", design_out_dim, "Output dim for the emitted spec");
  design_cmd->add_option("--out", design_out, "Output file (default stdout)");
  design_cmd->callback([&] {
    DesignQuery q;
    q.target_mass = design_target;
    q.cells = parse_cells(design_cells);
    q.tolerance = design_tol;
    if (design_max_params >= 0) q.max_params = design_max_params;
    q.activation = activation_from_string(design_act);
    q.input_dim = design_in;
    q.output_dim = design_out_dim;
    emit_json(design_result_to_json(design_for_mass(q)), design_out, out);
  });

  // --- compress ---------------------------------------------------------------
  auto* compress_cmd = app.add_subcommand("compress",
                                          "Redesign a reference onto a smaller geometry");
  std::string compress_arch, compress_cells, compress_out;
  double compress_tol = 0.05;
  compress_cmd->add_option("--arch", compress_arch, "Reference architecture JSON")->required();
  compress_cmd->add_option("--cells", compress_cells, "New geometries DEPTHxWIDTH,comma-separated")
      ->required();
  compress_cmd->add_option("--tol", compress_tol, "Mass headroom tolerance (default 0.05)");
  compress_cmd->add_option("--out", compress_out, "Output file (default stdout)");
  compress_cmd->callback([&] {
    ArchitectureSpec reference = load_arch(compress_arch);
    DesignResult result = compress(reference, parse_cells(compress_cells), compress_tol);
    emit_json(design_result_to_json(result), compress_out, out);
  });

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("nnmass");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    nlohmann::json j = {{"code", e.code()}, {"message", e.what()}, {"context", e.context()}};
    err << j.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json j = {{"code", "internal"}, {"message", e.what()}, {"context", ""}};
    err << j.dump() << "\n";
    return 1;
  }
}

}  // namespace nnmass::cli
