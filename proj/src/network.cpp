#include "nnmass/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "nnmass/error.hpp"
#include "nnmass/format.hpp"
#include "nnmass/instrumentation.hpp"
#include "nnmass/rng.hpp"

namespace nnmass {

InitScheme InitScheme::for_activation(Activation a) {
  InitScheme init;
  init.gain = (a == Activation::relu) ? 2.0 : 1.0;
  return init;
}

namespace {

void ensure_shape(Matrix& m, int rows, int cols);

// out = x * w^T + bias;  x: (n,k), w: (m,k), out: (n,m).
// The weight matrix is transposed into a per-thread scratch once per call so
// the inner loop runs across output units over contiguous memory, which the
// compiler turns into vector FMAs. Each output element still accumulates its
// inner product in ascending-k order. The transpose costs m*k against the
// n*m*k of the multiply, so it is negligible for any real batch.
void affine(const Matrix& x, const Matrix& w, const std::vector<double>& bias, Matrix& out) {
  const int k_max = x.cols;
  const int m = w.rows;

  thread_local Matrix wt;
  ensure_shape(wt, k_max, m);
  for (int j = 0; j < m; ++j) {
    const double* wj = w.row(j);
    for (int k = 0; k < k_max; ++k) wt(k, j) = wj[k];
  }

  int i = 0;
  for (; i + 2 <= x.rows; i += 2) {
    const double* __restrict x0 = x.row(i);
    const double* __restrict x1 = x.row(i + 1);
    double* __restrict o0 = out.row(i);
    double* __restrict o1 = out.row(i + 1);
    std::copy(bias.begin(), bias.end(), o0);
    std::copy(bias.begin(), bias.end(), o1);
    const double* __restrict wk = wt.row(0);
    for (int k = 0; k < k_max; ++k, wk += m) {
      const double a = x0[k];
      const double b = x1[k];
      for (int j = 0; j < m; ++j) {
        o0[j] += a * wk[j];
        o1[j] += b * wk[j];
      }
    }
  }
  if (i < x.rows) {
    const double* __restrict xi = x.row(i);
    double* __restrict oi = out.row(i);
    std::copy(bias.begin(), bias.end(), oi);
    const double* __restrict wk = wt.row(0);
    for (int k = 0; k < k_max; ++k, wk += m) {
      const double xk = xi[k];
      for (int j = 0; j < m; ++j) oi[j] += xk * wk[j];
    }
  }
}

// gw += g^T * x;  g: (n,m), x: (n,k), gw: (m,k).
// Samples are consumed in pairs so each gw row is loaded and stored once per
// pair instead of once per sample. Per element, contributions are still added
// in ascending sample order, so the result matches the plain loop exactly.
void accumulate_weight_grad(const Matrix& g, const Matrix& x, Matrix& gw) {
  const int k_max = x.cols;
  int i = 0;
  for (; i + 2 <= g.rows; i += 2) {
    const double* x0 = x.row(i);
    const double* x1 = x.row(i + 1);
    const double* g0 = g.row(i);
    const double* g1 = g.row(i + 1);
    for (int j = 0; j < g.cols; ++j) {
      const double a = g0[j];
      const double b = g1[j];
      double* wj = gw.row(j);
      if (a != 0.0 && b != 0.0) {
        for (int k = 0; k < k_max; ++k) {
          double v = wj[k];
          v += a * x0[k];
          v += b * x1[k];
          wj[k] = v;
        }
      } else if (a != 0.0) {
        for (int k = 0; k < k_max; ++k) wj[k] += a * x0[k];
      } else if (b != 0.0) {
        for (int k = 0; k < k_max; ++k) wj[k] += b * x1[k];
      }
    }
  }
  for (; i < g.rows; ++i) {
    const double* xi = x.row(i);
    const double* gi = g.row(i);
    for (int j = 0; j < g.cols; ++j) {
      double gj = gi[j];
      if (gj == 0.0) continue;
      double* wj = gw.row(j);
      for (int k = 0; k < k_max; ++k) wj[k] += gj * xi[k];
    }
  }
}

// dx = g * w;  g: (n,m), w: (m,k), dx: (n,k).
// Rows with zero gradient (dead relu units) are compacted away first; the
// surviving rows are applied in pairs so di[k] is loaded and stored once per
// pair. Contributions still land in ascending j order, keeping the rounding
// sequence of the plain loop.
void input_grad(const Matrix& g, const Matrix& w, Matrix& dx) {
  const int k_max = dx.cols;
  for (int i = 0; i < g.rows; ++i) {
    const double* gi = g.row(i);
    double* di = dx.row(i);
    std::fill(di, di + k_max, 0.0);

    double gval[2];
    const double* wrow[2];
    int nz = 0;
    for (int j = 0; j < w.rows; ++j) {
      double gj = gi[j];
      if (gj == 0.0) continue;
      gval[nz] = gj;
      wrow[nz] = w.row(j);
      if (++nz == 2) {
        for (int k = 0; k < k_max; ++k) {
          double v = di[k];
          v += gval[0] * wrow[0][k];
          v += gval[1] * wrow[1][k];
          di[k] = v;
        }
        nz = 0;
      }
    }
    if (nz == 1) {
      for (int k = 0; k < k_max; ++k) di[k] += gval[0] * wrow[0][k];
    }
  }
}

void apply_activation(Activation act, const Matrix& h, Matrix& s) {
  const size_t n = h.data.size();
  switch (act) {
    case Activation::linear:
      std::copy(h.data.begin(), h.data.end(), s.data.begin());
      break;
    case Activation::relu:
      for (size_t i = 0; i < n; ++i) s.data[i] = h.data[i] > 0.0 ? h.data[i] : 0.0;
      break;
    case Activation::elu:
      for (size_t i = 0; i < n; ++i)
        s.data[i] = h.data[i] >= 0.0 ? h.data[i] : std::expm1(h.data[i]);
      break;
  }
}

double activation_derivative(Activation act, double h) {
  switch (act) {
    case Activation::linear: return 1.0;
    case Activation::relu: return h > 0.0 ? 1.0 : 0.0;
    case Activation::elu: return h >= 0.0 ? 1.0 : std::exp(h);
  }
  return 1.0;
}

void ensure_shape(Matrix& m, int rows, int cols) {
  if (m.rows != rows || m.cols != cols) {
    m.rows = rows;
    m.cols = cols;
    m.data.resize(static_cast<size_t>(rows) * cols);
  }
}

// Static wiring shared by build/forward/backward: slot widths plus one
// LayerPlan per fully-connected layer.
void build_plan(const ArchitectureSpec& spec, const TopologyRealization& real,
                std::vector<LayerPlan>& plan, std::vector<int>& slot_width) {
  plan.clear();
  slot_width.clear();
  int base = 0;
  for (size_t c = 0; c < spec.cells.size(); ++c) {
    const CellSpec& cell = spec.cells[c];
    for (int i = 0; i < cell.depth; ++i) {
      int slot = base + i;
      slot_width.push_back(cell.width);
      if (slot == 0) continue;  // slot 0 comes from the input projection
      LayerPlan layer;
      layer.cell = static_cast<int>(c);
      layer.layer = i;
      layer.in_slot = slot - 1;
      layer.out_slot = slot;
      layer.in_width = slot_width[slot - 1];
      layer.out_width = cell.width;
      layer.cell_base_slot = base;
      if (i >= 2) layer.sources = real.sources[c][i];
      plan.push_back(std::move(layer));
    }
    base += cell.depth;
  }
}

void gather_input(const LayerPlan& layer, const std::vector<Matrix>& s, Matrix& x) {
  const Matrix& prev = s[layer.in_slot];
  const int n = prev.rows;
  ensure_shape(x, n, layer.in_cols());
  for (int i = 0; i < n; ++i) {
    const double* pi = prev.row(i);
    double* xi = x.row(i);
    std::copy(pi, pi + layer.in_width, xi);
    int col = layer.in_width;
    for (const SourceUnit& src : layer.sources)
      xi[col++] = s[layer.cell_base_slot + src.layer](i, src.unit);
  }
}

}  // namespace

MlpModel build_model(const ArchitectureSpec& spec, uint64_t topo_seed,
                     uint64_t init_seed, const InitScheme& init, ModelPurpose purpose) {
  validate(spec);
  if (purpose == ModelPurpose::jacobian_experiment && spec.cells.size() != 1)
    throw UnsupportedConfigError("jacobian experiments are defined for single-cell specs",
                                 std::to_string(spec.cells.size()) + " cells");
  if (!(init.gain > 0.0)) throw RangeError("init gain must be positive");

  MlpModel model;
  model.spec = spec;
  model.realization = realize_topology(spec, topo_seed);
  model.init = init;
  model.topo_seed = topo_seed;
  model.init_seed = init_seed;
  build_plan(spec, model.realization, model.plan, model.slot_width);
  instrumentation::count_model_build();

  const int w0 = spec.cells.front().width;
  // Fan-in scaled Gaussians, biases zero. Streams are derived per matrix so
  // the weights of layer k do not depend on the sizes of earlier layers.
  Rng proj_rng = Rng::derive(init_seed, {0});
  model.proj_w = gaussian_matrix(w0, spec.input_dim, std::sqrt(init.gain / spec.input_dim), proj_rng);
  model.proj_b.assign(w0, 0.0);
  model.w.reserve(model.plan.size());
  model.b.reserve(model.plan.size());
  for (size_t l = 0; l < model.plan.size(); ++l) {
    const LayerPlan& layer = model.plan[l];
    Rng rng = Rng::derive(init_seed, {1, l});
    double stddev = std::sqrt(init.gain / layer.in_cols());
    model.w.push_back(gaussian_matrix(layer.out_width, layer.in_cols(), stddev, rng));
    model.b.emplace_back(layer.out_width, 0.0);
  }
  const int w_last = spec.cells.back().width;
  Rng head_rng = Rng::derive(init_seed, {2});
  model.head_w = gaussian_matrix(spec.output_dim, w_last, std::sqrt(init.gain / w_last), head_rng);
  model.head_b.assign(spec.output_dim, 0.0);
  model.version = 1;
  return model;
}

Matrix forward(const MlpModel& model, const Matrix& batch, ForwardCache* cache) {
  if (batch.cols != model.spec.input_dim)
    throw ShapeError("forward: batch has " + std::to_string(batch.cols) +
                     " columns, expected input_dim " + std::to_string(model.spec.input_dim));
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.model_version = model.version;
  c.input = batch;
  const int n_slots = model.n_slots();
  const int n_layers = model.n_layers();
  c.x.resize(n_layers);
  c.h.resize(n_slots);
  c.s.resize(n_slots);

  const Activation act = model.spec.activation;
  ensure_shape(c.h[0], batch.rows, model.slot_width[0]);
  ensure_shape(c.s[0], batch.rows, model.slot_width[0]);
  affine(batch, model.proj_w, model.proj_b, c.h[0]);
  apply_activation(act, c.h[0], c.s[0]);

  for (int l = 0; l < n_layers; ++l) {
    const LayerPlan& layer = model.plan[l];
    gather_input(layer, c.s, c.x[l]);
    ensure_shape(c.h[layer.out_slot], batch.rows, layer.out_width);
    ensure_shape(c.s[layer.out_slot], batch.rows, layer.out_width);
    affine(c.x[l], model.w[l], model.b[l], c.h[layer.out_slot]);
    apply_activation(act, c.h[layer.out_slot], c.s[layer.out_slot]);
  }

  ensure_shape(c.logits, batch.rows, model.spec.output_dim);
  affine(c.s[n_slots - 1], model.head_w, model.head_b, c.logits);
  return c.logits;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                     Matrix* dlogits, int* correct) {
  if (static_cast<int>(labels.size()) != logits.rows)
    throw ShapeError("cross_entropy: label count does not match batch size");
  const int n = logits.rows, classes = logits.cols;
  if (dlogits) ensure_shape(*dlogits, n, classes);
  double loss = 0.0;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    int label = labels[i];
    if (label < 0 || label >= classes)
      throw RangeError("cross_entropy: label outside [0, classes)");
    const double* z = logits.row(i);
    int argmax = 0;
    double zmax = z[0];
    for (int k = 1; k < classes; ++k)
      if (z[k] > zmax) {
        zmax = z[k];
        argmax = k;
      }
    double sum = 0.0;
    for (int k = 0; k < classes; ++k) sum += std::exp(z[k] - zmax);
    loss += std::log(sum) - (z[label] - zmax);
    if (argmax == label) ++hits;
    if (dlogits) {
      double* d = dlogits->row(i);
      for (int k = 0; k < classes; ++k) d[k] = std::exp(z[k] - zmax) / (sum * n);
      d[label] -= 1.0 / n;
    }
  }
  if (correct) *correct = hits;
  return loss / n;
}

namespace {

void zero_like(const Matrix& src, Matrix& dst) {
  ensure_shape(dst, src.rows, src.cols);
  std::fill(dst.data.begin(), dst.data.end(), 0.0);
}

void backward_into(const MlpModel& model, const ForwardCache& cache, const Matrix& dlogits,
                   Gradients& grads) {
  if (cache.model_version != model.version)
    throw StateError("backward: forward cache is stale for this model version");
  if (dlogits.rows != cache.logits.rows || dlogits.cols != cache.logits.cols)
    throw ShapeError("backward: logit gradient shape mismatch");

  const Activation act = model.spec.activation;
  const int n = cache.input.rows;
  const int n_slots = model.n_slots();

  zero_like(model.proj_w, grads.proj_w);
  grads.proj_b.assign(model.proj_b.size(), 0.0);
  grads.w.resize(model.w.size());
  grads.b.resize(model.b.size());
  for (size_t l = 0; l < model.w.size(); ++l) {
    zero_like(model.w[l], grads.w[l]);
    grads.b[l].assign(model.b[l].size(), 0.0);
  }
  zero_like(model.head_w, grads.head_w);
  grads.head_b.assign(model.head_b.size(), 0.0);

  // d(loss)/d(s) per slot, accumulated as gradient flows back through both
  // the chain edges and the long-range edges.
  std::vector<Matrix> ds(n_slots);
  for (int sl = 0; sl < n_slots; ++sl) {
    ensure_shape(ds[sl], n, model.slot_width[sl]);
    std::fill(ds[sl].data.begin(), ds[sl].data.end(), 0.0);
  }

  accumulate_weight_grad(dlogits, cache.s[n_slots - 1], grads.head_w);
  for (int i = 0; i < n; ++i) {
    const double* d = dlogits.row(i);
    for (int k = 0; k < dlogits.cols; ++k) grads.head_b[k] += d[k];
  }
  input_grad(dlogits, model.head_w, ds[n_slots - 1]);

  Matrix dh, dx;
  for (int l = model.n_layers() - 1; l >= 0; --l) {
    const LayerPlan& layer = model.plan[l];
    const Matrix& h = cache.h[layer.out_slot];
    ensure_shape(dh, n, layer.out_width);
    for (size_t i = 0; i < dh.data.size(); ++i)
      dh.data[i] = ds[layer.out_slot].data[i] * activation_derivative(act, h.data[i]);

    accumulate_weight_grad(dh, cache.x[l], grads.w[l]);
    for (int i = 0; i < n; ++i) {
      const double* d = dh.row(i);
      for (int k = 0; k < layer.out_width; ++k) grads.b[l][k] += d[k];
    }

    ensure_shape(dx, n, layer.in_cols());
    input_grad(dh, model.w[l], dx);
    Matrix& prev = ds[layer.in_slot];
    for (int i = 0; i < n; ++i) {
      const double* di = dx.row(i);
      double* pi = prev.row(i);
      for (int k = 0; k < layer.in_width; ++k) pi[k] += di[k];
      int col = layer.in_width;
      for (const SourceUnit& src : layer.sources)
        ds[layer.cell_base_slot + src.layer](i, src.unit) += di[col++];
    }
  }

  const Matrix& h0 = cache.h[0];
  ensure_shape(dh, n, model.slot_width[0]);
  for (size_t i = 0; i < dh.data.size(); ++i)
    dh.data[i] = ds[0].data[i] * activation_derivative(act, h0.data[i]);
  accumulate_weight_grad(dh, cache.input, grads.proj_w);
  for (int i = 0; i < n; ++i) {
    const double* d = dh.row(i);
    for (int k = 0; k < model.slot_width[0]; ++k) grads.proj_b[k] += d[k];
  }
}

}  // namespace

Gradients backward_from_logit_grad(const MlpModel& model, const ForwardCache& cache,
                                   const Matrix& dlogits) {
  Gradients grads;
  backward_into(model, cache, dlogits, grads);
  return grads;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const std::vector<int>& labels) {
  Matrix dlogits;
  cross_entropy(cache.logits, labels, &dlogits, nullptr);
  return backward_from_logit_grad(model, cache, dlogits);
}

Matrix layerwise_jacobian(const MlpModel& model, const std::vector<double>& input, int layer) {
  if (model.spec.cells.size() != 1)
    throw UnsupportedConfigError("layerwise_jacobian is defined for single-cell models");
  const int depth = model.spec.cells.front().depth;
  if (layer < 1 || layer > depth - 1)
    throw RangeError("layerwise_jacobian: layer outside [1, depth-1]",
                     "layer " + std::to_string(layer));
  if (static_cast<int>(input.size()) != model.spec.input_dim)
    throw ShapeError("layerwise_jacobian: input has wrong dimension");

  Matrix batch(1, model.spec.input_dim);
  std::copy(input.begin(), input.end(), batch.data.begin());
  ForwardCache cache;
  forward(model, batch, &cache);

  // Single cell: slot index equals layer index, and layer i is produced by
  // fully-connected layer i-1.
  const int l = layer - 1;
  const Matrix& w = model.w[l];
  const double* h = cache.h[layer].row(0);
  Matrix jac(w.rows, w.cols);
  for (int r = 0; r < w.rows; ++r) {
    double d = activation_derivative(model.spec.activation, h[r]);
    const double* wr = w.row(r);
    double* jr = jac.row(r);
    for (int c = 0; c < w.cols; ++c) jr[c] = d * wr[c];
  }
  return jac;
}

Matrix gaussian_probes(int n, int dim, uint64_t seed) {
  if (n < 1 || dim < 1) throw RangeError("gaussian_probes: dimensions must be positive");
  Rng rng(seed);
  return gaussian_matrix(n, dim, 1.0, rng);
}

JacobianReport ldi_report(const MlpModel& model, const Matrix& probe_batch) {
  if (model.spec.cells.size() != 1)
    throw UnsupportedConfigError("ldi_report is defined for single-cell models");
  if (probe_batch.rows < 1) throw RangeError("ldi_report: empty probe batch");
  const int depth = model.spec.cells.front().depth;
  if (depth < 3) throw RangeError("ldi_report: depth must be >= 3");

  ForwardCache cache;
  forward(model, probe_batch, &cache);

  JacobianReport report;
  double layer_mean_sum = 0.0;
  for (int layer = 2; layer <= depth - 1; ++layer) {
    const int l = layer - 1;
    const Matrix& w = model.w[l];
    const int spectrum_len = std::min(w.rows, w.cols);
    JacobianReport::Layer entry;
    entry.layer = layer;
    entry.rows = w.rows;
    entry.cols = w.cols;
    entry.spectrum.values.assign(spectrum_len, 0.0);

    Matrix jac(w.rows, w.cols);
    for (int p = 0; p < probe_batch.rows; ++p) {
      const double* h = cache.h[layer].row(p);
      for (int r = 0; r < w.rows; ++r) {
        double d = activation_derivative(model.spec.activation, h[r]);
        const double* wr = w.row(r);
        double* jr = jac.row(r);
        for (int c = 0; c < w.cols; ++c) jr[c] = d * wr[c];
      }
      SingularSpectrum spectrum = singular_values(jac);
      for (int k = 0; k < spectrum_len; ++k) entry.spectrum.values[k] += spectrum.values[k];
    }
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < spectrum_len; ++k) {
      entry.spectrum.values[k] /= probe_batch.rows;
      sum += entry.spectrum.values[k];
      sum_sq += entry.spectrum.values[k] * entry.spectrum.values[k];
    }
    entry.spectrum.mean = sum / spectrum_len;
    entry.spectrum.mean_square = sum_sq / spectrum_len;
    entry.mean_sv = entry.spectrum.mean;
    layer_mean_sum += entry.mean_sv;
    report.layers.push_back(std::move(entry));
  }
  report.summary_mean_sv = layer_mean_sum / static_cast<double>(report.layers.size());
  return report;
}

namespace {

void sgd_step(Matrix& w, const Matrix& g, double lr) {
  for (size_t i = 0; i < w.data.size(); ++i) w.data[i] -= lr * g.data[i];
}

void sgd_step(std::vector<double>& b, const std::vector<double>& g, double lr) {
  for (size_t i = 0; i < b.size(); ++i) b[i] -= lr * g[i];
}

double evaluate_accuracy(const MlpModel& model, const Dataset& data, ForwardCache& cache) {
  const int eval_batch = 512;
  int correct = 0;
  Matrix batch;
  std::vector<int> labels;
  for (int start = 0; start < data.size(); start += eval_batch) {
    int n = std::min(eval_batch, data.size() - start);
    ensure_shape(batch, n, data.feature_dim());
    std::copy(data.features.row(start), data.features.row(start) + static_cast<size_t>(n) * data.feature_dim(),
              batch.data.begin());
    labels.assign(data.labels.begin() + start, data.labels.begin() + start + n);
    forward(model, batch, &cache);
    int hits = 0;
    cross_entropy(cache.logits, labels, nullptr, &hits);
    correct += hits;
  }
  return static_cast<double>(correct) / data.size();
}

}  // namespace

TrainTrace train(MlpModel& model, const Dataset& train_set, const Dataset& test_set,
                 const TrainConfig& config, TrainTrace* partial) {
  if (config.epochs < 1) throw RangeError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw RangeError("train: batch_size must be >= 1");
  if (!(config.lr0 >= 0.0)) throw RangeError("train: lr0 must be non-negative");
  if (train_set.feature_dim() != model.spec.input_dim ||
      test_set.feature_dim() != model.spec.input_dim)
    throw ShapeError("train: dataset feature_dim does not match input_dim");
  if (train_set.n_classes > model.spec.output_dim)
    throw ShapeError("train: more classes than output_dim");
  instrumentation::count_training();

  TrainTrace trace;
  trace.config = config;

  std::vector<int> order(train_set.size());
  for (int i = 0; i < train_set.size(); ++i) order[i] = i;

  Matrix batch, dlogits;
  std::vector<int> labels;
  ForwardCache cache, eval_cache;
  Gradients grads;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Cosine schedule from lr0 toward 0; the floor itself is never scheduled,
    // the last epoch runs at the smallest positive step.
    double lr = 0.5 * config.lr0 *
                (1.0 + std::cos(std::numbers::pi * epoch / config.epochs));
    Rng shuffle_rng = Rng::derive(config.data_seed, {static_cast<uint64_t>(epoch)});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    long long correct = 0;
    for (int start = 0; start < train_set.size(); start += config.batch_size) {
      int n = std::min(config.batch_size, train_set.size() - start);
      ensure_shape(batch, n, train_set.feature_dim());
      labels.resize(n);
      for (int i = 0; i < n; ++i) {
        int row = order[start + i];
        std::copy(train_set.features.row(row), train_set.features.row(row) + train_set.feature_dim(),
                  batch.row(i));
        labels[i] = train_set.labels[row];
      }
      forward(model, batch, &cache);
      int hits = 0;
      double loss = cross_entropy(cache.logits, labels, &dlogits, &hits);
      if (!std::isfinite(loss)) {
        int last = static_cast<int>(trace.epochs.size());
        if (partial) *partial = trace;
        throw DivergenceError("training loss became non-finite", last,
                              "last finite epoch " + std::to_string(last));
      }
      loss_sum += loss * n;
      correct += hits;
      backward_into(model, cache, dlogits, grads);
      sgd_step(model.proj_w, grads.proj_w, lr);
      sgd_step(model.proj_b, grads.proj_b, lr);
      for (size_t l = 0; l < model.w.size(); ++l) {
        sgd_step(model.w[l], grads.w[l], lr);
        sgd_step(model.b[l], grads.b[l], lr);
      }
      sgd_step(model.head_w, grads.head_w, lr);
      sgd_step(model.head_b, grads.head_b, lr);
      ++model.version;
    }

    TrainTrace::Epoch record;
    record.epoch = epoch + 1;
    record.train_loss = loss_sum / train_set.size();
    record.train_acc = static_cast<double>(correct) / train_set.size();
    record.test_acc = evaluate_accuracy(model, test_set, eval_cache);
    trace.epochs.push_back(record);
  }
  return trace;
}

void write_trace_csv(const TrainTrace& trace, std::ostream& out) {
  out << "epoch,train_loss,train_acc,test_acc\n";
  for (const auto& e : trace.epochs)
    out << e.epoch << "," << format_double(e.train_loss) << "," << format_double(e.train_acc)
        << "," << format_double(e.test_acc) << "\n";
}

namespace {

void write_f64_le(std::ofstream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64_le(std::ifstream& in, const std::string& path) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8))
    throw FormatError("checkpoint truncated", path);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint", path);
  nlohmann::json header = {{"format", "mlp-checkpoint-v1"},
                           {"spec", arch_to_json(model.spec)},
                           {"topo_seed", model.topo_seed},
                           {"init_seed", model.init_seed},
                           {"init_kind", "fan_in_scaled"},
                           {"init_gain", model.init.gain}};
  out << header.dump() << "\n";
  auto write_matrix = [&](const Matrix& m) {
    for (double v : m.data) write_f64_le(out, v);
  };
  auto write_vector = [&](const std::vector<double>& v) {
    for (double x : v) write_f64_le(out, x);
  };
  write_matrix(model.proj_w);
  write_vector(model.proj_b);
  for (size_t l = 0; l < model.w.size(); ++l) {
    write_matrix(model.w[l]);
    write_vector(model.b[l]);
  }
  write_matrix(model.head_w);
  write_vector(model.head_b);
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint", path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw FormatError("checkpoint missing header", path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header parse failure: ") + e.what(), path);
  }
  if (header.value("format", "") != "mlp-checkpoint-v1")
    throw FormatError("checkpoint has unknown format tag", path);

  ArchitectureSpec spec = arch_from_json(header.at("spec"));
  InitScheme init;
  init.gain = header.at("init_gain").get<double>();
  MlpModel model = build_model(spec, header.at("topo_seed").get<uint64_t>(),
                               header.at("init_seed").get<uint64_t>(), init);
  auto read_matrix = [&](Matrix& m) {
    for (double& v : m.data) v = read_f64_le(in, path);
  };
  auto read_vector = [&](std::vector<double>& v) {
    for (double& x : v) x = read_f64_le(in, path);
  };
  read_matrix(model.proj_w);
  read_vector(model.proj_b);
  for (size_t l = 0; l < model.w.size(); ++l) {
    read_matrix(model.w[l]);
    read_vector(model.b[l]);
  }
  read_matrix(model.head_w);
  read_vector(model.head_b);
  char extra;
  if (in.read(&extra, 1)) throw FormatError("checkpoint has trailing bytes", path);
  ++model.version;
  return model;
}

}  // namespace nnmass
