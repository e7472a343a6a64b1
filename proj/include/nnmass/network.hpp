#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nnmass/arch.hpp"
#include "nnmass/datasets.hpp"
#include "nnmass/matrix.hpp"
#include "nnmass/svd.hpp"
#include "nnmass/topology.hpp"

namespace nnmass {

struct InitScheme {
  enum class Kind { fan_in_scaled };
  Kind kind = Kind::fan_in_scaled;
  double gain = 1.0;  // weight variance = gain / fan_in

  static InitScheme for_activation(Activation a);
};

enum class ModelPurpose { general, jacobian_experiment };

// The network is a chain of activation "slots": slot 0 is the projection
// output (cell 0, layer 0), and every fully-connected layer l produces slot
// l+1. A layer's input is its predecessor slot concatenated with the
// activations of its long-range source units, which widens the weight matrix
// by one column per source.
struct LayerPlan {
  int cell = 0;
  int layer = 0;  // index within the cell of the slot this layer produces
  int in_slot = 0;
  int out_slot = 0;
  int in_width = 0;
  int out_width = 0;
  int cell_base_slot = 0;
  std::vector<SourceUnit> sources;

  int in_cols() const { return in_width + static_cast<int>(sources.size()); }
};

struct MlpModel {
  ArchitectureSpec spec;
  TopologyRealization realization;
  InitScheme init;
  uint64_t topo_seed = 0;
  uint64_t init_seed = 0;

  Matrix proj_w;  // (w_0, input_dim)
  std::vector<double> proj_b;
  std::vector<Matrix> w;  // one per fully-connected layer, (out_width, in_cols)
  std::vector<std::vector<double>> b;
  Matrix head_w;  // (output_dim, w_last)
  std::vector<double> head_b;

  std::vector<LayerPlan> plan;
  std::vector<int> slot_width;

  // Bumped whenever parameters change, to invalidate outstanding caches.
  uint64_t version = 0;

  int n_layers() const { return static_cast<int>(w.size()); }
  int n_slots() const { return static_cast<int>(slot_width.size()); }
};

struct ForwardCache {
  uint64_t model_version = 0;
  Matrix input;
  std::vector<Matrix> x;  // per layer: gathered input (batch x in_cols)
  std::vector<Matrix> h;  // per slot: pre-activation
  std::vector<Matrix> s;  // per slot: activation
  Matrix logits;
};

struct Gradients {
  Matrix proj_w;
  std::vector<double> proj_b;
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;
  Matrix head_w;
  std::vector<double> head_b;
};

struct JacobianReport {
  struct Layer {
    int layer = 0;
    int rows = 0;
    int cols = 0;
    SingularSpectrum spectrum;  // averaged elementwise over probe samples
    double mean_sv = 0.0;
  };
  std::vector<Layer> layers;    // layers 2..d_c-1
  double summary_mean_sv = 0.0; // mean over those layers
};

struct TrainConfig {
  int epochs = 1;
  int batch_size = 128;
  double lr0 = 0.05;
  uint64_t data_seed = 0;
};

struct TrainTrace {
  struct Epoch {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
  };
  std::vector<Epoch> epochs;
  TrainConfig config;
  std::string schedule = "cosine";
};

MlpModel build_model(const ArchitectureSpec& spec, uint64_t topo_seed,
                     uint64_t init_seed, const InitScheme& init,
                     ModelPurpose purpose = ModelPurpose::general);

// Returns logits (batch x output_dim); fills `cache` when given.
Matrix forward(const MlpModel& model, const Matrix& batch, ForwardCache* cache = nullptr);

// Mean softmax cross-entropy. Optionally emits d(loss)/d(logits) (already
// divided by the batch size) and the number of argmax hits.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                     Matrix* dlogits = nullptr, int* correct = nullptr);

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const std::vector<int>& labels);
Gradients backward_from_logit_grad(const MlpModel& model, const ForwardCache& cache,
                                   const Matrix& dlogits);

// D_i W_i at layer i (within the single cell), for one input sample.
Matrix layerwise_jacobian(const MlpModel& model, const std::vector<double>& input, int layer);

JacobianReport ldi_report(const MlpModel& model, const Matrix& probe_batch);

// Standard-normal probe inputs for Jacobian reports.
Matrix gaussian_probes(int n, int dim, uint64_t seed);

// Minibatch SGD with softmax cross-entropy and a cosine-annealed learning
// rate (floor 0). Mutates the model in place. A non-finite loss raises a
// divergence error; when `partial` is given, the epochs completed before the
// failure are copied there first so callers can keep the usable prefix.
TrainTrace train(MlpModel& model, const Dataset& train_set, const Dataset& test_set,
                 const TrainConfig& config, TrainTrace* partial = nullptr);

void write_trace_csv(const TrainTrace& trace, std::ostream& out);

// Checkpoint: one JSON header line, then all parameters as little-endian
// 64-bit floats, matrices row-major in network order.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace nnmass
