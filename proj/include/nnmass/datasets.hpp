#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "nnmass/matrix.hpp"

namespace nnmass {

enum class Provenance { seg, circle, idx };

struct Dataset {
  Matrix features;          // n_samples x feature_dim
  std::vector<int> labels;  // values in [0, n_classes)
  int n_classes = 0;
  Provenance provenance = Provenance::seg;
  std::string params;  // human-readable parameter echo, e.g. "segments=20"
  uint64_t seed = 0;
  // Image geometry, meaningful only for idx data.
  int image_rows = 0;
  int image_cols = 0;

  int size() const { return features.rows; }
  int feature_dim() const { return features.cols; }
};

// [0,1] split into n equal segments; x uniform within a uniformly chosen
// segment s; feature [x, x]; label = s mod 2.
Dataset gen_seg(int n_segments, int n_samples, uint64_t seed);

// Unit disc split into n concentric rings; radius uniform within a uniformly
// chosen ring s, angle uniform; feature [r cos a, r sin a]; label = s mod 2.
Dataset gen_circle(int n_rings, int n_samples, uint64_t seed);

// IDX image/label pair (big-endian headers, magics 2051/2049). Pixels are
// scaled to [0,1]. Any malformed byte fails the whole load.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Inverse of load_idx for idx-provenance datasets, byte-exact round trip.
void write_idx(const Dataset& data, const std::string& images_path,
               const std::string& labels_path);

// One row per sample: feature columns, then the label.
void write_dataset_csv(const Dataset& data, std::ostream& out);

}  // namespace nnmass
