#pragma once

#include <cstdint>

namespace nnmass::instrumentation {

// Process-wide counters for the operations the design module promises never
// to perform. Tests reset, run a query, and assert the counts stayed zero.
struct Snapshot {
  uint64_t realizations = 0;
  uint64_t model_builds = 0;
  uint64_t trainings = 0;
};

void count_realization();
void count_model_build();
void count_training();

Snapshot snapshot();
void reset();

}  // namespace nnmass::instrumentation
