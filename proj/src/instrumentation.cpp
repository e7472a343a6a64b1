#include "nnmass/instrumentation.hpp"

#include <atomic>

namespace nnmass::instrumentation {

namespace {
std::atomic<uint64_t> realizations{0};
std::atomic<uint64_t> model_builds{0};
std::atomic<uint64_t> trainings{0};
}  // namespace

void count_realization() { realizations.fetch_add(1, std::memory_order_relaxed); }
void count_model_build() { model_builds.fetch_add(1, std::memory_order_relaxed); }
void count_training() { trainings.fetch_add(1, std::memory_order_relaxed); }

Snapshot snapshot() {
  return {realizations.load(), model_builds.load(), trainings.load()};
}

void reset() {
  realizations = 0;
  model_builds = 0;
  trainings = 0;
}

}  // namespace nnmass::instrumentation
