#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace ngrad {

/// Global worker cap for batch-parallel loops (the CLI --threads flag).
/// Results never depend on it: batches own disjoint accumulator slots and
/// are combined in batch order.
int max_threads();
void set_max_threads(int n);

/// Runs fn(batch_index) for batch_index in [0, n_batches), possibly on
/// several threads. Exceptions are rethrown on the calling thread.
void for_batches(int n_batches, const std::function<void(int)>& fn);

}  // namespace ngrad
