#ifndef OBJDOSE_PARALLEL_HPP
#define OBJDOSE_PARALLEL_HPP

#include <functional>

namespace objdose {

/// Runs fn(0..count-1) across at most `threads` workers. Tasks must write to
/// disjoint slots; results are then independent of scheduling, keeping output
/// bit-identical across thread counts. The first exception thrown by a task
/// is rethrown after all workers join.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace objdose

#endif
