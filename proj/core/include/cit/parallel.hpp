#pragma once
#include <cstddef>
#include <functional>

namespace cit {

/// Number of worker threads used by parallel_for (default 1).
void set_workers(int count);
int workers();

/// Calls body(begin, end) on contiguous chunks covering [0, count).
/// Chunks never overlap, so bodies that write only to their own index range
/// give results independent of the worker count. Nested calls run inline.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace cit
