#pragma once

#include <cstddef>
#include <functional>

namespace kgads {

/// Worker count: set_thread_count() if called, else KGADS_THREADS, else
/// hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker, so results written per index are deterministic.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace kgads
