#pragma once

#include <cstddef>
#include <functional>

namespace olt {

// Worker count: hardware concurrency, capped by the OL_THREADS environment
// variable when it holds a positive integer.
std::size_t worker_count();

// Runs body(i) for every i in [0, n) across a transient pool of worker
// threads. Indices are handed out in contiguous chunks; each index is visited
// exactly once. If any body throws, the exception for the smallest failing
// index is rethrown after all workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Keeps large activation buffers on the heap instead of fresh mmap'd pages
// (glibc only; no-op elsewhere). Call once at program start.
void configure_allocator();

}  // namespace olt
