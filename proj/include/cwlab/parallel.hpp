#pragma once

#include <cstddef>
#include <exception>
#include <functional>

#include "cwlab/rng.hpp"

namespace cwlab {

/// Worker count used by parallel_for. Defaults to CWLAB_THREADS if set, else
/// the number of logical cores.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n) on the worker pool. Indices are split into
/// contiguous blocks; callers must write results to per-index slots so the
/// output does not depend on the worker count. If several indices throw, the
/// exception from the lowest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Samples per random stream in parallel_sample.
inline constexpr std::size_t kSampleBlock = 256;

/// Runs body(i, rng) for i in [0, n). Indices are grouped in fixed blocks of
/// kSampleBlock and block b draws sequentially from key.at(b), so results do
/// not depend on the worker count.
void parallel_sample(std::size_t n, RngKey key, const std::function<void(std::size_t, Stream&)>& body);

}  // namespace cwlab
