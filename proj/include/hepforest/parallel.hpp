#pragma once

#include <cstddef>
#include <functional>

namespace hepforest {

// Worker count to use when the caller asks for 0 (= all cores).
unsigned resolve_workers(unsigned requested);

// Calls fn(i) for every i in [0, n) using up to `workers` threads. Each index
// is processed exactly once; the first exception thrown is rethrown here.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace hepforest
