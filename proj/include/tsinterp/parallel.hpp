#pragma once

#include <cstddef>
#include <functional>

namespace tsinterp {

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Work items are
/// handed out in index order; callers store results by index so the outcome
/// does not depend on scheduling. If any call throws, the exception of the
/// lowest failing index is rethrown after all threads finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace tsinterp
