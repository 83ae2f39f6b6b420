#pragma once

#include <cstdint>
#include <functional>

namespace smile {

/// Worker count used by parallelFor. Initialized from SMILE_THREADS if set,
/// otherwise the OpenMP default. Thread count must never change results:
/// every parallel loop writes results indexed by iteration only.
int maxThreads();
void setMaxThreads(int n);

namespace detail {
void parallelForImpl(std::int64_t n, const std::function<void(std::int64_t)>& body);
}

template <class F>
void parallelFor(std::int64_t n, F&& body) {
  detail::parallelForImpl(n, std::function<void(std::int64_t)>(std::forward<F>(body)));
}

}  // namespace smile
