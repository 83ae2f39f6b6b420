#include "smile/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smile {

namespace {

int initialThreads() {
  if (const char* env = std::getenv("SMILE_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int> g_threads{initialThreads()};

}  // namespace

int maxThreads() { return g_threads.load(); }

void setMaxThreads(int n) { g_threads.store(n < 1 ? 1 : n); }

namespace detail {

void parallelForImpl(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  const int nt = maxThreads();
  if (nt <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < n; ++i) body(i);
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace detail

}  // namespace smile
