#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mrt {

enum class Execution { serial, parallel };

// Runs body(i) for i in [0, n). Each index must write only its own output
// slot, so results do not depend on the schedule. The first exception thrown
// by any worker is rethrown on the calling thread once the loop ends.
template <typename Body>
void for_each_index(std::size_t n, Execution mode, Body&& body) {
  bool nested = false;
#ifdef _OPENMP
  nested = omp_in_parallel() != 0;
#endif
  if (mode == Execution::serial || nested || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    {
      std::lock_guard<std::mutex> lock(guard);
      if (failure) continue;
    }
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mrt
