#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mimic {

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Runs body(i) for i in [0, n). Iterations must write to disjoint state so
// that results do not depend on the schedule or thread count.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        body(static_cast<std::size_t>(i));
    }
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace mimic
