#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mimic/levy_kernel.hpp"
#include "mimic/truncation.hpp"

namespace mimic {

// Differential characteristics realized at one particle step: drift b (under
// the scenario's truncation rule; canonical when truncation-free), symmetric
// PSD diffusion matrix c in packed upper-triangular storage, and the jump
// kernel.
struct CharRealization {
    std::vector<double> b;         // d
    std::vector<double> c_packed;  // d*(d+1)/2: c00, c01, ..., c11, ...
    LevyKernel kernel;
};

inline std::size_t packed_size(std::size_t d) { return d * (d + 1) / 2; }
inline std::size_t packed_index(std::size_t d, std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return i * d - i * (i + 1) / 2 + j;
}

// ∫ f dκ.
inline double kernel_integral(const LevyKernel& kernel,
                              const std::function<double(std::span<const double>)>& f) {
    return kernel.integral(f);
}

// Drift re-expressed under another truncation rule:
// b_{h2} = b_h - ∫ (h(xi) - h2(xi)) dκ.
std::vector<double> convert_truncation(std::span<const double> b_h, const LevyKernel& kernel,
                                       const TruncationSpec& h, const TruncationSpec& h2);

// Canonical (truncation-free) drift from a truncated one:
// b = b_h + ∫ (xi - h(xi)) dκ. Requires ∫ |xi| ∧ |xi|^2 dκ < ∞, which holds
// for every constructible finite-activity kernel.
std::vector<double> drift_truncated_to_canonical(std::span<const double> b_h,
                                                 const LevyKernel& kernel,
                                                 const TruncationSpec& h);

}  // namespace mimic
