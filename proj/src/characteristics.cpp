#include "mimic/characteristics.hpp"

#include <stdexcept>

namespace mimic {

std::vector<double> convert_truncation(std::span<const double> b_h, const LevyKernel& kernel,
                                       const TruncationSpec& h, const TruncationSpec& h2) {
    if (b_h.size() != kernel.dim()) {
        throw std::invalid_argument("convert_truncation: drift dimension mismatch");
    }
    std::vector<double> mh = kernel.truncated_mean(h);
    std::vector<double> mh2 = kernel.truncated_mean(h2);
    std::vector<double> out(b_h.begin(), b_h.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= mh[j] - mh2[j];
    return out;
}

std::vector<double> drift_truncated_to_canonical(std::span<const double> b_h,
                                                 const LevyKernel& kernel,
                                                 const TruncationSpec& h) {
    if (b_h.size() != kernel.dim()) {
        throw std::invalid_argument("drift_truncated_to_canonical: drift dimension mismatch");
    }
    std::vector<double> tail = kernel.tail_mean(h);
    std::vector<double> out(b_h.begin(), b_h.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += tail[j];
    return out;
}

}  // namespace mimic
