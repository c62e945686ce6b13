#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mimic {

// Jump truncation rule. Hard: h(xi) = xi * 1{|xi| <= r}, the cutoff family
// closed under the drift conversion formulas. None: h(xi) = xi, used when
// working with canonical (truncation-free) drift, which requires the kernel
// to integrate |xi| ∧ |xi|^2.
struct TruncationSpec {
    enum class Mode { Hard, None };

    Mode mode = Mode::Hard;
    double r = 1.0;

    static TruncationSpec hard(double threshold) { return {Mode::Hard, threshold}; }
    static TruncationSpec none() { return {Mode::None, 0.0}; }

    bool truncates() const { return mode == Mode::Hard; }

    std::string tag() const {
        if (mode == Mode::None) return "none";
        return "hard:" + std::to_string(r);
    }

    // h(xi), written into out (same dimension as xi).
    void apply(std::span<const double> xi, std::span<double> out) const {
        if (mode == Mode::None) {
            for (std::size_t j = 0; j < xi.size(); ++j) out[j] = xi[j];
            return;
        }
        double n2 = 0.0;
        for (double v : xi) n2 += v * v;
        bool keep = n2 <= r * r;
        for (std::size_t j = 0; j < xi.size(); ++j) out[j] = keep ? xi[j] : 0.0;
    }

    std::vector<double> apply(std::span<const double> xi) const {
        std::vector<double> out(xi.size());
        apply(xi, out);
        return out;
    }
};

}  // namespace mimic
