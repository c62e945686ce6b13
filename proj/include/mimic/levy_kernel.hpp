#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mimic/truncation.hpp"

namespace mimic {

struct KernelAtom {
    std::vector<double> xi;  // location in R^d, never 0
    double rate = 0.0;       // > 0
};

// One-dimensional density component with a declared bounded support; the
// density is integrated and sampled on a fixed quadrature grid.
struct KernelDensity {
    std::function<double(double)> rate_density;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n_points = 512;
};

// Finite-activity jump intensity measure: a finite list of atoms plus an
// optional bounded-support density (d = 1 only). Immutable after construction.
class LevyKernel {
public:
    LevyKernel() = default;

    static LevyKernel zero(std::size_t dim);
    static LevyKernel atomic(std::size_t dim, std::vector<KernelAtom> atoms);
    static LevyKernel single_atom(std::vector<double> xi, double rate);
    static LevyKernel with_density(KernelDensity density, std::vector<KernelAtom> atoms = {});

    std::size_t dim() const { return dim_; }
    double total_rate() const { return total_rate_; }
    const std::vector<KernelAtom>& atoms() const { return atoms_; }
    bool has_density() const { return density_.has_value(); }

    // ∫ f dκ. Exact (a weighted sum) for atomic kernels; quadrature on the
    // declared support for the density part.
    double integral(const std::function<double(std::span<const double>)>& f) const;

    // ∫ h(xi) dκ(xi) and ∫ (xi - h(xi)) dκ(xi), componentwise.
    std::vector<double> truncated_mean(const TruncationSpec& h) const;
    std::vector<double> tail_mean(const TruncationSpec& h) const;

    // Draws one mark from the normalized law κ/total_rate. Requires total_rate > 0.
    void sample_mark(std::mt19937_64& rng, std::span<double> out) const;

    // Content key used for deduplication and canonical ordering (atomic kernels only).
    std::string content_key() const;

private:
    std::size_t dim_ = 1;
    std::vector<KernelAtom> atoms_;
    std::optional<KernelDensity> density_;
    double density_mass_ = 0.0;
    std::vector<double> density_cdf_;  // cumulative masses on quadrature cells
    double total_rate_ = 0.0;

    void finalize();
};

// Fixed-size kernel description used in simulation hot loops (at most two
// atoms, dimension at most 2, no density).
struct InlineKernel {
    std::uint32_t dim = 1;
    std::uint32_t n_atoms = 0;
    double xi[2][2] = {{0, 0}, {0, 0}};
    double rate[2] = {0, 0};

    void clear(std::uint32_t d) {
        dim = d;
        n_atoms = 0;
    }
    void add(double x0, double x1, double r) {
        xi[n_atoms][0] = x0;
        xi[n_atoms][1] = x1;
        rate[n_atoms] = r;
        ++n_atoms;
    }
    LevyKernel to_kernel() const;
};

// Deduplicating store of kernels referenced by id from particle ensembles.
// intern() and stable_ref() are safe to call concurrently; element addresses
// never move while interning (deque storage). Ids assigned during a parallel
// phase depend on thread interleaving, so canonicalize() must be called once
// afterwards (single-threaded) to re-label ids in content order; it returns
// the old-id -> new-id table and invalidates previously taken references.
class KernelPool {
public:
    std::uint32_t intern(const LevyKernel& k);
    std::uint32_t intern_inline(const InlineKernel& k);

    const LevyKernel& at(std::uint32_t id) const;
    const LevyKernel* stable_ref(std::uint32_t id) const;
    std::size_t size() const;

    std::vector<std::uint32_t> canonicalize();

private:
    std::deque<LevyKernel> kernels_;
    std::unordered_map<std::string, std::uint32_t> index_;
    mutable std::mutex mu_;
};

// Member of the convergence-determining ramp family, f_a(x) = (a|x|-1)^+ ∧ 1.
double ramp_test_function(double a, std::span<const double> xi);

}  // namespace mimic
