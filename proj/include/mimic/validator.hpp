#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mimic/ensemble.hpp"
#include "mimic/projector.hpp"

namespace mimic {

// Exact two-sample Kolmogorov-Smirnov statistic (ties handled by advancing
// both samples through equal values before comparing CDFs). Inputs sorted.
double two_sample_ks(const std::vector<double>& a, const std::vector<double>& b);

// Exact 1-d empirical 1-Wasserstein distance, ∫ |F_a - F_b| dx. Inputs sorted.
double wasserstein1(const std::vector<double>& a, const std::vector<double>& b);

// Total-variation distance between empirical pmfs of integer-valued samples.
double tv_integer(const std::vector<double>& a, const std::vector<double>& b);

// Total-variation distance between an empirical pmf and a reference pmf over
// {0, 1, ..., pmf.size()-1}; samples outside contribute their full mass.
double tv_against_pmf(const std::vector<double>& samples, const std::vector<double>& pmf);

// Two-sample KS critical value at level alpha.
double ks_critical(double alpha, std::size_t n, std::size_t m);

bool all_integer_valued(const std::vector<double>& v, double tol = 1e-9);

struct MarginalTolerances {
    double ks_alpha = 0.01;
    double ks_margin = 0.005;            // discretization allowance on top of the critical value
    std::optional<double> ks_fixed;      // overrides the alpha-based tolerance
    std::optional<double> w1_tol;        // gate W1 only when set
    std::optional<double> tv_tol = 0.02; // gates integer-valued coordinates
};

struct MarginalRow {
    double t = 0.0;
    std::size_t coord = 0;
    std::size_t n_a = 0, n_b = 0;
    double ks = 0.0, ks_tol = 0.0;
    double w1 = 0.0;
    double tv = 0.0;
    bool tv_defined = false;
    bool pass = true;
};

struct MarginalReport {
    std::vector<MarginalRow> rows;
    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

// Agreement of one-dimensional marginal laws of the functional state Z at the
// given times, per coordinate. Symmetric in its arguments for KS and W1.
MarginalReport compare_marginals(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                 const std::vector<double>& times, const MarginalTolerances& tol,
                                 int threads);

struct MartingaleRow {
    std::string process;    // drift | quadratic | jump
    std::string component;  // coordinate, matrix entry or test-function name
    std::size_t window = 0;
    double t0 = 0.0, t1 = 0.0;
    double mean = 0.0, se = 0.0, z = 0.0;
};

struct MartingaleReport {
    std::vector<MartingaleRow> rows;
    double max_abs_z() const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, std::abs(r.z));
        return m;
    }
};

// Window increments of the three compensated processes that characterize the
// triplet: (i) truncated path minus drift integral, (ii) its outer product
// minus the quadratic compensator, (iii) jump sums of each test function
// minus their kernel compensator. Reports mean/SE/z per window.
MartingaleReport martingale_residuals(const ParticleEnsemble& ens,
                                      const std::vector<TestFn>& family, std::size_t n_windows,
                                      int threads);

struct CompensatorRow {
    std::string fn;
    double t = 0.0;
    double mean_a = 0.0, se_a = 0.0;
    double mean_b = 0.0, se_b = 0.0;
    double z_diff = 0.0;
};

struct CompensatorReport {
    std::vector<CompensatorRow> rows;
};

// Ensemble means of the accumulated compensator integrals (f * nu)_t for each
// family member, compared across two ensembles.
CompensatorReport compensator_probe(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                    const std::vector<TestFn>& family,
                                    const std::vector<double>& times, int threads);

}  // namespace mimic
