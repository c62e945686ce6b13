#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mimic/characteristics.hpp"
#include "mimic/levy_kernel.hpp"
#include "mimic/truncation.hpp"
#include "mimic/updating.hpp"

namespace mimic {

enum class ScenarioKind {
    Constant,          // fixed (b, c, κ); the everything-zero and drift-only cases
    RandomDriftSign,   // b = ±1 with a hidden sign, c = 1
    MixedPoisson,      // unit jumps at a hidden rate Λ ∈ {λ1, λ2}
    SupDependentVol,   // diffusion variance 1 + 1{running sup ≥ 1}
    IteratedIntegral,  // 2-d pair (X, ∫X_- dX) driven by drift + compound Poisson
};

// Characteristics of one step, written by scenarios and projection lookups.
// The kernel is either a slot into the scenario's fixed kernel list or an
// inline description resolved against the kernel pool by the simulator.
struct StepChars {
    double b[2] = {0, 0};
    double c[3] = {0, 0, 0};  // packed: c00, c01, c11
    int fixed_slot = -1;
    InlineKernel inl;
};

// A source-process definition: dimensions, updating function, truncation
// rule, hidden static randomness, the per-step characteristics rule, and the
// closed-form projected characteristics when available.
class Scenario {
public:
    ScenarioKind kind = ScenarioKind::Constant;
    std::string name = "constant";
    std::size_t d = 1;
    UpdatingKind phi_kind = UpdatingKind::ProcessItself;
    TruncationSpec trunc = TruncationSpec::hard(1.0);

    // mixed_poisson
    double p = 0.5, lambda1 = 1.0, lambda2 = 4.0;
    // iterated_integral
    double mu = 0.5, lambda = 2.0;
    LevyKernel jump_kernel;  // iterated_integral mark kernel (d=1), default δ_1
    // constant
    std::vector<double> const_b;
    std::vector<double> const_c_packed;
    LevyKernel const_kernel;

    bool has_latent = false;
    bool has_oracle = false;

    // Executable form of the integrability assumption: |b| ≤ bound_b_const +
    // bound_b_lin * |z|_inf, |c|_max ≤ bound_c, total rate ≤ bound_rate,
    // along every simulated path.
    double bound_b_const = 0.0, bound_b_lin = 0.0, bound_c = 0.0, bound_rate = 0.0;

    UpdatingFunction phi() const { return UpdatingFunction::builtin(phi_kind, d); }
    std::size_t dim_e() const { return phi().state_dim(); }

    void initial_state(std::span<double> z0) const;
    double sample_latent(std::mt19937_64& rng) const;

    // Kernels that do not depend on the state; step_chars refers to them by slot.
    std::vector<LevyKernel> fixed_kernels() const;

    // Differential characteristics at the left endpoint of a step.
    void step_chars(double t, std::span<const double> z, double latent, StepChars& out) const;

    // Exact projected characteristics (Markovian coefficients) at (t, z).
    void oracle_chars(double t, std::span<const double> z, StepChars& out) const;

    // Posterior jump intensity of the mixed-Poisson scenario given N_t = n.
    double mixed_poisson_lambda_hat(double t, long long n) const;
};

// Named built-ins selected from configuration. Throws ConfigError on unknown
// names or invalid parameters.
Scenario builtin_scenario(const std::string& name);
Scenario make_constant_scenario(std::vector<double> b, std::vector<double> c_packed,
                                LevyKernel kernel, TruncationSpec trunc);
Scenario make_random_drift_sign();
Scenario make_mixed_poisson(double p, double lambda1, double lambda2);
Scenario make_sup_dependent_vol();
Scenario make_iterated_integral(double mu, double lambda);

}  // namespace mimic
