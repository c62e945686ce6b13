#include "mimic/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "mimic/errors.hpp"

namespace mimic {

void Scenario::initial_state(std::span<double> z0) const {
    for (auto& v : z0) v = 0.0;
}

double Scenario::sample_latent(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    switch (kind) {
        case ScenarioKind::RandomDriftSign:
            return unif(rng) < 0.5 ? 1.0 : -1.0;
        case ScenarioKind::MixedPoisson:
            return unif(rng) < p ? lambda1 : lambda2;
        default:
            return 0.0;
    }
}

std::vector<LevyKernel> Scenario::fixed_kernels() const {
    switch (kind) {
        case ScenarioKind::Constant:
            return {const_kernel};
        case ScenarioKind::RandomDriftSign:
        case ScenarioKind::SupDependentVol:
            return {LevyKernel::zero(d)};
        case ScenarioKind::MixedPoisson: {
            auto k1 = LevyKernel::single_atom({1.0}, lambda1);
            auto k2 = LevyKernel::single_atom({1.0}, lambda2);
            return {k1, k2};
        }
        case ScenarioKind::IteratedIntegral:
            return {};
    }
    return {};
}

void Scenario::step_chars(double /*t*/, std::span<const double> z, double latent,
                          StepChars& out) const {
    switch (kind) {
        case ScenarioKind::Constant:
            out.b[0] = const_b[0];
            out.b[1] = const_b.size() > 1 ? const_b[1] : 0.0;
            out.c[0] = const_c_packed[0];
            out.c[1] = const_c_packed.size() > 1 ? const_c_packed[1] : 0.0;
            out.c[2] = const_c_packed.size() > 2 ? const_c_packed[2] : 0.0;
            out.fixed_slot = 0;
            break;
        case ScenarioKind::RandomDriftSign:
            out.b[0] = latent;  // drift under the truncation rule; κ = 0
            out.c[0] = 1.0;
            out.fixed_slot = 0;
            break;
        case ScenarioKind::MixedPoisson:
            // Unit jumps inside the truncation radius, so the truncated drift
            // equals the jump compensation Λ; the simulated path is the raw
            // jump count.
            out.b[0] = latent;
            out.c[0] = 0.0;
            out.fixed_slot = latent == lambda1 ? 0 : 1;
            break;
        case ScenarioKind::SupDependentVol:
            out.b[0] = 0.0;
            out.c[0] = z[1] >= 1.0 ? 2.0 : 1.0;
            out.fixed_slot = 0;
            break;
        case ScenarioKind::IteratedIntegral: {
            // Canonical (truncation-free) characteristics of (X, ∫X_- dX):
            // b = (mu + m1)·(1, x), kernel = image of the mark kernel under
            // xi -> (xi, x·xi), with m1 the mark kernel's mean jump rate.
            double x = z[0];
            double m1 = 0.0;
            out.fixed_slot = -1;
            out.inl.clear(2);
            for (const auto& atom : jump_kernel.atoms()) {
                out.inl.add(atom.xi[0], x * atom.xi[0], atom.rate);
                m1 += atom.rate * atom.xi[0];
            }
            out.b[0] = mu + m1;
            out.b[1] = x * (mu + m1);
            out.c[0] = out.c[1] = out.c[2] = 0.0;
            break;
        }
    }
}

void Scenario::oracle_chars(double t, std::span<const double> z, StepChars& out) const {
    if (!has_oracle) throw ScenarioError("scenario has no closed-form projection: " + name);
    switch (kind) {
        case ScenarioKind::Constant:
            step_chars(t, z, 0.0, out);
            break;
        case ScenarioKind::RandomDriftSign:
            out.b[0] = std::tanh(z[0]);
            out.c[0] = 1.0;
            out.fixed_slot = 0;
            break;
        case ScenarioKind::MixedPoisson: {
            double lh = mixed_poisson_lambda_hat(t, std::llround(z[0]));
            out.b[0] = lh;
            out.c[0] = 0.0;
            out.fixed_slot = -1;
            out.inl.clear(1);
            out.inl.add(1.0, 0.0, lh);
            break;
        }
        case ScenarioKind::SupDependentVol:
            out.b[0] = 0.0;
            out.c[0] = z[1] >= 1.0 ? 2.0 : 1.0;
            out.fixed_slot = 0;
            break;
        case ScenarioKind::IteratedIntegral:
            step_chars(t, z, 0.0, out);  // characteristics are already z-measurable
            break;
    }
}

double Scenario::mixed_poisson_lambda_hat(double t, long long n) const {
    if (n < 0) n = 0;
    // Posterior mean of Λ given N_t = n, written with a common factor pulled
    // out for numerical stability at large n.
    double la = lambda1, lb = lambda2;
    double wa = p, wb = 1.0 - p;
    // weight_i ∝ w_i λ_i^n e^{-λ_i t}
    double log_a = std::log(wa) + static_cast<double>(n) * std::log(la) - la * t;
    double log_b = std::log(wb) + static_cast<double>(n) * std::log(lb) - lb * t;
    double m = std::max(log_a, log_b);
    double ea = std::exp(log_a - m), eb = std::exp(log_b - m);
    return (ea * la + eb * lb) / (ea + eb);
}

Scenario make_constant_scenario(std::vector<double> b, std::vector<double> c_packed,
                                LevyKernel kernel, TruncationSpec trunc) {
    Scenario s;
    s.kind = ScenarioKind::Constant;
    s.name = "constant";
    s.d = b.size();
    if (s.d < 1 || s.d > 2) throw ConfigError("constant scenario supports d in {1,2}");
    if (c_packed.size() != packed_size(s.d)) throw ConfigError("constant scenario: bad c size");
    if (kernel.dim() != s.d) throw ConfigError("constant scenario: kernel dimension mismatch");
    s.phi_kind = UpdatingKind::ProcessItself;
    s.trunc = trunc;
    s.const_b = std::move(b);
    s.const_c_packed = std::move(c_packed);
    s.const_kernel = std::move(kernel);
    s.has_latent = false;
    s.has_oracle = true;
    double babs = 0.0;
    for (double v : s.const_b) babs = std::max(babs, std::abs(v));
    double cabs = 0.0;
    for (double v : s.const_c_packed) cabs = std::max(cabs, std::abs(v));
    s.bound_b_const = babs;
    s.bound_c = cabs;
    s.bound_rate = s.const_kernel.total_rate();
    return s;
}

Scenario make_random_drift_sign() {
    Scenario s;
    s.kind = ScenarioKind::RandomDriftSign;
    s.name = "random_drift_sign";
    s.d = 1;
    s.phi_kind = UpdatingKind::ProcessItself;
    s.trunc = TruncationSpec::hard(1.0);
    s.has_latent = true;
    s.has_oracle = true;
    s.bound_b_const = 1.0;
    s.bound_c = 1.0;
    s.bound_rate = 0.0;
    return s;
}

Scenario make_mixed_poisson(double p, double lambda1, double lambda2) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("mixed_poisson: p must lie in [0,1]");
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
        throw ConfigError("mixed_poisson: intensities must be positive");
    }
    Scenario s;
    s.kind = ScenarioKind::MixedPoisson;
    s.name = "mixed_poisson";
    s.d = 1;
    s.phi_kind = UpdatingKind::ProcessItself;
    s.trunc = TruncationSpec::hard(2.0);
    s.p = p;
    s.lambda1 = lambda1;
    s.lambda2 = lambda2;
    s.has_latent = true;
    s.has_oracle = true;
    s.bound_b_const = std::max(lambda1, lambda2);
    s.bound_c = 0.0;
    s.bound_rate = std::max(lambda1, lambda2);
    return s;
}

Scenario make_sup_dependent_vol() {
    Scenario s;
    s.kind = ScenarioKind::SupDependentVol;
    s.name = "sup_dependent_vol";
    s.d = 1;
    s.phi_kind = UpdatingKind::SupremumToDate;
    s.trunc = TruncationSpec::hard(1.0);
    s.has_latent = false;
    s.has_oracle = true;
    s.bound_b_const = 0.0;
    s.bound_c = 2.0;
    s.bound_rate = 0.0;
    return s;
}

Scenario make_iterated_integral(double mu, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("iterated_integral: jump rate must be positive");
    Scenario s;
    s.kind = ScenarioKind::IteratedIntegral;
    s.name = "iterated_integral";
    s.d = 2;
    s.phi_kind = UpdatingKind::ProcessItself;
    s.trunc = TruncationSpec::none();
    s.mu = mu;
    s.lambda = lambda;
    s.jump_kernel = LevyKernel::single_atom({1.0}, lambda);
    s.has_latent = false;
    s.has_oracle = true;
    s.bound_b_const = mu + lambda;
    s.bound_b_lin = mu + lambda;
    s.bound_c = 0.0;
    s.bound_rate = lambda;
    return s;
}

Scenario builtin_scenario(const std::string& name) {
    if (name == "random_drift_sign") return make_random_drift_sign();
    if (name == "mixed_poisson") return make_mixed_poisson(0.5, 1.0, 4.0);
    if (name == "sup_dependent_vol") return make_sup_dependent_vol();
    if (name == "iterated_integral") return make_iterated_integral(0.5, 2.0);
    if (name == "constant") {
        return make_constant_scenario({0.0}, {0.0}, LevyKernel::zero(1), TruncationSpec::hard(1.0));
    }
    throw ConfigError("unknown scenario: " + name);
}

}  // namespace mimic
