#pragma once

#include "mimic/ensemble.hpp"
#include "mimic/scenario.hpp"

namespace mimic {

// Per-step characteristics supplier driving a simulation: the source process
// itself, a closed-form projection, or an estimated projection table.
class StepCharProvider {
public:
    virtual ~StepCharProvider() = default;
    virtual bool has_latent() const { return false; }
    virtual double sample_latent(std::mt19937_64&) const { return 0.0; }
    virtual void initial_state(std::span<double> z0) const {
        for (auto& v : z0) v = 0.0;
    }
    virtual std::vector<LevyKernel> fixed_kernels() const { return {}; }
    // fallback is set to 1 when the provider had to resolve (t, z) outside
    // any populated bin.
    virtual void eval(double t, std::span<const double> z, double latent, StepChars& out,
                      std::uint32_t& fallback) const = 0;
};

struct SimMeta {
    std::string scenario_name;
    std::string source_kind;
    std::size_t d = 1;
    UpdatingKind phi_kind = UpdatingKind::ProcessItself;
    TruncationSpec trunc;
};

// Euler scheme with per-step Poisson jump thinning. Each particle consumes an
// independent RNG substream, so the result is bit-identical for any thread
// count. Throws ScenarioError when rate*dt exceeds 1 or a step covariance is
// not decomposable.
ParticleEnsemble simulate_core(const SimMeta& meta, const StepCharProvider& provider,
                               const SimConfig& cfg, int threads);

// Plain serial loop over particles, kept as the reference implementation for
// the OpenMP path.
ParticleEnsemble simulate_core_serial(const SimMeta& meta, const StepCharProvider& provider,
                                      const SimConfig& cfg);

ParticleEnsemble simulate_ensemble(const Scenario& scn, const SimConfig& cfg, int threads);
ParticleEnsemble simulate_ensemble_serial(const Scenario& scn, const SimConfig& cfg);

}  // namespace mimic
