#pragma once

#include "mimic/ensemble.hpp"
#include "mimic/projector.hpp"
#include "mimic/scenario.hpp"
#include "mimic/simulate.hpp"

namespace mimic {

// Coefficient source for the mimicking process: either the source scenario's
// closed-form projection or an estimated projection table. The initial state
// law is the source scenario's, carried over by construction.
class MimicSource {
public:
    static MimicSource oracle(const Scenario& scn);
    static MimicSource estimated(const ProjectedCharacteristics& pc);

    bool is_oracle() const { return table_ == nullptr; }
    const Scenario* scenario() const { return scn_; }
    const ProjectedCharacteristics* table() const { return table_; }

    SimMeta meta() const;

private:
    const Scenario* scn_ = nullptr;
    const ProjectedCharacteristics* table_ = nullptr;
};

// Simulates (Ẑ_0, Ŷ) with the same Euler + thinning scheme as the source
// simulator, evaluating projected coefficients at (t, Ẑ_t). States that
// resolve outside every populated bin fall back to the nearest bin and are
// counted; the run is flagged when more than 1% of lookups fall back.
ParticleEnsemble simulate_mimic(const MimicSource& src, const SimConfig& cfg, int threads);
ParticleEnsemble simulate_mimic_serial(const MimicSource& src, const SimConfig& cfg);

struct StructureReport {
    std::size_t total_jumps = 0;
    std::size_t violations = 0;

    double violation_fraction() const {
        return total_jumps == 0 ? 0.0 : static_cast<double>(violations) /
                                            static_cast<double>(total_jumps);
    }
};

// For 2-d pair ensembles (X, ∫X_- dX): checks ΔY2 = X_left · ΔY1 for every
// recorded jump, where X_left is the pre-transition grid value.
StructureReport check_structure_preservation(const ParticleEnsemble& ens, double tol = 1e-10);

}  // namespace mimic
