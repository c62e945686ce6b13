#include "mimic/mimic_sim.hpp"

#include <cmath>
#include <stdexcept>

#include "mimic/errors.hpp"

namespace mimic {

MimicSource MimicSource::oracle(const Scenario& scn) {
    if (!scn.has_oracle) throw ScenarioError("scenario has no closed-form projection: " + scn.name);
    MimicSource src;
    src.scn_ = &scn;
    return src;
}

MimicSource MimicSource::estimated(const ProjectedCharacteristics& pc) {
    MimicSource src;
    src.table_ = &pc;
    return src;
}

SimMeta MimicSource::meta() const {
    SimMeta m;
    if (is_oracle()) {
        m.scenario_name = scn_->name;
        m.source_kind = "oracle";
        m.d = scn_->d;
        m.phi_kind = scn_->phi_kind;
        m.trunc = scn_->trunc;
    } else {
        m.scenario_name = table_->scenario_name;
        m.source_kind = "estimated";
        m.d = table_->d;
        m.phi_kind = table_->phi_kind;
        m.trunc = table_->trunc;
    }
    return m;
}

namespace {

class OracleProvider : public StepCharProvider {
public:
    explicit OracleProvider(const Scenario& scn) : scn_(scn) {}
    void initial_state(std::span<double> z0) const override { scn_.initial_state(z0); }
    std::vector<LevyKernel> fixed_kernels() const override { return scn_.fixed_kernels(); }
    void eval(double t, std::span<const double> z, double, StepChars& out,
              std::uint32_t& fallback) const override {
        fallback = 0;
        scn_.oracle_chars(t, z, out);
    }

private:
    const Scenario& scn_;
};

// Table-backed provider: the flattened in-bin mixture is handed to the
// simulator as an inline kernel when small enough, otherwise through the
// fixed-kernel list built from all distinct flat kernels.
class TableProvider : public StepCharProvider {
public:
    explicit TableProvider(const ProjectedCharacteristics& pc) : pc_(pc) {
        for (const auto& sl : pc_.slices) {
            for (const auto& bin : sl.groups) {
                if (slot_of_.size() <= bin.flat_kernel_id) slot_of_.resize(bin.flat_kernel_id + 1, -1);
                if (slot_of_[bin.flat_kernel_id] < 0) {
                    slot_of_[bin.flat_kernel_id] = static_cast<int>(fixed_.size());
                    fixed_.push_back(pc_.pool->at(bin.flat_kernel_id));
                }
            }
        }
    }

    std::vector<LevyKernel> fixed_kernels() const override { return fixed_; }

    void eval(double t, std::span<const double> z, double, StepChars& out,
              std::uint32_t& fallback) const override {
        LookupResult res = pc_.lookup(t, z);
        fallback = res.fallback ? 1 : 0;
        const BinProj& bin = *res.bin;
        const std::size_t d = pc_.d;
        for (std::size_t j = 0; j < d; ++j) out.b[j] = bin.b_hat[j];
        for (std::size_t j = 0; j < packed_size(d); ++j) out.c[j] = bin.c_hat_packed[j];
        out.fixed_slot = slot_of_[bin.flat_kernel_id];
    }

private:
    const ProjectedCharacteristics& pc_;
    std::vector<LevyKernel> fixed_;
    std::vector<int> slot_of_;
};

}  // namespace

ParticleEnsemble simulate_mimic(const MimicSource& src, const SimConfig& cfg, int threads) {
    SimMeta meta = src.meta();
    if (src.is_oracle()) {
        OracleProvider provider(*src.scenario());
        return simulate_core(meta, provider, cfg, threads);
    }
    TableProvider provider(*src.table());
    return simulate_core(meta, provider, cfg, threads);
}

ParticleEnsemble simulate_mimic_serial(const MimicSource& src, const SimConfig& cfg) {
    return simulate_mimic(src, cfg, 1);
}

StructureReport check_structure_preservation(const ParticleEnsemble& ens, double tol) {
    if (ens.d != 2) throw std::invalid_argument("structure check requires a 2-d pair ensemble");
    StructureReport rep;
    for (std::size_t p = 0; p < ens.n_particles(); ++p) {
        for (const auto& jr : ens.jumps[p]) {
            ++rep.total_jumps;
            double x_left = ens.y_at(p, jr.step, 0);
            if (std::abs(jr.delta[1] - x_left * jr.delta[0]) > tol) ++rep.violations;
        }
    }
    return rep;
}

}  // namespace mimic
