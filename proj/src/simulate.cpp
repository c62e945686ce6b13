#include "mimic/simulate.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "mimic/errors.hpp"
#include "mimic/parallel.hpp"
#include "mimic/rng.hpp"

namespace mimic {

namespace {

struct InlineKey {
    std::array<std::uint64_t, 7> w{};
    bool operator==(const InlineKey& o) const { return w == o.w; }
};

struct InlineKeyHash {
    std::size_t operator()(const InlineKey& k) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (std::uint64_t v : k.w) {
            h ^= v;
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

InlineKey make_key(const InlineKernel& k) {
    InlineKey key;
    key.w[0] = (static_cast<std::uint64_t>(k.dim) << 32) | k.n_atoms;
    std::memcpy(&key.w[1], &k.xi[0][0], 4 * sizeof(double));
    std::memcpy(&key.w[5], &k.rate[0], 2 * sizeof(double));
    return key;
}

// Packed 2x2 (or 1x1) Cholesky with a small tolerance for roundoff-negative
// eigenvalues. Returns false when the matrix is not PSD beyond tolerance.
bool chol_packed(std::size_t d, const double* c, double* l) {
    const double tol = 1e-10;
    double scale = 0.0;
    for (std::size_t i = 0; i < packed_size(d); ++i) scale = std::max(scale, std::abs(c[i]));
    double eps = tol * std::max(1.0, scale);
    if (c[0] < -eps) return false;
    l[0] = std::sqrt(std::max(c[0], 0.0));
    if (d == 1) return true;
    if (l[0] > 0.0) {
        l[1] = c[1] / l[0];
    } else {
        if (std::abs(c[1]) > eps) return false;
        l[1] = 0.0;
    }
    double s = c[2] - l[1] * l[1];
    if (s < -eps) return false;
    l[2] = std::sqrt(std::max(s, 0.0));
    return true;
}

struct ColumnModes {
    ColumnMode b = ColumnMode::PerStep;
    ColumnMode c = ColumnMode::PerStep;
    ColumnMode kid = ColumnMode::PerStep;
};

ColumnModes modes_for(const SimMeta& meta) {
    ColumnModes m;
    if (meta.source_kind != "source") return m;
    if (meta.scenario_name == "constant" || meta.scenario_name == "random_drift_sign" ||
        meta.scenario_name == "mixed_poisson") {
        m.b = m.c = m.kid = ColumnMode::PerParticle;
    } else if (meta.scenario_name == "sup_dependent_vol") {
        m.b = ColumnMode::PerParticle;
        m.c = ColumnMode::PerStep;
        m.kid = ColumnMode::PerParticle;
    } else if (meta.scenario_name == "iterated_integral") {
        m.b = ColumnMode::PerStep;
        m.c = ColumnMode::PerParticle;
        m.kid = ColumnMode::PerStep;
    }
    return m;
}

}  // namespace

ParticleEnsemble simulate_core(const SimMeta& meta, const StepCharProvider& provider,
                               const SimConfig& cfg, int threads) {
    cfg.validate();
    const std::size_t P = cfg.n_particles;
    const std::size_t S = cfg.grid.n_steps();
    const std::size_t d = meta.d;
    const double dt = cfg.grid.dt();
    const double sqrt_dt = std::sqrt(dt);

    ParticleEnsemble ens;
    ens.scenario_name = meta.scenario_name;
    ens.source_kind = meta.source_kind;
    ens.d = d;
    ens.phi_kind = meta.phi_kind;
    ens.trunc = meta.trunc;
    ens.cfg = cfg;
    UpdatingFunction phi = UpdatingFunction::builtin(meta.phi_kind, d);
    ens.dim_e = phi.state_dim();
    ens.pool = std::make_shared<KernelPool>();
    ens.y.assign(P * (S + 1) * d, 0.0);
    ens.z0.assign(P * ens.dim_e, 0.0);
    if (provider.has_latent()) ens.latent.assign(P, 0.0);
    ens.jumps.assign(P, {});
    ens.has_chars = cfg.store_characteristics;
    if (ens.has_chars) {
        ColumnModes modes = modes_for(meta);
        ens.b_col.init(modes.b, P, S, d);
        ens.c_col.init(modes.c, P, S, packed_size(d));
        ens.kid_col.init(modes.kid, P, S, 1);
    }

    // Stable per-kernel data for the hot loop: id, total rate, drift
    // compensation ∫ h dκ, and a pointer that outlives concurrent interning.
    struct KernelInfo {
        std::uint32_t kid = 0;
        double rate = 0.0;
        std::array<double, 2> comp{0.0, 0.0};
        const LevyKernel* kernel = nullptr;
    };
    auto make_info = [&](std::uint32_t kid) {
        KernelInfo info;
        info.kid = kid;
        info.kernel = ens.pool->stable_ref(kid);
        info.rate = info.kernel->total_rate();
        auto tm = info.kernel->truncated_mean(meta.trunc);
        for (std::size_t j = 0; j < d; ++j) info.comp[j] = tm[j];
        return info;
    };
    std::vector<KernelInfo> fixed_infos;
    for (const auto& k : provider.fixed_kernels()) fixed_infos.push_back(make_info(ens.pool->intern(k)));

    // Dynamic kernels repeat across particles (the same (t, state) values
    // recur), so the memo is shared across the whole run.
    std::mutex memo_mu;
    std::unordered_map<InlineKey, KernelInfo, InlineKeyHash> kernel_memo;
    auto resolve_inline = [&](const InlineKernel& inl) -> KernelInfo {
        InlineKey key = make_key(inl);
        {
            std::lock_guard<std::mutex> lock(memo_mu);
            auto it = kernel_memo.find(key);
            if (it != kernel_memo.end()) return it->second;
        }
        KernelInfo info = make_info(ens.pool->intern_inline(inl));
        std::lock_guard<std::mutex> lock(memo_mu);
        return kernel_memo.emplace(key, info).first->second;
    };

    std::vector<std::uint32_t> fallback_p(P, 0);
    std::vector<std::uint32_t> warn_p(P, 0);
    std::vector<double> maxrate_p(P, 0.0);

    std::mutex err_mu;
    std::string err_msg;

    parallel_for(P, threads, [&](std::size_t p) {
        try {
            auto rng = substream(cfg.seed, p);
            double latent = 0.0;
            if (provider.has_latent()) {
                latent = provider.sample_latent(rng);
                ens.latent[p] = latent;
            }
            std::vector<double> state(ens.dim_e, 0.0);
            provider.initial_state(state);
            std::copy(state.begin(), state.end(), ens.z0.begin() + p * ens.dim_e);

            std::normal_distribution<double> normal(0.0, 1.0);

            double* yrow = ens.y.data() + p * (S + 1) * d;
            StepChars sc;
            double g[2], dy[2], l[3], mk[2];
            std::vector<double> marks;
            for (std::size_t i = 0; i < S; ++i) {
                double t = cfg.grid.time(i);
                std::uint32_t fb = 0;
                provider.eval(t, state, latent, sc, fb);
                fallback_p[p] += fb;

                KernelInfo local_info;
                const KernelInfo* info;
                if (sc.fixed_slot >= 0) {
                    info = &fixed_infos[static_cast<std::size_t>(sc.fixed_slot)];
                } else {
                    local_info = resolve_inline(sc.inl);
                    info = &local_info;
                }
                if (ens.has_chars) {
                    std::copy(sc.b, sc.b + d, ens.b_col.slot(p, i));
                    std::copy(sc.c, sc.c + packed_size(d), ens.c_col.slot(p, i));
                    *ens.kid_col.slot(p, i) = info->kid;
                }

                for (std::size_t j = 0; j < d; ++j) g[j] = normal(rng);
                if (!chol_packed(d, sc.c, l)) {
                    throw ScenarioError("step covariance is not positive semidefinite");
                }
                dy[0] = (sc.b[0] - info->comp[0]) * dt + sqrt_dt * l[0] * g[0];
                if (d == 2) {
                    dy[1] = (sc.b[1] - info->comp[1]) * dt + sqrt_dt * (l[1] * g[0] + l[2] * g[1]);
                }

                double rate_dt = info->rate * dt;
                maxrate_p[p] = std::max(maxrate_p[p], rate_dt);
                if (rate_dt > 1.0) {
                    throw ScenarioError("jump intensity too high for the step size");
                }
                if (rate_dt > 0.1) ++warn_p[p];
                long long njumps = 0;
                if (info->rate > 0.0) {
                    std::poisson_distribution<long long> pois(rate_dt);
                    njumps = pois(rng);
                }
                marks.clear();
                for (long long k = 0; k < njumps; ++k) {
                    info->kernel->sample_mark(rng, std::span<double>(mk, d));
                    JumpRec rec;
                    rec.step = static_cast<std::uint32_t>(i);
                    for (std::size_t j = 0; j < d; ++j) {
                        rec.delta[j] = mk[j];
                        dy[j] += mk[j];
                        marks.push_back(mk[j]);
                    }
                    ens.jumps[p].push_back(rec);
                }

                std::span<const double> delta(dy, d);
                for (std::size_t j = 0; j < d; ++j) yrow[(i + 1) * d + j] = yrow[i * d + j] + dy[j];
                phi.step_update(state, delta, marks, dt);
            }
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (err_msg.empty()) err_msg = e.what();
        }
    });

    if (!err_msg.empty()) throw ScenarioError(err_msg);

    for (std::size_t p = 0; p < P; ++p) {
        ens.fallback_count += fallback_p[p];
        ens.thinning_warnings += warn_p[p];
        ens.max_rate_dt = std::max(ens.max_rate_dt, maxrate_p[p]);
    }
    ens.lookup_count = P * S;
    ens.flagged = ens.fallback_count * 100 > ens.lookup_count;

    auto remap = ens.pool->canonicalize();
    if (ens.has_chars) {
        for (auto& kid : ens.kid_col.raw()) kid = remap[kid];
    }
    return ens;
}

ParticleEnsemble simulate_core_serial(const SimMeta& meta, const StepCharProvider& provider,
                                      const SimConfig& cfg) {
    return simulate_core(meta, provider, cfg, 1);
}

namespace {

class ScenarioProvider : public StepCharProvider {
public:
    explicit ScenarioProvider(const Scenario& scn) : scn_(scn) {}
    bool has_latent() const override { return scn_.has_latent; }
    double sample_latent(std::mt19937_64& rng) const override { return scn_.sample_latent(rng); }
    void initial_state(std::span<double> z0) const override { scn_.initial_state(z0); }
    std::vector<LevyKernel> fixed_kernels() const override { return scn_.fixed_kernels(); }
    void eval(double t, std::span<const double> z, double latent, StepChars& out,
              std::uint32_t& fallback) const override {
        fallback = 0;
        scn_.step_chars(t, z, latent, out);
    }

private:
    const Scenario& scn_;
};

}  // namespace

ParticleEnsemble simulate_ensemble(const Scenario& scn, const SimConfig& cfg, int threads) {
    SimMeta meta{scn.name, "source", scn.d, scn.phi_kind, scn.trunc};
    ScenarioProvider provider(scn);
    return simulate_core(meta, provider, cfg, threads);
}

ParticleEnsemble simulate_ensemble_serial(const Scenario& scn, const SimConfig& cfg) {
    SimMeta meta{scn.name, "source", scn.d, scn.phi_kind, scn.trunc};
    ScenarioProvider provider(scn);
    return simulate_core_serial(meta, provider, cfg);
}

}  // namespace mimic
