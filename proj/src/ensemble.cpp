#include "mimic/ensemble.hpp"

#include <algorithm>

#include "mimic/errors.hpp"
#include "mimic/parallel.hpp"

namespace mimic {

void SimConfig::validate() const {
    if (n_particles < 1) throw ConfigError("sim config: n_particles must be at least 1");
    if (grid.n_steps() < 1) throw ConfigError("sim config: grid needs at least one step");
}

std::vector<double> ParticleEnsemble::z_at_steps(const std::vector<std::size_t>& steps,
                                                 int threads) const {
    std::vector<double> out(n_particles() * steps.size() * dim_e, 0.0);
    parallel_for(n_particles(), threads, [&](std::size_t p) {
        std::size_t q = 0;
        scan_z(p, [&](std::size_t i, std::span<const double> z) {
            while (q < steps.size() && steps[q] == i) {
                std::copy(z.begin(), z.end(),
                          out.begin() + (p * steps.size() + q) * dim_e);
                ++q;
            }
        });
    });
    return out;
}

CadlagPath ParticleEnsemble::z_path(std::size_t p) const {
    std::vector<double> values((n_steps() + 1) * dim_e);
    scan_z(p, [&](std::size_t i, std::span<const double> z) {
        std::copy(z.begin(), z.end(), values.begin() + i * dim_e);
    });
    return CadlagPath(cfg.grid, dim_e, std::move(values));
}

CadlagPath ParticleEnsemble::y_path(std::size_t p) const {
    std::vector<double> values(y.begin() + p * (n_steps() + 1) * d,
                               y.begin() + (p + 1) * (n_steps() + 1) * d);
    std::vector<Jump> js;
    for (const auto& r : jumps[p]) {
        js.push_back(Jump{r.step + 1, std::vector<double>(r.delta, r.delta + d)});
    }
    return CadlagPath(cfg.grid, d, std::move(values), std::move(js));
}

}  // namespace mimic
