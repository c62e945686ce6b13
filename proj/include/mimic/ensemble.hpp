#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mimic/characteristics.hpp"
#include "mimic/grid.hpp"
#include "mimic/levy_kernel.hpp"
#include "mimic/scenario.hpp"
#include "mimic/updating.hpp"

namespace mimic {

struct SimConfig {
    std::size_t n_particles = 1000;
    TimeGrid grid{1.0 / 256.0, 256};
    std::uint64_t seed = 1;
    bool store_characteristics = true;

    void validate() const;
};

enum class ColumnMode { PerParticle, PerStep };

// Realized-characteristics column. Scenarios whose coefficients are constant
// along each path store one value per particle instead of one per step.
template <typename T>
class CharColumn {
public:
    void init(ColumnMode mode, std::size_t n_particles, std::size_t n_steps, std::size_t width) {
        mode_ = mode;
        width_ = width;
        n_steps_ = n_steps;
        data_.assign((mode == ColumnMode::PerParticle ? n_particles : n_particles * n_steps) *
                         width,
                     T{});
    }
    ColumnMode mode() const { return mode_; }
    std::size_t width() const { return width_; }
    bool empty() const { return data_.empty(); }

    T* slot(std::size_t p, std::size_t s) {
        std::size_t row = mode_ == ColumnMode::PerParticle ? p : p * n_steps_ + s;
        return data_.data() + row * width_;
    }
    const T* at(std::size_t p, std::size_t s) const {
        std::size_t row = mode_ == ColumnMode::PerParticle ? p : p * n_steps_ + s;
        return data_.data() + row * width_;
    }
    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

private:
    ColumnMode mode_ = ColumnMode::PerStep;
    std::size_t width_ = 1;
    std::size_t n_steps_ = 0;
    std::vector<T> data_;
};

// One jump mark: attributed to the transition step -> step+1.
struct JumpRec {
    std::uint32_t step = 0;
    double delta[2] = {0.0, 0.0};
};

// N simulated paths with per-step realized characteristics; the regression
// dataset. The functional state path Z is not stored: it is recomputed from
// (Z_0, Y) through the updating function, exactly.
class ParticleEnsemble {
public:
    std::string scenario_name;
    std::string source_kind = "source";  // source | oracle | estimated
    std::size_t d = 1;
    std::size_t dim_e = 1;
    UpdatingKind phi_kind = UpdatingKind::ProcessItself;
    TruncationSpec trunc;
    SimConfig cfg;

    std::shared_ptr<KernelPool> pool;
    std::vector<double> y;       // P x (S+1) x d
    std::vector<double> z0;      // P x dim_e
    std::vector<double> latent;  // P, empty when the scenario has none
    std::vector<std::vector<JumpRec>> jumps;

    bool has_chars = false;
    CharColumn<double> b_col;
    CharColumn<double> c_col;  // packed symmetric
    CharColumn<std::uint32_t> kid_col;

    std::size_t fallback_count = 0;   // mimic lookups resolved to a non-containing bin
    std::size_t lookup_count = 0;
    bool flagged = false;             // fallback fraction above 1%
    double max_rate_dt = 0.0;
    std::size_t thinning_warnings = 0;

    std::size_t n_particles() const { return cfg.n_particles; }
    std::size_t n_steps() const { return cfg.grid.n_steps(); }

    double y_at(std::size_t p, std::size_t i, std::size_t j) const {
        return y[(p * (n_steps() + 1) + i) * d + j];
    }
    std::span<const double> y_row(std::size_t p, std::size_t i) const {
        return {y.data() + (p * (n_steps() + 1) + i) * d, d};
    }

    const double* b_at(std::size_t p, std::size_t s) const { return b_col.at(p, s); }
    const double* c_at(std::size_t p, std::size_t s) const { return c_col.at(p, s); }
    std::uint32_t kid_at(std::size_t p, std::size_t s) const { return *kid_col.at(p, s); }

    CharRealization char_at(std::size_t p, std::size_t s) const {
        const double* bp = b_at(p, s);
        const double* cp = c_at(p, s);
        return CharRealization{{bp, bp + d}, {cp, cp + d * (d + 1) / 2}, pool->at(kid_at(p, s))};
    }

    // Walks the functional state along particle p's path; f(i, state) is
    // called for every grid index i = 0..n_steps.
    template <typename F>
    void scan_z(std::size_t p, F&& f) const {
        UpdatingFunction phi = UpdatingFunction::builtin(phi_kind, d);
        std::vector<double> state(z0.begin() + p * dim_e, z0.begin() + (p + 1) * dim_e);
        f(std::size_t{0}, std::span<const double>(state));
        std::vector<double> delta(d);
        std::vector<double> marks;
        const auto& js = jumps[p];
        std::size_t jpos = 0;
        for (std::size_t i = 0; i < n_steps(); ++i) {
            for (std::size_t j = 0; j < d; ++j) delta[j] = y_at(p, i + 1, j) - y_at(p, i, j);
            marks.clear();
            while (jpos < js.size() && js[jpos].step == i) {
                marks.insert(marks.end(), js[jpos].delta, js[jpos].delta + d);
                ++jpos;
            }
            phi.step_update(state, delta, marks, cfg.grid.dt());
            f(i + 1, std::span<const double>(state));
        }
    }

    // Z values of all particles at the given grid indices, as a dense
    // [particle][query][component] array.
    std::vector<double> z_at_steps(const std::vector<std::size_t>& steps, int threads) const;

    // Z path of one particle as a CadlagPath (used in tests and validation).
    CadlagPath z_path(std::size_t p) const;
    CadlagPath y_path(std::size_t p) const;
};

}  // namespace mimic
