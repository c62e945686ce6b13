#include "mimic/updating.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mimic/rng.hpp"

namespace mimic {

const char* updating_kind_name(UpdatingKind kind) {
    switch (kind) {
        case UpdatingKind::ProcessItself: return "process_itself";
        case UpdatingKind::IntegralToDate: return "integral_to_date";
        case UpdatingKind::SupremumToDate: return "supremum_to_date";
        case UpdatingKind::MaxJumpToDate: return "max_jump_to_date";
        case UpdatingKind::Custom: return "custom";
    }
    return "?";
}

UpdatingKind updating_kind_from_name(const std::string& name) {
    if (name == "process_itself") return UpdatingKind::ProcessItself;
    if (name == "integral_to_date") return UpdatingKind::IntegralToDate;
    if (name == "supremum_to_date") return UpdatingKind::SupremumToDate;
    if (name == "max_jump_to_date") return UpdatingKind::MaxJumpToDate;
    throw std::invalid_argument("unknown updating function: " + name);
}

UpdatingFunction UpdatingFunction::builtin(UpdatingKind kind, std::size_t driving_dim) {
    UpdatingFunction u;
    u.kind_ = kind;
    u.name_ = updating_kind_name(kind);
    switch (kind) {
        case UpdatingKind::ProcessItself:
            u.space_ = StateSpace{driving_dim, {}};
            u.driving_dim_ = driving_dim;
            break;
        case UpdatingKind::IntegralToDate:
            if (driving_dim != 1) throw std::invalid_argument("integral_to_date requires d=1");
            u.space_ = StateSpace{2, {}};
            u.driving_dim_ = 1;
            break;
        case UpdatingKind::SupremumToDate:
            if (driving_dim != 1) throw std::invalid_argument("supremum_to_date requires d=1");
            u.space_ = StateSpace{2, [](std::span<const double> e) { return e[0] <= e[1]; }};
            u.driving_dim_ = 1;
            break;
        case UpdatingKind::MaxJumpToDate:
            if (driving_dim != 1) throw std::invalid_argument("max_jump_to_date requires d=1");
            u.space_ = StateSpace{2, [](std::span<const double> e) { return e[1] >= 0.0; }};
            u.driving_dim_ = 1;
            break;
        case UpdatingKind::Custom:
            throw std::invalid_argument("use UpdatingFunction::custom");
    }
    return u;
}

UpdatingFunction UpdatingFunction::custom(StateSpace space, std::size_t driving_dim,
                                          CustomApply apply, std::string name) {
    UpdatingFunction u;
    u.kind_ = UpdatingKind::Custom;
    u.space_ = std::move(space);
    u.driving_dim_ = driving_dim;
    u.custom_ = std::move(apply);
    u.name_ = std::move(name);
    return u;
}

void UpdatingFunction::step_update(std::span<double> state, std::span<const double> delta,
                                   std::span<const double> marks, double dt) const {
    switch (kind_) {
        case UpdatingKind::ProcessItself:
            for (std::size_t j = 0; j < driving_dim_; ++j) state[j] += delta[j];
            break;
        case UpdatingKind::IntegralToDate:
            state[1] += state[0] * dt;
            state[0] += delta[0];
            break;
        case UpdatingKind::SupremumToDate:
            state[0] += delta[0];
            state[1] = std::max(state[1], state[0]);
            break;
        case UpdatingKind::MaxJumpToDate:
            for (std::size_t k = 0; k * driving_dim_ < marks.size(); ++k) {
                state[1] = std::max(state[1], marks[k * driving_dim_]);
            }
            state[0] += delta[0];
            break;
        case UpdatingKind::Custom:
            throw std::logic_error("custom updating functions have no step form");
    }
}

CadlagPath UpdatingFunction::apply(std::span<const double> initial_state,
                                   const CadlagPath& x) const {
    if (x.dim() != driving_dim_) throw std::invalid_argument("apply: driving dimension mismatch");
    for (std::size_t j = 0; j < driving_dim_; ++j) {
        if (x.at(0, j) != 0.0) throw std::invalid_argument("apply: increment path must start at 0");
    }
    if (initial_state.size() != space_.dim || !space_.contains(initial_state)) {
        throw std::invalid_argument("apply: initial state violates the state constraint");
    }
    if (kind_ == UpdatingKind::Custom) return custom_(initial_state, x);

    std::size_t n = x.grid().n_steps();
    std::size_t de = space_.dim;
    std::vector<double> values((n + 1) * de);
    std::vector<double> state(initial_state.begin(), initial_state.end());
    std::copy(state.begin(), state.end(), values.begin());
    std::vector<double> delta(driving_dim_);
    std::vector<double> marks;
    const auto& jumps = x.jumps();
    std::size_t jpos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < driving_dim_; ++j) delta[j] = x.at(i + 1, j) - x.at(i, j);
        marks.clear();
        while (jpos < jumps.size() && jumps[jpos].index == i + 1) {
            marks.insert(marks.end(), jumps[jpos].delta.begin(), jumps[jpos].delta.end());
            ++jpos;
        }
        step_update(state, delta, marks, x.grid().dt());
        std::copy(state.begin(), state.end(), values.begin() + (i + 1) * de);
    }

    // State-path jumps mirror the driving jumps; recorded only for kinds whose
    // state components actually jump with them.
    std::vector<Jump> out_jumps;
    for (const auto& j : x.jumps()) {
        Jump oj;
        oj.index = j.index;
        oj.delta.assign(de, 0.0);
        bool nonzero = false;
        switch (kind_) {
            case UpdatingKind::ProcessItself:
                oj.delta = j.delta;
                break;
            case UpdatingKind::IntegralToDate:
            case UpdatingKind::SupremumToDate:
            case UpdatingKind::MaxJumpToDate:
                oj.delta[0] = j.delta[0];
                break;
            case UpdatingKind::Custom: break;
        }
        for (double v : oj.delta) nonzero = nonzero || v != 0.0;
        if (nonzero) out_jumps.push_back(std::move(oj));
    }
    return CadlagPath(x.grid(), de, std::move(values), std::move(out_jumps));
}

namespace {

// Random piecewise-constant path on a dyadic lattice: increments and jumps
// are multiples of 2^-8, so every identity checked below is exact.
CadlagPath random_dyadic_path(std::mt19937_64& rng, std::size_t dim) {
    std::uniform_int_distribution<int> steps_dist(4, 24);
    std::uniform_int_distribution<int> incr(-64, 64);
    std::uniform_int_distribution<int> coin(0, 3);
    std::size_t n = static_cast<std::size_t>(steps_dist(rng));
    TimeGrid grid(0.25, n);
    std::vector<double> values((n + 1) * dim, 0.0);
    std::vector<Jump> jumps;
    const double unit = 1.0 / 256.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            double cont = incr(rng) * unit;
            double total = cont;
            if (coin(rng) == 0) {
                int jv = 0;
                while (jv == 0) jv = incr(rng);
                double jump = jv * unit;
                total += jump;
                std::vector<double> delta(dim, 0.0);
                delta[j] = jump;
                jumps.push_back({i + 1, std::move(delta)});
            }
            values[(i + 1) * dim + j] = values[i * dim + j] + total;
        }
    }
    return CadlagPath(grid, dim, std::move(values), std::move(jumps));
}

std::vector<double> random_initial_state(std::mt19937_64& rng, const UpdatingFunction& phi) {
    std::uniform_int_distribution<int> incr(-64, 64);
    const double unit = 1.0 / 256.0;
    std::vector<double> e(phi.state_dim());
    for (auto& v : e) v = incr(rng) * unit;
    switch (phi.kind()) {
        case UpdatingKind::SupremumToDate:
            e[1] = std::max(e[0], e[1]);
            break;
        case UpdatingKind::MaxJumpToDate:
            e[1] = std::abs(e[1]);
            break;
        default: break;
    }
    return e;
}

}  // namespace

AxiomReport check_axioms(const UpdatingFunction& phi, std::size_t trials, std::uint64_t rng_seed,
                         std::size_t times_per_trial) {
    AxiomReport report;
    report.trials = trials;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        auto rng = substream(rng_seed, trial);
        CadlagPath x = random_dyadic_path(rng, phi.driving_dim());
        std::vector<double> e = random_initial_state(rng, phi);
        CadlagPath z = phi.apply(e, x);

        // (i) initial condition
        ++report.checks;
        for (std::size_t j = 0; j < phi.state_dim(); ++j) {
            if (z.at(0, j) != e[j]) {
                report.violations.push_back({1, trial, 0.0});
                break;
            }
        }

        std::uniform_int_distribution<std::size_t> tdist(0, x.grid().n_steps());
        for (std::size_t k = 0; k < times_per_trial; ++k) {
            double t = x.grid().time(tdist(rng));
            // (ii) nonanticipativity
            ++report.checks;
            if (!stop(z, t).same_values(stop(phi.apply(e, stop(x, t)), t))) {
                report.violations.push_back({2, trial, t});
            }
            // (iii) flow property
            ++report.checks;
            std::size_t it = x.grid().index_of(t);
            std::vector<double> zt(z.at(it).begin(), z.at(it).end());
            if (!shift(z, t).same_values(phi.apply(zt, diff(x, t)))) {
                report.violations.push_back({3, trial, t});
            }
        }
    }
    return report;
}

}  // namespace mimic
