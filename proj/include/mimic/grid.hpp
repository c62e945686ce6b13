#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace mimic {

// Uniform time grid t_i = i*dt, i = 0..n_steps, starting at 0. Paths produced
// by the shift/difference operators may be truncated down to a single point
// (n_steps == 0); simulation configs require at least one step.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double dt, std::size_t n_steps) : dt_(dt), n_steps_(n_steps) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    }

    double dt() const { return dt_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t n_times() const { return n_steps_ + 1; }
    double horizon() const { return dt_ * static_cast<double>(n_steps_); }
    double time(std::size_t i) const { return dt_ * static_cast<double>(i); }

    // Index of a grid-aligned time; throws if t is off the grid.
    std::size_t index_of(double t) const {
        double r = t / dt_;
        auto i = static_cast<long long>(std::llround(r));
        if (i < 0 || static_cast<std::size_t>(i) > n_steps_ ||
            std::abs(t - static_cast<double>(i) * dt_) > 1e-9 * dt_) {
            throw std::invalid_argument("TimeGrid: time not aligned with grid");
        }
        return static_cast<std::size_t>(i);
    }

    // Largest grid index with t_i <= t (clamped to the grid).
    std::size_t floor_index(double t) const {
        if (t <= 0.0) return 0;
        auto i = static_cast<long long>(std::floor(t / dt_ + 1e-9));
        if (i < 0) return 0;
        return std::min(static_cast<std::size_t>(i), n_steps_);
    }

    bool operator==(const TimeGrid& o) const { return dt_ == o.dt_ && n_steps_ == o.n_steps_; }

private:
    double dt_ = 1.0;
    std::size_t n_steps_ = 0;
};

}  // namespace mimic
