#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "mimic/grid.hpp"
#include "mimic/levy_kernel.hpp"

namespace mimic {

// Running jump compensator weighted by 1 ∧ |xi|^2, accumulated on atoms:
// M_t(A) = sum over steps s < t of dt * ∫_A 1 ∧ |xi|^2 dκ_s. Nondecreasing in
// t for every atom location, M_0 = 0. Single writer; reads are safe once the
// writer is done.
class CompensatorAccumulator {
public:
    explicit CompensatorAccumulator(TimeGrid grid);

    // Adds the step contribution dt * (1 ∧ |xi|^2) * κ over the transition
    // step -> step+1. Steps must be fed consecutively starting at 0.
    void accumulate(std::size_t step, const LevyKernel& kernel, double dt);

    const TimeGrid& grid() const { return grid_; }
    std::size_t n_locations() const { return locations_.size(); }
    const std::vector<std::vector<double>>& locations() const { return locations_; }

    // Accumulated mass at grid time index for one registered atom location.
    double mass_at(std::size_t time_index, std::size_t location_index) const;
    double total_mass_at(std::size_t time_index) const;

private:
    TimeGrid grid_;
    std::size_t next_step_ = 0;
    std::vector<std::vector<double>> locations_;
    std::map<std::vector<double>, std::size_t> location_index_;
    // masses_[t] holds cumulative mass per location at grid time t.
    std::vector<std::vector<double>> masses_;
};

}  // namespace mimic
