#include "mimic/compensator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mimic {

CompensatorAccumulator::CompensatorAccumulator(TimeGrid grid) : grid_(grid) {
    masses_.resize(grid_.n_times());
}

void CompensatorAccumulator::accumulate(std::size_t step, const LevyKernel& kernel, double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument("CompensatorAccumulator: negative dt");
    if (step != next_step_) {
        throw std::invalid_argument("CompensatorAccumulator: steps must be consecutive");
    }
    if (step >= grid_.n_steps()) {
        throw std::invalid_argument("CompensatorAccumulator: step beyond grid");
    }
    masses_[step + 1] = masses_[step];
    for (const auto& atom : kernel.atoms()) {
        auto [it, inserted] = location_index_.try_emplace(atom.xi, locations_.size());
        if (inserted) locations_.push_back(atom.xi);
        std::size_t idx = it->second;
        if (masses_[step + 1].size() <= idx) masses_[step + 1].resize(idx + 1, 0.0);
        double n2 = 0.0;
        for (double v : atom.xi) n2 += v * v;
        double w = std::min(1.0, n2);
        masses_[step + 1][idx] += dt * atom.rate * w;
    }
    ++next_step_;
}

double CompensatorAccumulator::mass_at(std::size_t time_index, std::size_t location_index) const {
    const auto& row = masses_.at(time_index);
    if (location_index >= row.size()) return 0.0;
    return row[location_index];
}

double CompensatorAccumulator::total_mass_at(std::size_t time_index) const {
    const auto& row = masses_.at(time_index);
    double acc = 0.0;
    for (double v : row) acc += v;
    return acc;
}

}  // namespace mimic
