#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mimic/grid.hpp"

namespace mimic {

// A jump attributed to the grid transition `index-1 -> index`: the increment
// values[index] - values[index-1] contains `delta` on top of any continuous
// movement. Several jumps may share an index.
struct Jump {
    std::size_t index = 0;
    std::vector<double> delta;
};

// Right-continuous path, piecewise constant between grid times, with recorded
// jumps. Immutable after construction.
class CadlagPath {
public:
    CadlagPath() = default;
    CadlagPath(TimeGrid grid, std::size_t dim, std::vector<double> values,
               std::vector<Jump> jumps = {});

    static CadlagPath constant(TimeGrid grid, std::vector<double> value);

    const TimeGrid& grid() const { return grid_; }
    std::size_t dim() const { return dim_; }
    const std::vector<Jump>& jumps() const { return jumps_; }
    const std::vector<double>& values() const { return values_; }

    std::span<const double> at(std::size_t i) const {
        return {values_.data() + i * dim_, dim_};
    }
    double at(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }

    bool same_values(const CadlagPath& other) const;

private:
    TimeGrid grid_;
    std::size_t dim_ = 0;
    std::vector<double> values_;  // (n_steps+1) x dim, row-major
    std::vector<Jump> jumps_;     // sorted by index, indices in [1, n_steps]
};

// x(t + .) restricted to the remaining horizon. Jumps at or before t are
// absorbed into the initial value.
CadlagPath shift(const CadlagPath& x, double t);

// x(t ∧ .): frozen after t, same grid; jumps after t removed.
CadlagPath stop(const CadlagPath& x, double t);

// x(t + .) - x(t); result starts at 0.
CadlagPath diff(const CadlagPath& x, double t);

}  // namespace mimic
