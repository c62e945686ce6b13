#include "mimic/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mimic {

CadlagPath::CadlagPath(TimeGrid grid, std::size_t dim, std::vector<double> values,
                       std::vector<Jump> jumps)
    : grid_(grid), dim_(dim), values_(std::move(values)), jumps_(std::move(jumps)) {
    if (dim_ == 0) throw std::invalid_argument("CadlagPath: dim must be positive");
    if (values_.size() != grid_.n_times() * dim_) {
        throw std::invalid_argument("CadlagPath: values size does not match grid");
    }
    for (const auto& j : jumps_) {
        if (j.index == 0 || j.index > grid_.n_steps()) {
            throw std::invalid_argument("CadlagPath: jump index out of range");
        }
        if (j.delta.size() != dim_) {
            throw std::invalid_argument("CadlagPath: jump dimension mismatch");
        }
        double norm2 = 0.0;
        for (double v : j.delta) norm2 += v * v;
        if (norm2 == 0.0) throw std::invalid_argument("CadlagPath: zero jump recorded");
    }
    std::stable_sort(jumps_.begin(), jumps_.end(),
                     [](const Jump& a, const Jump& b) { return a.index < b.index; });
}

CadlagPath CadlagPath::constant(TimeGrid grid, std::vector<double> value) {
    std::size_t dim = value.size();
    std::vector<double> values(grid.n_times() * dim);
    for (std::size_t i = 0; i < grid.n_times(); ++i) {
        std::copy(value.begin(), value.end(), values.begin() + i * dim);
    }
    return CadlagPath(grid, dim, std::move(values));
}

bool CadlagPath::same_values(const CadlagPath& other) const {
    return dim_ == other.dim_ && grid_ == other.grid_ && values_ == other.values_;
}

CadlagPath shift(const CadlagPath& x, double t) {
    std::size_t i0 = x.grid().index_of(t);
    std::size_t n = x.grid().n_steps() - i0;
    TimeGrid g(x.grid().dt(), n);
    std::vector<double> vals(x.values().begin() + i0 * x.dim(), x.values().end());
    std::vector<Jump> jumps;
    for (const auto& j : x.jumps()) {
        if (j.index > i0) jumps.push_back({j.index - i0, j.delta});
    }
    return CadlagPath(g, x.dim(), std::move(vals), std::move(jumps));
}

CadlagPath stop(const CadlagPath& x, double t) {
    std::size_t i0 = x.grid().index_of(t);
    std::vector<double> vals(x.values());
    for (std::size_t i = i0 + 1; i < x.grid().n_times(); ++i) {
        for (std::size_t j = 0; j < x.dim(); ++j) vals[i * x.dim() + j] = vals[i0 * x.dim() + j];
    }
    std::vector<Jump> jumps;
    for (const auto& j : x.jumps()) {
        if (j.index <= i0) jumps.push_back(j);
    }
    return CadlagPath(x.grid(), x.dim(), std::move(vals), std::move(jumps));
}

CadlagPath diff(const CadlagPath& x, double t) {
    std::size_t i0 = x.grid().index_of(t);
    std::size_t n = x.grid().n_steps() - i0;
    TimeGrid g(x.grid().dt(), n);
    std::vector<double> vals((n + 1) * x.dim());
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j < x.dim(); ++j) {
            vals[i * x.dim() + j] = x.at(i0 + i, j) - x.at(i0, j);
        }
    }
    std::vector<Jump> jumps;
    for (const auto& j : x.jumps()) {
        if (j.index > i0) jumps.push_back({j.index - i0, j.delta});
    }
    return CadlagPath(g, x.dim(), std::move(vals), std::move(jumps));
}

}  // namespace mimic
