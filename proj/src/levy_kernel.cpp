#include "mimic/levy_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace mimic {

namespace {

void append_bits(std::string& key, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 7; i >= 0; --i) key.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

}  // namespace

void LevyKernel::finalize() {
    double atom_rate = 0.0;
    for (const auto& a : atoms_) {
        if (a.xi.size() != dim_) throw std::invalid_argument("LevyKernel: atom dimension mismatch");
        if (!(a.rate > 0.0)) throw std::invalid_argument("LevyKernel: atom rate must be positive");
        double n2 = 0.0;
        for (double v : a.xi) n2 += v * v;
        if (n2 == 0.0) throw std::invalid_argument("LevyKernel: atom at the origin");
        atom_rate += a.rate;
    }
    density_mass_ = 0.0;
    if (density_) {
        if (dim_ != 1) throw std::invalid_argument("LevyKernel: density kernels supported in d=1 only");
        if (!(density_->hi > density_->lo) || density_->n_points < 2) {
            throw std::invalid_argument("LevyKernel: density requires a declared bounded support");
        }
        // Midpoint rule per cell; the same cells back the sampling CDF.
        std::size_t n = density_->n_points;
        double w = (density_->hi - density_->lo) / static_cast<double>(n);
        density_cdf_.assign(n, 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = density_->lo + (static_cast<double>(i) + 0.5) * w;
            double d = density_->rate_density(x);
            if (!(d >= 0.0)) throw std::invalid_argument("LevyKernel: density must be nonnegative");
            acc += d * w;
            density_cdf_[i] = acc;
        }
        density_mass_ = acc;
    }
    total_rate_ = atom_rate + density_mass_;
    if (!std::isfinite(total_rate_)) throw std::invalid_argument("LevyKernel: non-finite total rate");
}

LevyKernel LevyKernel::zero(std::size_t dim) {
    LevyKernel k;
    k.dim_ = dim;
    k.finalize();
    return k;
}

LevyKernel LevyKernel::atomic(std::size_t dim, std::vector<KernelAtom> atoms) {
    LevyKernel k;
    k.dim_ = dim;
    k.atoms_ = std::move(atoms);
    k.finalize();
    return k;
}

LevyKernel LevyKernel::single_atom(std::vector<double> xi, double rate) {
    std::size_t dim = xi.size();
    return atomic(dim, {KernelAtom{std::move(xi), rate}});
}

LevyKernel LevyKernel::with_density(KernelDensity density, std::vector<KernelAtom> atoms) {
    LevyKernel k;
    k.dim_ = 1;
    k.atoms_ = std::move(atoms);
    k.density_ = std::move(density);
    k.finalize();
    return k;
}

double LevyKernel::integral(const std::function<double(std::span<const double>)>& f) const {
    double acc = 0.0;
    for (const auto& a : atoms_) acc += a.rate * f(a.xi);
    if (density_) {
        std::size_t n = density_->n_points;
        double w = (density_->hi - density_->lo) / static_cast<double>(n);
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = density_->lo + (static_cast<double>(i) + 0.5) * w;
            double cell_mass = density_cdf_[i] - prev;
            prev = density_cdf_[i];
            acc += cell_mass * f(std::span<const double>(&x, 1));
        }
    }
    return acc;
}

std::vector<double> LevyKernel::truncated_mean(const TruncationSpec& h) const {
    std::vector<double> out(dim_, 0.0);
    std::vector<double> hx(dim_);
    for (const auto& a : atoms_) {
        h.apply(a.xi, hx);
        for (std::size_t j = 0; j < dim_; ++j) out[j] += a.rate * hx[j];
    }
    if (density_) {
        std::size_t n = density_->n_points;
        double w = (density_->hi - density_->lo) / static_cast<double>(n);
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = density_->lo + (static_cast<double>(i) + 0.5) * w;
            double cell_mass = density_cdf_[i] - prev;
            prev = density_cdf_[i];
            h.apply(std::span<const double>(&x, 1), hx);
            out[0] += cell_mass * hx[0];
        }
    }
    return out;
}

std::vector<double> LevyKernel::tail_mean(const TruncationSpec& h) const {
    std::vector<double> out(dim_, 0.0);
    std::vector<double> hx(dim_);
    for (const auto& a : atoms_) {
        h.apply(a.xi, hx);
        for (std::size_t j = 0; j < dim_; ++j) out[j] += a.rate * (a.xi[j] - hx[j]);
    }
    if (density_) {
        std::size_t n = density_->n_points;
        double w = (density_->hi - density_->lo) / static_cast<double>(n);
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = density_->lo + (static_cast<double>(i) + 0.5) * w;
            double cell_mass = density_cdf_[i] - prev;
            prev = density_cdf_[i];
            h.apply(std::span<const double>(&x, 1), hx);
            out[0] += cell_mass * (x - hx[0]);
        }
    }
    return out;
}

void LevyKernel::sample_mark(std::mt19937_64& rng, std::span<double> out) const {
    if (!(total_rate_ > 0.0)) throw std::logic_error("LevyKernel: sampling from a zero kernel");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng) * total_rate_;
    double acc = 0.0;
    for (const auto& a : atoms_) {
        acc += a.rate;
        if (u <= acc) {
            for (std::size_t j = 0; j < dim_; ++j) out[j] = a.xi[j];
            return;
        }
    }
    // Density component: inverse CDF on the quadrature cells with linear
    // interpolation inside the chosen cell.
    double target = u - acc + 0.0;
    target = std::min(target, density_mass_);
    auto it = std::lower_bound(density_cdf_.begin(), density_cdf_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - density_cdf_.begin());
    if (i >= density_cdf_.size()) i = density_cdf_.size() - 1;
    double prev = i == 0 ? 0.0 : density_cdf_[i - 1];
    double cell_mass = density_cdf_[i] - prev;
    double frac = cell_mass > 0.0 ? (target - prev) / cell_mass : 0.5;
    std::size_t n = density_->n_points;
    double w = (density_->hi - density_->lo) / static_cast<double>(n);
    out[0] = density_->lo + (static_cast<double>(i) + frac) * w;
}

std::string LevyKernel::content_key() const {
    if (density_) throw std::logic_error("LevyKernel: density kernels cannot be pooled");
    std::string key;
    key.reserve(2 + atoms_.size() * (dim_ + 1) * 8);
    key.push_back(static_cast<char>(dim_));
    key.push_back(static_cast<char>(atoms_.size()));
    // Sort atoms for a stable key irrespective of construction order.
    std::vector<std::size_t> order(atoms_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (atoms_[a].xi != atoms_[b].xi) return atoms_[a].xi < atoms_[b].xi;
        return atoms_[a].rate < atoms_[b].rate;
    });
    for (std::size_t i : order) {
        for (double v : atoms_[i].xi) append_bits(key, v);
        append_bits(key, atoms_[i].rate);
    }
    return key;
}

LevyKernel InlineKernel::to_kernel() const {
    std::vector<KernelAtom> atoms;
    for (std::uint32_t i = 0; i < n_atoms; ++i) {
        std::vector<double> loc(xi[i], xi[i] + dim);
        atoms.push_back({std::move(loc), rate[i]});
    }
    return LevyKernel::atomic(dim, std::move(atoms));
}

std::uint32_t KernelPool::intern(const LevyKernel& k) {
    std::string key = k.content_key();
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(kernels_.size());
    kernels_.push_back(k);
    index_.emplace(std::move(key), id);
    return id;
}

std::uint32_t KernelPool::intern_inline(const InlineKernel& k) { return intern(k.to_kernel()); }

const LevyKernel& KernelPool::at(std::uint32_t id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return kernels_[id];
}

const LevyKernel* KernelPool::stable_ref(std::uint32_t id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return &kernels_[id];
}

std::size_t KernelPool::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return kernels_.size();
}

std::vector<std::uint32_t> KernelPool::canonicalize() {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::pair<std::string, std::uint32_t>> keyed;
    keyed.reserve(kernels_.size());
    for (const auto& [key, id] : index_) keyed.emplace_back(key, id);
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::uint32_t> remap(kernels_.size(), 0);
    std::deque<LevyKernel> reordered(kernels_.size());
    for (std::uint32_t new_id = 0; new_id < keyed.size(); ++new_id) {
        remap[keyed[new_id].second] = new_id;
        reordered[new_id] = std::move(kernels_[keyed[new_id].second]);
        index_[keyed[new_id].first] = new_id;
    }
    kernels_ = std::move(reordered);
    return remap;
}

double ramp_test_function(double a, std::span<const double> xi) {
    double n2 = 0.0;
    for (double v : xi) n2 += v * v;
    double r = a * std::sqrt(n2) - 1.0;
    if (r < 0.0) return 0.0;
    return std::min(r, 1.0);
}

}  // namespace mimic
