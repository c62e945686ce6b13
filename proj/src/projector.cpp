#include "mimic/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "mimic/errors.hpp"
#include "mimic/parallel.hpp"

namespace mimic {

std::vector<TestFn> test_function_family(std::size_t dim, const TruncationSpec& trunc,
                                         std::vector<double> ramp_coeffs) {
    std::vector<TestFn> family;
    for (double a : ramp_coeffs) {
        family.push_back({"ramp_a=" + std::to_string(a),
                          [a](std::span<const double> xi) { return ramp_test_function(a, xi); }});
    }
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i; j < dim; ++j) {
            family.push_back({"h" + std::to_string(i) + "h" + std::to_string(j),
                              [i, j, trunc](std::span<const double> xi) {
                                  std::vector<double> hx(xi.size());
                                  trunc.apply(xi, hx);
                                  return hx[i] * hx[j];
                              }});
        }
    }
    family.push_back({"one_wedge_sq", [](std::span<const double> xi) {
                          double n2 = 0.0;
                          for (double v : xi) n2 += v * v;
                          return std::min(1.0, n2);
                      }});
    return family;
}

std::size_t bin_index(const std::vector<double>& edges, double v) {
    double snapped = v + 1e-9 * std::max(1.0, std::abs(v));
    return static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), snapped) - edges.begin());
}

double psd_clip_packed(std::size_t d, std::span<double> c) {
    if (d == 1) {
        if (c[0] >= 0.0) return 0.0;
        double delta = -c[0];
        c[0] = 0.0;
        return delta;
    }
    // Symmetric 2x2 eigendecomposition.
    double a = c[0], b = c[1], cc = c[2];
    double tr = a + cc;
    double disc = std::sqrt(std::max((a - cc) * (a - cc) + 4.0 * b * b, 0.0));
    double l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
    if (l2 >= 0.0) return 0.0;
    double theta = 0.5 * std::atan2(2.0 * b, a - cc);
    double cs = std::cos(theta), sn = std::sin(theta);
    double m1 = std::max(l1, 0.0), m2 = std::max(l2, 0.0);
    double n0 = m1 * cs * cs + m2 * sn * sn;
    double n1 = (m1 - m2) * cs * sn;
    double n2 = m1 * sn * sn + m2 * cs * cs;
    double delta = std::max({std::abs(n0 - a), std::abs(n1 - b), std::abs(n2 - cc)});
    c[0] = n0;
    c[1] = n1;
    c[2] = n2;
    return delta;
}

namespace {

// Per-cell accumulator that merges cheaply.
struct CellAcc {
    std::size_t count = 0;
    std::vector<double> sum_z, lo, hi;
    std::vector<double> sum_b, sum_c;
    std::map<std::uint32_t, std::size_t> kid_counts;
    std::vector<std::size_t> cells;  // flat cell indices covered by this group

    void absorb(CellAcc& o) {
        count += o.count;
        for (std::size_t j = 0; j < sum_z.size(); ++j) {
            sum_z[j] += o.sum_z[j];
            lo[j] = std::min(lo[j], o.lo[j]);
            hi[j] = std::max(hi[j], o.hi[j]);
        }
        for (std::size_t j = 0; j < sum_b.size(); ++j) sum_b[j] += o.sum_b[j];
        for (std::size_t j = 0; j < sum_c.size(); ++j) sum_c[j] += o.sum_c[j];
        for (auto& [kid, n] : o.kid_counts) kid_counts[kid] += n;
        cells.insert(cells.end(), o.cells.begin(), o.cells.end());
        o.count = 0;
    }
};

struct SliceBuild {
    SliceProj slice;
    std::vector<LevyKernel> flat_kernels;  // one per group, interned serially later
};

}  // namespace

static SliceBuild build_slice(const ParticleEnsemble& ens, const ConditioningScheme& scheme,
                              std::size_t step, const double* zvals, std::size_t stride_e) {
    const std::size_t P = ens.n_particles();
    const std::size_t de = ens.dim_e;
    SliceBuild out;
    SliceProj& sl = out.slice;
    sl.step = step;
    sl.t = ens.cfg.grid.time(step);
    sl.active.assign(de, 0);
    sl.dim_scale.assign(de, 1.0);

    auto z_at = [&](std::size_t p, std::size_t j) { return zvals[p * stride_e + j]; };

    // Active dimensions; distances are normalized by the per-dimension
    // sample range so no dimension dominates nearest-bin decisions.
    std::vector<std::size_t> adims;
    for (std::size_t j = 0; j < de; ++j) {
        double mn = z_at(0, j), mx = mn;
        for (std::size_t p = 0; p < P; ++p) {
            double v = z_at(p, j);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        sl.dim_scale[j] = std::max(mx - mn, 1e-12);
        if (mx - mn > scheme.degenerate_range) {
            sl.active[j] = 1;
            adims.push_back(j);
        }
    }

    // Quantile edges per active dimension. Heavily tied dimensions (lattice
    // states with at most n_bins distinct values) get one bin per value;
    // otherwise the top and bottom quantile bins would mix lattice points.
    sl.edges.resize(adims.size());
    std::vector<std::size_t> dim_bins(adims.size(), 1);
    for (std::size_t a = 0; a < adims.size(); ++a) {
        std::vector<double> vals(P);
        for (std::size_t p = 0; p < P; ++p) vals[p] = z_at(p, adims[a]);
        std::sort(vals.begin(), vals.end());
        std::vector<double>& e = sl.edges[a];
        std::vector<double> distinct{vals[0]};
        for (double v : vals) {
            if (v > distinct.back()) {
                if (distinct.size() > scheme.n_bins) break;
                distinct.push_back(v);
            }
        }
        if (distinct.size() <= scheme.n_bins) {
            e.assign(distinct.begin() + 1, distinct.end());
        } else {
            for (std::size_t k = 1; k < scheme.n_bins; ++k) {
                double q = vals[(k * P) / scheme.n_bins];
                if (e.empty() || q > e.back()) e.push_back(q);
            }
        }
        dim_bins[a] = e.size() + 1;
    }
    std::size_t n_cells = 1;
    for (std::size_t nb : dim_bins) n_cells *= nb;

    // Assign particles and accumulate per cell.
    const std::size_t d = ens.d;
    const std::size_t cw = packed_size(d);
    std::vector<CellAcc> accs(n_cells);
    for (std::size_t p = 0; p < P; ++p) {
        std::size_t cell = 0;
        for (std::size_t a = 0; a < adims.size(); ++a) {
            cell = cell * dim_bins[a] + bin_index(sl.edges[a], z_at(p, adims[a]));
        }
        CellAcc& acc = accs[cell];
        if (acc.count == 0 && acc.sum_z.empty()) {
            acc.sum_z.assign(de, 0.0);
            acc.lo.assign(de, std::numeric_limits<double>::infinity());
            acc.hi.assign(de, -std::numeric_limits<double>::infinity());
            acc.sum_b.assign(d, 0.0);
            acc.sum_c.assign(cw, 0.0);
        }
        ++acc.count;
        for (std::size_t j = 0; j < de; ++j) {
            double v = z_at(p, j);
            acc.sum_z[j] += v;
            acc.lo[j] = std::min(acc.lo[j], v);
            acc.hi[j] = std::max(acc.hi[j], v);
        }
        const double* bp = ens.b_at(p, step);
        for (std::size_t j = 0; j < d; ++j) acc.sum_b[j] += bp[j];
        const double* cp = ens.c_at(p, step);
        for (std::size_t j = 0; j < cw; ++j) acc.sum_c[j] += cp[j];
        ++acc.kid_counts[ens.kid_at(p, step)];
    }

    // Group bookkeeping: cell -> group, group -> accumulator.
    std::vector<std::int32_t> cell_group(n_cells, -1);
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        if (accs[cell].count > 0) {
            cell_group[cell] = static_cast<std::int32_t>(cell);
            accs[cell].cells.push_back(cell);
        }
    }

    auto centroid_dist = [&](const CellAcc& x, const CellAcc& y) {
        double acc = 0.0;
        for (std::size_t j = 0; j < de; ++j) {
            double dx = x.sum_z[j] / static_cast<double>(x.count) -
                        y.sum_z[j] / static_cast<double>(y.count);
            dx /= sl.dim_scale[j];
            acc += dx * dx;
        }
        return acc;
    };

    // Merge under-populated groups into their nearest neighbor.
    while (true) {
        std::int32_t victim = -1;
        for (std::size_t cell = 0; cell < n_cells; ++cell) {
            std::int32_t g = cell_group[cell];
            if (g == static_cast<std::int32_t>(cell) && accs[cell].count > 0 &&
                accs[cell].count < scheme.min_bin_count) {
                victim = g;
                break;
            }
        }
        if (victim < 0) break;

        // Candidate targets: groups owning a cell adjacent to any victim cell;
        // if none, every other group.
        std::vector<std::int32_t> candidates;
        auto add_candidate = [&](std::int32_t g) {
            if (g >= 0 && g != victim &&
                std::find(candidates.begin(), candidates.end(), g) == candidates.end()) {
                candidates.push_back(g);
            }
        };
        for (std::size_t cell : accs[victim].cells) {
            std::size_t base = 1;
            for (std::size_t a = adims.size(); a-- > 0;) {
                std::size_t idx = (cell / base) % dim_bins[a];
                if (idx + 1 < dim_bins[a]) add_candidate(cell_group[cell + base]);
                if (idx > 0) add_candidate(cell_group[cell - base]);
                base *= dim_bins[a];
            }
        }
        if (candidates.empty()) {
            for (std::size_t cell = 0; cell < n_cells; ++cell) {
                if (cell_group[cell] == static_cast<std::int32_t>(cell)) add_candidate(cell_group[cell]);
            }
        }
        if (candidates.empty()) {
            throw EstimationError("all bins below the minimum count");
        }
        std::sort(candidates.begin(), candidates.end());
        std::int32_t best = candidates[0];
        double best_d = centroid_dist(accs[victim], accs[candidates[0]]);
        for (std::size_t i = 1; i < candidates.size(); ++i) {
            double dd = centroid_dist(accs[victim], accs[candidates[i]]);
            if (dd < best_d - 1e-15 * (1.0 + best_d)) {
                best = candidates[i];
                best_d = dd;
            }
        }
        accs[best].absorb(accs[victim]);
        for (std::size_t cell : accs[best].cells) cell_group[cell] = best;
    }

    // Finalize groups in cell order.
    std::vector<std::int32_t> group_ids;
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        if (cell_group[cell] == static_cast<std::int32_t>(cell) && accs[cell].count > 0) {
            group_ids.push_back(static_cast<std::int32_t>(cell));
        }
    }
    sl.cell_to_group.assign(n_cells, -1);
    sl.groups.reserve(group_ids.size());
    for (std::size_t gi = 0; gi < group_ids.size(); ++gi) {
        CellAcc& acc = accs[group_ids[gi]];
        for (std::size_t cell : acc.cells) sl.cell_to_group[cell] = static_cast<std::int32_t>(gi);
        BinProj bin;
        bin.count = acc.count;
        double cnt = static_cast<double>(acc.count);
        bin.centroid.resize(de);
        for (std::size_t j = 0; j < de; ++j) bin.centroid[j] = acc.sum_z[j] / cnt;
        bin.lo = acc.lo;
        bin.hi = acc.hi;
        bin.b_hat.resize(d);
        for (std::size_t j = 0; j < d; ++j) bin.b_hat[j] = acc.sum_b[j] / cnt;
        bin.c_hat_packed.resize(cw);
        for (std::size_t j = 0; j < cw; ++j) bin.c_hat_packed[j] = acc.sum_c[j] / cnt;
        bin.clip_delta = psd_clip_packed(d, bin.c_hat_packed);

        // Equal weights over in-bin kernels, deduplicated by kernel identity.
        std::map<std::vector<double>, double> flat_atoms;
        for (const auto& [kid, n] : acc.kid_counts) {
            double w = static_cast<double>(n) / static_cast<double>(acc.count);
            bin.mixture.push_back({kid, w});
            const LevyKernel& member = ens.pool->at(kid);
            bin.total_rate += w * member.total_rate();
            for (const auto& atom : member.atoms()) flat_atoms[atom.xi] += w * atom.rate;
        }
        std::vector<KernelAtom> atoms;
        for (auto& [xi, rate] : flat_atoms) atoms.push_back({xi, rate});
        out.flat_kernels.push_back(LevyKernel::atomic(d, std::move(atoms)));
        sl.groups.push_back(std::move(bin));
    }
    return out;
}

static ProjectedCharacteristics estimate_impl(const ParticleEnsemble& ens,
                                              const ConditioningScheme& scheme, int threads) {
    if (ens.n_particles() == 0) throw std::invalid_argument("estimate: empty ensemble");
    if (!ens.has_chars) {
        throw std::invalid_argument("estimate: ensemble stores no realized characteristics");
    }
    if (scheme.stride < 1 || scheme.n_bins < 1) {
        throw std::invalid_argument("estimate: invalid conditioning scheme");
    }

    ProjectedCharacteristics pc;
    pc.scenario_name = ens.scenario_name;
    pc.d = ens.d;
    pc.dim_e = ens.dim_e;
    pc.phi_kind = ens.phi_kind;
    pc.trunc = ens.trunc;
    pc.grid = ens.cfg.grid;
    pc.scheme = scheme;
    pc.pool = ens.pool;

    std::vector<std::size_t> slice_steps;
    for (std::size_t s = 0; s < ens.n_steps(); s += scheme.stride) slice_steps.push_back(s);
    std::vector<double> zmat = ens.z_at_steps(slice_steps, threads);

    std::vector<SliceBuild> builds(slice_steps.size());
    std::string err;
    std::mutex err_mu;
    parallel_for(slice_steps.size(), threads, [&](std::size_t k) {
        try {
            // zmat is [particle][slice][component]; present a per-slice view.
            std::vector<double> zv(ens.n_particles() * ens.dim_e);
            for (std::size_t p = 0; p < ens.n_particles(); ++p) {
                for (std::size_t j = 0; j < ens.dim_e; ++j) {
                    zv[p * ens.dim_e + j] =
                        zmat[(p * slice_steps.size() + k) * ens.dim_e + j];
                }
            }
            builds[k] = build_slice(ens, scheme, slice_steps[k], zv.data(), ens.dim_e);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (err.empty()) err = e.what();
        }
    });
    if (!err.empty()) throw EstimationError(err);

    // Intern flattened kernels serially, in slice and group order.
    for (auto& bld : builds) {
        for (std::size_t g = 0; g < bld.slice.groups.size(); ++g) {
            bld.slice.groups[g].flat_kernel_id = pc.pool->intern(bld.flat_kernels[g]);
        }
        pc.slices.push_back(std::move(bld.slice));
    }
    return pc;
}

ProjectedCharacteristics estimate(const ParticleEnsemble& ens, const ConditioningScheme& scheme,
                                  int threads) {
    return estimate_impl(ens, scheme, threads);
}

ProjectedCharacteristics estimate_serial(const ParticleEnsemble& ens,
                                         const ConditioningScheme& scheme) {
    return estimate_impl(ens, scheme, 1);
}

LookupResult ProjectedCharacteristics::lookup(double t, std::span<const double> z) const {
    if (slices.empty()) throw EstimationError("lookup: projection table has no slices");
    LookupResult res;
    std::size_t step = grid.floor_index(t);
    std::size_t k = std::min(step / scheme.stride, slices.size() - 1);
    const SliceProj& sl = slices[k];
    res.slice = &sl;

    std::size_t cell = 0, a = 0;
    for (std::size_t j = 0; j < dim_e; ++j) {
        if (!sl.active[j]) continue;
        cell = cell * (sl.edges[a].size() + 1) + bin_index(sl.edges[a], z[j]);
        ++a;
    }
    std::int32_t g = sl.cell_to_group.empty() ? -1 : sl.cell_to_group[cell];
    if (g >= 0) {
        res.bin = &sl.groups[static_cast<std::size_t>(g)];
        return res;
    }
    // Nearest populated bin by standardized centroid distance.
    res.fallback = true;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& bin : sl.groups) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim_e; ++j) {
            double dx = (z[j] - bin.centroid[j]) / sl.dim_scale[j];
            acc += dx * dx;
        }
        if (acc < best) {
            best = acc;
            res.bin = &bin;
        }
    }
    if (res.bin == nullptr) throw EstimationError("lookup: projection table has no bins");
    return res;
}

std::vector<double> ProjectedCharacteristics::khat_probe(double t, std::span<const double> z,
                                                         const std::vector<TestFn>& family) const {
    LookupResult res = lookup(t, z);
    const LevyKernel& kernel = flat_kernel(*res.bin);
    std::vector<double> out;
    out.reserve(family.size());
    for (const auto& fn : family) out.push_back(kernel.integral(fn.f));
    return out;
}

JumpSampler sample_jump(const ProjectedCharacteristics& pc, double t, std::span<const double> z) {
    LookupResult res = pc.lookup(t, z);
    JumpSampler sampler;
    sampler.total_rate = res.bin->total_rate;
    sampler.kernel = &pc.flat_kernel(*res.bin);
    return sampler;
}

}  // namespace mimic
