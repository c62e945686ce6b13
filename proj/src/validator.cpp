#include "mimic/validator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mimic/parallel.hpp"

namespace mimic {

double two_sample_ks(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double maxd = 0.0;
    while (i < a.size() || j < b.size()) {
        double v;
        if (i < a.size() && j < b.size()) {
            v = std::min(a[i], b[j]);
        } else if (i < a.size()) {
            v = a[i];
        } else {
            v = b[j];
        }
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        maxd = std::max(maxd, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return maxd;
}

double wasserstein1(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double acc = 0.0;
    double prev = 0.0;
    bool first = true;
    while (i < a.size() || j < b.size()) {
        double v;
        if (i < a.size() && j < b.size()) {
            v = std::min(a[i], b[j]);
        } else if (i < a.size()) {
            v = a[i];
        } else {
            v = b[j];
        }
        if (!first) {
            double fa = static_cast<double>(i) / n;
            double fb = static_cast<double>(j) / m;
            acc += std::abs(fa - fb) * (v - prev);
        }
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        prev = v;
        first = false;
    }
    return acc;
}

double tv_integer(const std::vector<double>& a, const std::vector<double>& b) {
    std::map<long long, std::pair<std::size_t, std::size_t>> counts;
    for (double v : a) ++counts[std::llround(v)].first;
    for (double v : b) ++counts[std::llround(v)].second;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double acc = 0.0;
    for (const auto& [k, c] : counts) {
        acc += std::abs(static_cast<double>(c.first) / na - static_cast<double>(c.second) / nb);
    }
    return 0.5 * acc;
}

double tv_against_pmf(const std::vector<double>& samples, const std::vector<double>& pmf) {
    std::vector<std::size_t> counts(pmf.size(), 0);
    std::size_t outside = 0;
    for (double v : samples) {
        long long k = std::llround(v);
        if (k >= 0 && static_cast<std::size_t>(k) < counts.size()) {
            ++counts[static_cast<std::size_t>(k)];
        } else {
            ++outside;
        }
    }
    const double n = static_cast<double>(samples.size());
    double acc = static_cast<double>(outside) / n;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        acc += std::abs(static_cast<double>(counts[k]) / n - pmf[k]);
    }
    return 0.5 * acc;
}

double ks_critical(double alpha, std::size_t n, std::size_t m) {
    double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return std::sqrt(std::log(2.0 / alpha) * (nn + mm) / (2.0 * nn * mm));
}

bool all_integer_valued(const std::vector<double>& v, double tol) {
    for (double x : v) {
        if (std::abs(x - std::llround(x)) > tol) return false;
    }
    return true;
}

// Quantize at 2^-30 so values that differ only by accumulation-order float
// dust form exact ties in the order statistics.
static double snap_sample(double v) {
    if (std::abs(v) >= 8.0e6) return v;
    return std::nearbyint(v * 1073741824.0) / 1073741824.0;
}

MarginalReport compare_marginals(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                 const std::vector<double>& times, const MarginalTolerances& tol,
                                 int threads) {
    if (a.dim_e != b.dim_e) throw std::invalid_argument("compare_marginals: dimension mismatch");
    std::vector<std::size_t> steps_a, steps_b;
    for (double t : times) {
        steps_a.push_back(a.cfg.grid.floor_index(t));
        steps_b.push_back(b.cfg.grid.floor_index(t));
    }
    std::vector<double> za = a.z_at_steps(steps_a, threads);
    std::vector<double> zb = b.z_at_steps(steps_b, threads);

    MarginalReport report;
    for (std::size_t q = 0; q < times.size(); ++q) {
        for (std::size_t j = 0; j < a.dim_e; ++j) {
            std::vector<double> sa(a.n_particles()), sb(b.n_particles());
            for (std::size_t p = 0; p < a.n_particles(); ++p) {
                sa[p] = snap_sample(za[(p * times.size() + q) * a.dim_e + j]);
            }
            for (std::size_t p = 0; p < b.n_particles(); ++p) {
                sb[p] = snap_sample(zb[(p * times.size() + q) * b.dim_e + j]);
            }
            std::sort(sa.begin(), sa.end());
            std::sort(sb.begin(), sb.end());

            MarginalRow row;
            row.t = times[q];
            row.coord = j;
            row.n_a = sa.size();
            row.n_b = sb.size();
            row.ks = two_sample_ks(sa, sb);
            row.w1 = wasserstein1(sa, sb);
            row.ks_tol = tol.ks_fixed ? *tol.ks_fixed
                                      : ks_critical(tol.ks_alpha, sa.size(), sb.size()) +
                                            tol.ks_margin;
            row.tv_defined = all_integer_valued(sa) && all_integer_valued(sb);
            if (row.tv_defined) row.tv = tv_integer(sa, sb);
            row.pass = row.ks <= row.ks_tol;
            if (tol.w1_tol && row.w1 > *tol.w1_tol) row.pass = false;
            if (tol.tv_tol && row.tv_defined && row.tv > *tol.tv_tol) row.pass = false;
            report.rows.push_back(row);
        }
    }
    return report;
}

namespace {

struct WindowStats {
    // pass 1 accumulators per (stat, window)
    std::vector<double> sum, sum2;
};

constexpr std::size_t kChunk = 2048;

}  // namespace

MartingaleReport martingale_residuals(const ParticleEnsemble& ens,
                                      const std::vector<TestFn>& family, std::size_t n_windows,
                                      int threads) {
    if (!ens.has_chars) {
        throw std::invalid_argument("martingale_residuals: ensemble stores no characteristics");
    }
    const std::size_t P = ens.n_particles();
    const std::size_t S = ens.n_steps();
    const std::size_t d = ens.d;
    const std::size_t cw = packed_size(d);
    const double dt = ens.cfg.grid.dt();
    if (n_windows < 1 || n_windows > S) {
        throw std::invalid_argument("martingale_residuals: window count off grid");
    }

    // Window boundaries as grid indices.
    std::vector<std::size_t> bounds(n_windows + 1);
    for (std::size_t k = 0; k <= n_windows; ++k) bounds[k] = (k * S) / n_windows;

    // Per-kernel integrals used by the compensators.
    const std::size_t n_kernels = ens.pool->size();
    std::vector<std::vector<double>> kernel_hh(n_kernels);   // packed h_i h_j integrals
    std::vector<std::vector<double>> kernel_f(n_kernels);    // per family member
    std::vector<std::vector<double>> kernel_tail(n_kernels); // ∫ (xi - h(xi)) dκ
    for (std::size_t kid = 0; kid < n_kernels; ++kid) {
        const LevyKernel& k = ens.pool->at(kid);
        std::vector<double> hh(cw, 0.0);
        std::vector<double> hx(d);
        for (const auto& atom : k.atoms()) {
            ens.trunc.apply(atom.xi, hx);
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = i; j < d; ++j) {
                    hh[packed_index(d, i, j)] += atom.rate * hx[i] * hx[j];
                }
            }
        }
        kernel_hh[kid] = std::move(hh);
        kernel_tail[kid] = k.tail_mean(ens.trunc);
        std::vector<double> fi(family.size(), 0.0);
        for (std::size_t q = 0; q < family.size(); ++q) fi[q] = k.integral(family[q].f);
        kernel_f[kid] = std::move(fi);
    }

    const std::size_t n_stats = d + cw + family.size();
    const std::size_t n_cells = n_stats * n_windows;
    const std::size_t n_chunks = (P + kChunk - 1) / kChunk;
    std::vector<WindowStats> chunk_stats(n_chunks);

    parallel_for(n_chunks, threads, [&](std::size_t ci) {
        WindowStats& ws = chunk_stats[ci];
        ws.sum.assign(n_cells, 0.0);
        ws.sum2.assign(n_cells, 0.0);
        std::vector<double> resid(n_cells);
        std::vector<double> m_run(d), b_run(d), ctil_run(cw);
        std::vector<double> m_at(d * (n_windows + 1)), ctil_at(cw * (n_windows + 1));
        std::vector<double> hx(d);
        std::size_t p_end = std::min(P, (ci + 1) * kChunk);
        for (std::size_t p = ci * kChunk; p < p_end; ++p) {
            std::fill(resid.begin(), resid.end(), 0.0);
            std::fill(m_run.begin(), m_run.end(), 0.0);
            std::fill(b_run.begin(), b_run.end(), 0.0);
            std::fill(ctil_run.begin(), ctil_run.end(), 0.0);

            // Running truncated martingale part m = Y(h) - B and quadratic
            // compensator, snapshotted at window boundaries.
            const auto& js = ens.jumps[p];
            std::size_t jpos = 0;
            std::size_t bk = 0;
            for (std::size_t i = 0; i <= S; ++i) {
                while (bk <= n_windows && bounds[bk] == i) {
                    std::copy(m_run.begin(), m_run.end(), m_at.begin() + bk * d);
                    std::copy(ctil_run.begin(), ctil_run.end(), ctil_at.begin() + bk * cw);
                    ++bk;
                }
                if (i == S) break;
                // advance through step i
                const double* bp = ens.b_at(p, i);
                const double* cp = ens.c_at(p, i);
                std::uint32_t kid = ens.kid_at(p, i);
                std::size_t win = std::min(
                    static_cast<std::size_t>(
                        std::upper_bound(bounds.begin(), bounds.end(), i) - bounds.begin() - 1),
                    n_windows - 1);
                for (std::size_t j = 0; j < d; ++j) {
                    double dy = ens.y_at(p, i + 1, j) - ens.y_at(p, i, j);
                    m_run[j] += dy - bp[j] * dt;
                    b_run[j] += bp[j] * dt;
                }
                // remove untruncated jump parts from m, accumulate jump stats
                while (jpos < js.size() && js[jpos].step == i) {
                    const auto& jr = js[jpos];
                    std::span<const double> delta(jr.delta, d);
                    ens.trunc.apply(delta, hx);
                    for (std::size_t j = 0; j < d; ++j) m_run[j] -= jr.delta[j] - hx[j];
                    for (std::size_t q = 0; q < family.size(); ++q) {
                        resid[(d + cw + q) * n_windows + win] += family[q].f(delta);
                    }
                    ++jpos;
                }
                for (std::size_t j = 0; j < cw; ++j) {
                    ctil_run[j] += (cp[j] + kernel_hh[kid][j]) * dt;
                }
                for (std::size_t j = 0; j < d; ++j) {
                    resid[j * n_windows + win] -= 0.0;  // drift residual handled via m snapshots
                }
                for (std::size_t q = 0; q < family.size(); ++q) {
                    resid[(d + cw + q) * n_windows + win] -= kernel_f[kid][q] * dt;
                }
            }

            // Window increments of m (drift residual) and of mm^T - C~.
            for (std::size_t k = 0; k < n_windows; ++k) {
                for (std::size_t j = 0; j < d; ++j) {
                    resid[j * n_windows + k] = m_at[(k + 1) * d + j] - m_at[k * d + j];
                }
                for (std::size_t i2 = 0; i2 < d; ++i2) {
                    for (std::size_t j2 = i2; j2 < d; ++j2) {
                        std::size_t pi = packed_index(d, i2, j2);
                        double quad = m_at[(k + 1) * d + i2] * m_at[(k + 1) * d + j2] -
                                      m_at[k * d + i2] * m_at[k * d + j2];
                        double comp = ctil_at[(k + 1) * cw + pi] - ctil_at[k * cw + pi];
                        resid[(d + pi) * n_windows + k] = quad - comp;
                    }
                }
            }

            for (std::size_t cidx = 0; cidx < n_cells; ++cidx) {
                ws.sum[cidx] += resid[cidx];
                ws.sum2[cidx] += resid[cidx] * resid[cidx];
            }
        }
    });

    // Deterministic serial combine in chunk order.
    std::vector<double> sum(n_cells, 0.0), sum2(n_cells, 0.0);
    for (const auto& ws : chunk_stats) {
        for (std::size_t cidx = 0; cidx < n_cells; ++cidx) {
            sum[cidx] += ws.sum[cidx];
            sum2[cidx] += ws.sum2[cidx];
        }
    }

    MartingaleReport report;
    auto emit = [&](const std::string& process, const std::string& component, std::size_t stat) {
        for (std::size_t k = 0; k < n_windows; ++k) {
            std::size_t cidx = stat * n_windows + k;
            double mean = sum[cidx] / static_cast<double>(P);
            double var = std::max(sum2[cidx] / static_cast<double>(P) - mean * mean, 0.0);
            double se = std::sqrt(var / static_cast<double>(P));
            MartingaleRow row;
            row.process = process;
            row.component = component;
            row.window = k;
            row.t0 = ens.cfg.grid.time(bounds[k]);
            row.t1 = ens.cfg.grid.time(bounds[k + 1]);
            row.mean = mean;
            row.se = se;
            row.z = se > 0.0 ? mean / se : (mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            report.rows.push_back(row);
        }
    };
    for (std::size_t j = 0; j < d; ++j) emit("drift", "y" + std::to_string(j), j);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            emit("quadratic", "c" + std::to_string(i) + std::to_string(j),
                 d + packed_index(d, i, j));
        }
    }
    for (std::size_t q = 0; q < family.size(); ++q) emit("jump", family[q].name, d + cw + q);
    return report;
}

CompensatorReport compensator_probe(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                    const std::vector<TestFn>& family,
                                    const std::vector<double>& times, int threads) {
    auto accumulate = [&](const ParticleEnsemble& ens, std::vector<double>& mean,
                          std::vector<double>& se) {
        const std::size_t P = ens.n_particles();
        const std::size_t S = ens.n_steps();
        const double dt = ens.cfg.grid.dt();
        std::vector<std::size_t> tsteps;
        for (double t : times) tsteps.push_back(ens.cfg.grid.floor_index(t));

        const std::size_t n_kernels = ens.pool->size();
        std::vector<std::vector<double>> kernel_f(n_kernels);
        for (std::size_t kid = 0; kid < n_kernels; ++kid) {
            std::vector<double> fi(family.size(), 0.0);
            for (std::size_t q = 0; q < family.size(); ++q) {
                fi[q] = ens.pool->at(kid).integral(family[q].f);
            }
            kernel_f[kid] = std::move(fi);
        }

        const std::size_t n_cells = family.size() * times.size();
        const std::size_t n_chunks = (P + kChunk - 1) / kChunk;
        std::vector<WindowStats> chunk_stats(n_chunks);
        parallel_for(n_chunks, threads, [&](std::size_t ci) {
            WindowStats& ws = chunk_stats[ci];
            ws.sum.assign(n_cells, 0.0);
            ws.sum2.assign(n_cells, 0.0);
            std::vector<double> acc(family.size());
            std::vector<double> vals(n_cells);
            std::size_t p_end = std::min(P, (ci + 1) * kChunk);
            for (std::size_t p = ci * kChunk; p < p_end; ++p) {
                std::fill(acc.begin(), acc.end(), 0.0);
                std::fill(vals.begin(), vals.end(), 0.0);
                if (!ens.has_chars) continue;
                for (std::size_t i = 0; i < S; ++i) {
                    for (std::size_t q = 0; q < times.size(); ++q) {
                        if (tsteps[q] == i) {
                            for (std::size_t f = 0; f < family.size(); ++f) {
                                vals[f * times.size() + q] = acc[f];
                            }
                        }
                    }
                    std::uint32_t kid = ens.kid_at(p, i);
                    for (std::size_t f = 0; f < family.size(); ++f) {
                        acc[f] += kernel_f[kid][f] * dt;
                    }
                }
                for (std::size_t q = 0; q < times.size(); ++q) {
                    if (tsteps[q] == S) {
                        for (std::size_t f = 0; f < family.size(); ++f) {
                            vals[f * times.size() + q] = acc[f];
                        }
                    }
                }
                for (std::size_t cidx = 0; cidx < n_cells; ++cidx) {
                    ws.sum[cidx] += vals[cidx];
                    ws.sum2[cidx] += vals[cidx] * vals[cidx];
                }
            }
        });
        std::vector<double> sum(n_cells, 0.0), sum2(n_cells, 0.0);
        for (const auto& ws : chunk_stats) {
            for (std::size_t cidx = 0; cidx < n_cells; ++cidx) {
                sum[cidx] += ws.sum[cidx];
                sum2[cidx] += ws.sum2[cidx];
            }
        }
        mean.assign(n_cells, 0.0);
        se.assign(n_cells, 0.0);
        for (std::size_t cidx = 0; cidx < n_cells; ++cidx) {
            mean[cidx] = sum[cidx] / static_cast<double>(P);
            double var = std::max(sum2[cidx] / static_cast<double>(P) - mean[cidx] * mean[cidx], 0.0);
            se[cidx] = std::sqrt(var / static_cast<double>(P));
        }
    };

    std::vector<double> mean_a, se_a, mean_b, se_b;
    accumulate(a, mean_a, se_a);
    accumulate(b, mean_b, se_b);

    CompensatorReport report;
    for (std::size_t f = 0; f < family.size(); ++f) {
        for (std::size_t q = 0; q < times.size(); ++q) {
            std::size_t cidx = f * times.size() + q;
            CompensatorRow row;
            row.fn = family[f].name;
            row.t = times[q];
            row.mean_a = mean_a[cidx];
            row.se_a = se_a[cidx];
            row.mean_b = mean_b[cidx];
            row.se_b = se_b[cidx];
            double sd = std::sqrt(se_a[cidx] * se_a[cidx] + se_b[cidx] * se_b[cidx]);
            double diff = mean_a[cidx] - mean_b[cidx];
            row.z_diff = sd > 0.0 ? diff / sd
                                  : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace mimic
