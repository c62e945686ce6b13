// Timing comparison between the serial reference paths and the OpenMP
// kernels: source simulation, projection estimate, marginal comparison.

#include <chrono>
#include <cstdio>

#include "mimic/parallel.hpp"
#include "mimic/pipeline.hpp"
#include "mimic/projector.hpp"
#include "mimic/simulate.hpp"
#include "mimic/validator.hpp"

using clock_type = std::chrono::steady_clock;

static double time_ms(const std::function<void()>& fn) {
    auto t0 = clock_type::now();
    fn();
    auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

int main() {
    const int hw = mimic::hardware_threads();
    std::printf("hardware threads: %d\n", hw);

    mimic::SimConfig cfg;
    cfg.n_particles = 40000;
    cfg.grid = mimic::TimeGrid(1.0 / 256.0, 256);
    cfg.seed = 7;

    mimic::Scenario scn = mimic::make_random_drift_sign();
    mimic::ParticleEnsemble serial_ens, parallel_ens;
    double t_serial = time_ms([&] { serial_ens = mimic::simulate_ensemble_serial(scn, cfg); });
    double t_par = time_ms([&] { parallel_ens = mimic::simulate_ensemble(scn, cfg, hw); });
    bool same = serial_ens.y == parallel_ens.y;
    std::printf("simulate  serial %8.1f ms | omp(%d) %8.1f ms | speedup %.2fx | identical: %s\n",
                t_serial, hw, t_par, t_serial / t_par, same ? "yes" : "NO");

    mimic::ConditioningScheme scheme;
    mimic::ProjectedCharacteristics pc_serial, pc_par;
    double e_serial = time_ms([&] { pc_serial = mimic::estimate_serial(serial_ens, scheme); });
    double e_par = time_ms([&] { pc_par = mimic::estimate(parallel_ens, scheme, hw); });
    bool same_bins = pc_serial.slices.size() == pc_par.slices.size();
    for (std::size_t k = 0; same_bins && k < pc_serial.slices.size(); ++k) {
        same_bins = pc_serial.slices[k].groups.size() == pc_par.slices[k].groups.size();
        for (std::size_t g = 0; same_bins && g < pc_serial.slices[k].groups.size(); ++g) {
            same_bins = pc_serial.slices[k].groups[g].b_hat == pc_par.slices[k].groups[g].b_hat;
        }
    }
    std::printf("estimate  serial %8.1f ms | omp(%d) %8.1f ms | speedup %.2fx | identical: %s\n",
                e_serial, hw, e_par, e_serial / e_par, same_bins ? "yes" : "NO");

    std::vector<double> times{0.25, 0.5, 1.0};
    mimic::MarginalTolerances tol;
    mimic::MarginalReport rep1, repN;
    double v_serial =
        time_ms([&] { rep1 = mimic::compare_marginals(serial_ens, parallel_ens, times, tol, 1); });
    double v_par =
        time_ms([&] { repN = mimic::compare_marginals(serial_ens, parallel_ens, times, tol, hw); });
    std::printf("validate  serial %8.1f ms | omp(%d) %8.1f ms | speedup %.2fx | ks(self)=%.3g\n",
                v_serial, hw, v_par, v_serial / v_par, rep1.rows.front().ks);
    return 0;
}
