// Acceptance suite: one PASS/FAIL line per criterion, exit 0 only if all
// pass. Tolerances are fixed here, not configurable. The mimic CLI binary
// path is taken from argv[1] for the reproducibility criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mimic/characteristics.hpp"
#include "mimic/mimic_sim.hpp"
#include "mimic/parallel.hpp"
#include "mimic/pipeline.hpp"
#include "mimic/rng.hpp"
#include "mimic/updating.hpp"
#include "mimic/validator.hpp"
#include "oracles.hpp"

using namespace mimic;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("%s %s: %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

SimConfig cfg_of(std::size_t n, std::uint64_t seed) {
    SimConfig cfg;
    cfg.n_particles = n;
    cfg.grid = TimeGrid(1.0 / 256.0, 256);
    cfg.seed = seed;
    return cfg;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5g", v);
    return buf;
}

// A1: oracle-mode mixed-Poisson mimicking matches the mixture law in total
// variation, with the reference pmf independently brute-forced through the
// posterior-intensity master equation.
void a1() {
    auto start = std::chrono::steady_clock::now();
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);

    double me_err = 0.0;
    for (double t : {0.5, 1.0}) {
        auto me = test_oracles::master_equation_pmf(scn, t, 60);
        auto mix = test_oracles::mixture_poisson_pmf(0.5, 1.0, 4.0, t, 60);
        for (std::size_t n = 0; n <= 60; ++n) me_err = std::max(me_err, std::abs(me[n] - mix[n]));
    }

    auto cfg = cfg_of(100000, 20260808);
    cfg.store_characteristics = false;
    auto ens = simulate_mimic(MimicSource::oracle(scn), cfg, hardware_threads());
    double worst_tv = 0.0;
    for (double t : {0.5, 1.0}) {
        std::size_t step = ens.cfg.grid.floor_index(t);
        std::vector<double> counts(ens.n_particles());
        for (std::size_t p = 0; p < ens.n_particles(); ++p) counts[p] = ens.y_at(p, step, 0);
        auto pmf = test_oracles::mixture_poisson_pmf(0.5, 1.0, 4.0, t, 60);
        worst_tv = std::max(worst_tv, tv_against_pmf(counts, pmf));
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = me_err <= 1e-8 && worst_tv <= 0.02 && secs < 60.0;
    report("A1", pass,
           "mixed-Poisson oracle mimic: TV=" + fmt(worst_tv) + " (<=0.02), master-equation err=" +
               fmt(me_err) + " (<=1e-8), runtime=" + fmt(secs) + "s (<60)");
}

// A2: exact-projection scenario; mimic and source marginals of (X, M).
void a2() {
    auto scn = make_sup_dependent_vol();
    auto cfg_a = cfg_of(100000, 31);
    cfg_a.store_characteristics = false;
    auto cfg_b = cfg_of(100000, 32);
    cfg_b.store_characteristics = false;
    auto source = simulate_ensemble(scn, cfg_a, hardware_threads());
    auto mimic_ens = simulate_mimic(MimicSource::oracle(scn), cfg_b, hardware_threads());
    MarginalTolerances tol;
    tol.ks_fixed = 0.015;
    tol.tv_tol.reset();
    auto rep = compare_marginals(source, mimic_ens, {0.25, 0.5, 1.0}, tol, hardware_threads());
    double worst = 0.0;
    for (const auto& r : rep.rows) worst = std::max(worst, r.ks);
    report("A2", rep.all_pass(),
           "sup-dependent-vol oracle mimic vs source: max KS=" + fmt(worst) +
               " (<=0.015) over both coordinates at t in {0.25,0.5,1}");
}

// A3: binned drift regression against the tanh oracle on the central 90%.
void a3() {
    auto scn = make_random_drift_sign();
    auto ens = simulate_ensemble(scn, cfg_of(100000, 33), hardware_threads());
    ConditioningScheme scheme;
    scheme.n_bins = 30;
    auto pc = estimate(ens, scheme, hardware_threads());

    // cross-check the closed form against numeric posterior integration
    double oracle_err = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.125) {
        oracle_err =
            std::max(oracle_err, std::abs(std::tanh(x) - test_oracles::drift_sign_posterior_mean(
                                                             1.0, x)));
    }

    auto res = pc.lookup(1.0, std::vector<double>{0.0});
    const SliceProj& sl = *res.slice;
    std::vector<std::size_t> steps{sl.step};
    auto z = ens.z_at_steps(steps, hardware_threads());
    std::vector<double> xs(ens.n_particles());
    for (std::size_t p = 0; p < xs.size(); ++p) xs[p] = z[p];
    std::sort(xs.begin(), xs.end());
    double q05 = xs[xs.size() / 20], q95 = xs[xs.size() - 1 - xs.size() / 20];

    double worst = 0.0;
    std::size_t used = 0;
    for (const auto& bin : sl.groups) {
        if (bin.centroid[0] < q05 || bin.centroid[0] > q95) continue;
        worst = std::max(worst, std::abs(bin.b_hat[0] - std::tanh(bin.centroid[0])));
        ++used;
    }
    bool pass = worst <= 0.05 && used >= 20 && oracle_err <= 1e-9;
    report("A3", pass,
           "drift regression vs tanh oracle: sup central-90% error=" + fmt(worst) +
               " (<=0.05) over " + std::to_string(used) + " bins; oracle cross-check err=" +
               fmt(oracle_err));
}

// A4: estimated (no oracle) pipeline on the hidden-sign drift scenario.
void a4() {
    auto scn = make_random_drift_sign();
    auto source = simulate_ensemble(scn, cfg_of(100000, 34), hardware_threads());
    ConditioningScheme scheme;
    auto pc = estimate(source, scheme, hardware_threads());
    auto cfg_m = cfg_of(100000, 35);
    cfg_m.store_characteristics = false;
    auto mimic_ens = simulate_mimic(MimicSource::estimated(pc), cfg_m, hardware_threads());
    MarginalTolerances tol;
    tol.ks_fixed = 0.02;
    tol.tv_tol.reset();
    auto rep = compare_marginals(source, mimic_ens, {0.5, 1.0}, tol, hardware_threads());
    double worst = 0.0;
    for (const auto& r : rep.rows) worst = std::max(worst, r.ks);
    report("A4", rep.all_pass(),
           "estimated pipeline marginals: max KS=" + fmt(worst) + " (<=0.02) at t in {0.5,1}");
}

// A5: updating-function axioms, exact at grid resolution.
void a5() {
    std::size_t violations = 0, trials = 0;
    for (auto kind : {UpdatingKind::ProcessItself, UpdatingKind::IntegralToDate,
                      UpdatingKind::SupremumToDate, UpdatingKind::MaxJumpToDate}) {
        auto phi = UpdatingFunction::builtin(kind, 1);
        auto rep = check_axioms(phi, 1000, 0x5eed + static_cast<int>(kind), 10);
        violations += rep.violations.size();
        trials += rep.trials;
    }
    report("A5", violations == 0,
           "updating-function axioms: " + std::to_string(violations) + " violations over " +
               std::to_string(trials) + " random paths x 10 times, all four built-ins");
}

// A6: truncation algebra round trip and canonical consistency.
void a6() {
    auto rng = substream(0xA6, 0);
    std::uniform_real_distribution<double> ux(0.05, 4.0), ur(0.1, 3.0), u01(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<KernelAtom> atoms;
        double max_norm = 0.0;
        int n_atoms = 1 + static_cast<int>(u01(rng) * 4.0);
        for (int a = 0; a < n_atoms; ++a) {
            double x = ux(rng);
            if (std::abs(x - 1.0) < 0.05) x += 0.11;  // keep atoms off both spheres
            if (std::abs(x - 2.0) < 0.05) x += 0.11;
            if (u01(rng) < 0.5) x = -x;
            atoms.push_back({{x}, ur(rng)});
            max_norm = std::max(max_norm, std::abs(x));
        }
        auto k = LevyKernel::atomic(1, atoms);
        auto ha = TruncationSpec::hard(1.0), hb = TruncationSpec::hard(2.0);
        std::vector<double> b{4.0 * u01(rng) - 2.0};
        auto back = convert_truncation(convert_truncation(b, k, ha, hb), k, hb, ha);
        worst = std::max(worst, std::abs(back[0] - b[0]));
        auto canonical = drift_truncated_to_canonical(b, k, ha);
        auto beyond = convert_truncation(b, k, ha, TruncationSpec::hard(max_norm + 1.0));
        worst = std::max(worst, std::abs(canonical[0] - beyond[0]));
    }
    report("A6", worst <= 1e-12,
           "truncation round trip and canonical consistency: max error=" + fmt(worst) +
               " (<=1e-12) over 100 random atomic kernels");
}

// A7: iterated-integral pair structure preservation.
void a7() {
    auto scn = make_iterated_integral(0.5, 2.0);
    auto source = simulate_ensemble(scn, cfg_of(50000, 37), hardware_threads());
    auto rep_src = check_structure_preservation(source);

    auto cfg_o = cfg_of(50000, 38);
    cfg_o.store_characteristics = false;
    auto oracle_ens = simulate_mimic(MimicSource::oracle(scn), cfg_o, hardware_threads());
    auto rep_oracle = check_structure_preservation(oracle_ens);

    ConditioningScheme scheme;
    scheme.stride = 1;
    scheme.n_bins = 30;
    auto pc = estimate(source, scheme, hardware_threads());
    auto cfg_e = cfg_of(50000, 39);
    cfg_e.store_characteristics = false;
    auto est_ens = simulate_mimic(MimicSource::estimated(pc), cfg_e, hardware_threads());
    auto rep_est = check_structure_preservation(est_ens);

    bool pass = rep_src.violations == 0 && rep_oracle.violations == 0 &&
                rep_est.violation_fraction() < 0.01 && rep_src.total_jumps > 0;
    report("A7", pass,
           "iterated-integral jump relation: source " + std::to_string(rep_src.violations) + "/" +
               std::to_string(rep_src.total_jumps) + ", oracle mimic " +
               std::to_string(rep_oracle.violations) + "/" +
               std::to_string(rep_oracle.total_jumps) + ", estimated mimic fraction=" +
               fmt(rep_est.violation_fraction()) + " (<0.01)");
}

// A8: martingale residuals on every built-in scenario; one reseed retry.
void a8() {
    bool all_pass = true;
    std::string detail;
    for (const char* name : {"random_drift_sign", "mixed_poisson", "sup_dependent_vol",
                             "iterated_integral"}) {
        auto scn = builtin_scenario(name);
        auto family = test_function_family(scn.d, scn.trunc);
        double max_z = 0.0;
        bool ok = false;
        for (std::uint64_t seed = 40; seed < 42 && !ok; ++seed) {
            auto ens = simulate_ensemble(scn, cfg_of(20000, seed), hardware_threads());
            auto rep = martingale_residuals(ens, family, 20, hardware_threads());
            max_z = rep.max_abs_z();
            ok = max_z <= 4.0;
        }
        all_pass = all_pass && ok;
        detail += std::string(name) + " max|z|=" + fmt(max_z) + (ok ? " " : "(FAIL) ");
    }
    report("A8", all_pass, "martingale residuals over 20 windows (<=4): " + detail);
}

// A9: mixture linearity identity and compensator probe agreement.
void a9() {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto source = simulate_ensemble(scn, cfg_of(100000, 43), hardware_threads());
    ConditioningScheme scheme;
    auto pc = estimate(source, scheme, hardware_threads());
    auto family = test_function_family(1, scn.trunc);

    // linearity: flat-kernel integral == weighted member integrals, all bins
    double lin_err = 0.0;
    for (const auto& sl : pc.slices) {
        for (const auto& bin : sl.groups) {
            for (const auto& fn : family) {
                double weighted = 0.0;
                for (const auto& m : bin.mixture) {
                    weighted += m.weight * pc.pool->at(m.kernel_id).integral(fn.f);
                }
                lin_err = std::max(lin_err,
                                   std::abs(weighted - pc.flat_kernel(bin).integral(fn.f)));
            }
        }
    }

    auto cfg_m = cfg_of(100000, 44);
    auto mimic_ens = simulate_mimic(MimicSource::oracle(scn), cfg_m, hardware_threads());
    auto probe = compensator_probe(source, mimic_ens, family, {0.5, 1.0}, hardware_threads());
    double max_zd = 0.0;
    for (const auto& r : probe.rows) max_zd = std::max(max_zd, std::abs(r.z_diff));

    bool pass = lin_err <= 1e-12 && max_zd <= 3.0;
    report("A9", pass,
           "mixture linearity err=" + fmt(lin_err) + " (<=1e-12); compensator probe max |z|=" +
               fmt(max_zd) + " (<=3) across the test-function family");
}

// A10: byte-identical pipeline outputs across reruns and thread counts,
// exercised through the installed CLI.
void a10(const std::string& binary) {
    fs::path work = fs::temp_directory_path() / "mimic_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    std::ofstream cfg(work / "cfg.json");
    cfg << R"({
  "scenario": {"name": "mixed_poisson", "p": 0.5, "lambda1": 1.0, "lambda2": 4.0},
  "sim": {"n_particles": 2000, "dt": 0.015625, "horizon": 1.0, "seed": 4242},
  "projection": {"stride": 4, "n_bins": 10, "min_bin_count": 30},
  "validation": {"times": [0.5, 1.0], "ks_tolerance": 0.08, "tv_tolerance": 0.08}
})";
    cfg.close();

    auto run_pipe = [&](const std::string& out, int threads) {
        std::string cmd = binary + " pipeline --config " + (work / "cfg.json").string() +
                          " --out " + out + " --threads " + std::to_string(threads) +
                          " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    int c1 = run_pipe((work / "r1").string(), 2);
    int c2 = run_pipe((work / "r2").string(), 2);
    int c3 = run_pipe((work / "r3").string(), 1);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool identical = c1 == 0 && c2 == 0 && c3 == 0;
    std::size_t files = 0;
    if (identical) {
        for (const auto& entry : fs::recursive_directory_iterator(work / "r1")) {
            if (!entry.is_regular_file()) continue;
            if (entry.path().extension() != ".csv") continue;
            auto rel = fs::relative(entry.path(), work / "r1");
            ++files;
            if (slurp(entry.path()) != slurp(work / "r2" / rel) ||
                slurp(entry.path()) != slurp(work / "r3" / rel)) {
                identical = false;
                break;
            }
        }
    }
    report("A10", identical && files >= 6,
           "pipeline reruns and thread-count variation: " + std::to_string(files) +
               " CSV files byte-identical (exit codes " + std::to_string(c1) +
               std::to_string(c2) + std::to_string(c3) + ")");
}

}  // namespace

int main(int argc, char** argv) {
    std::string binary = argc > 1 ? argv[1] : "./mimic";
    a1();
    a2();
    a3();
    a4();
    a5();
    a6();
    a7();
    a8();
    a9();
    a10(binary);
    if (g_failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
