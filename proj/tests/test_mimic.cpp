#include <cmath>

#include "doctest.h"
#include "mimic/compensator.hpp"
#include "mimic/mimic_sim.hpp"
#include "mimic/validator.hpp"
#include "oracles.hpp"

using namespace mimic;

namespace {

SimConfig cfg_of(std::size_t n, std::uint64_t seed) {
    SimConfig cfg;
    cfg.n_particles = n;
    cfg.grid = TimeGrid(1.0 / 256.0, 256);
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("zero projected characteristics freeze the mimic") {
    auto scn = make_constant_scenario({0.0}, {0.0}, LevyKernel::zero(1), TruncationSpec::hard(1.0));
    auto ens = simulate_mimic(MimicSource::oracle(scn), cfg_of(32, 5), 2);
    CHECK(ens.source_kind == "oracle");
    for (std::size_t p = 0; p < ens.n_particles(); ++p) {
        for (std::size_t i = 0; i <= ens.n_steps(); ++i) CHECK(ens.y_at(p, i, 0) == 0.0);
    }
}

TEST_CASE("master equation pmf equals the mixed-Poisson mixture") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    for (double t : {0.5, 1.0}) {
        auto me = test_oracles::master_equation_pmf(scn, t, 60);
        auto mix = test_oracles::mixture_poisson_pmf(0.5, 1.0, 4.0, t, 60);
        double worst = 0.0;
        for (std::size_t n = 0; n <= 60; ++n) worst = std::max(worst, std::abs(me[n] - mix[n]));
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("mixed-Poisson oracle mimic matches the mixture law") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto cfg = cfg_of(20000, 11);
    auto ens = simulate_mimic(MimicSource::oracle(scn), cfg, 2);

    for (double t : {0.5, 1.0}) {
        std::size_t step = ens.cfg.grid.floor_index(t);
        std::vector<double> counts(ens.n_particles());
        for (std::size_t p = 0; p < ens.n_particles(); ++p) {
            counts[p] = ens.y_at(p, step, 0);
            CHECK(counts[p] == std::floor(counts[p]));  // pure jump counts
        }
        auto pmf = test_oracles::mixture_poisson_pmf(0.5, 1.0, 4.0, t, 60);
        CHECK(tv_against_pmf(counts, pmf) <= 0.03);
    }
}

TEST_CASE("mimic state recomputes exactly through the updating function") {
    auto scn = make_sup_dependent_vol();
    auto ens = simulate_mimic(MimicSource::oracle(scn), cfg_of(64, 13), 2);
    auto phi = scn.phi();
    for (std::size_t p = 0; p < ens.n_particles(); ++p) {
        std::vector<double> z0(ens.z0.begin() + p * ens.dim_e,
                               ens.z0.begin() + (p + 1) * ens.dim_e);
        CHECK(ens.z_path(p).same_values(phi.apply(z0, ens.y_path(p))));
    }
}

TEST_CASE("mimic determinism under fixed seed and thread count independence") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto cfg = cfg_of(3000, 17);
    auto a = simulate_mimic(MimicSource::oracle(scn), cfg, 2);
    auto b = simulate_mimic_serial(MimicSource::oracle(scn), cfg);
    CHECK(a.y == b.y);
    CHECK(a.kid_col.raw() == b.kid_col.raw());
}

TEST_CASE("estimated mimic stays within the source coefficient bounds") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto source = simulate_ensemble(scn, cfg_of(20000, 19), 2);
    ConditioningScheme scheme;
    auto pc = estimate(source, scheme, 2);
    auto ens = simulate_mimic(MimicSource::estimated(pc), cfg_of(20000, 23), 2);
    CHECK(ens.source_kind == "estimated");
    CHECK(ens.lookup_count == 20000 * 256);
    for (std::size_t p = 0; p < ens.n_particles(); p += 97) {
        for (std::size_t i = 0; i < ens.n_steps(); ++i) {
            // projected coefficients are averages of realized ones (Jensen)
            CHECK(ens.b_at(p, i)[0] >= 1.0 - 1e-12);
            CHECK(ens.b_at(p, i)[0] <= 4.0 + 1e-12);
            CHECK(ens.pool->at(ens.kid_at(p, i)).total_rate() <= 4.0 + 1e-12);
        }
    }
    // marginal agreement of the estimated pipeline at a loose unit-test bar
    MarginalTolerances tol;
    tol.ks_fixed = 0.03;
    auto rep = compare_marginals(source, ens, {0.5, 1.0}, tol, 2);
    CHECK(rep.all_pass());
}

TEST_CASE("iterated-integral structure is preserved") {
    auto scn = make_iterated_integral(0.5, 2.0);
    auto source = simulate_ensemble(scn, cfg_of(20000, 29), 2);
    auto rep_src = check_structure_preservation(source);
    CHECK(rep_src.total_jumps > 0);
    CHECK(rep_src.violations == 0);

    auto oracle_ens = simulate_mimic(MimicSource::oracle(scn), cfg_of(20000, 31), 2);
    auto rep_oracle = check_structure_preservation(oracle_ens);
    CHECK(rep_oracle.total_jumps > 0);
    CHECK(rep_oracle.violations == 0);

    ConditioningScheme scheme;
    scheme.stride = 1;
    scheme.n_bins = 40;
    auto pc = estimate(source, scheme, 2);
    auto est_ens = simulate_mimic(MimicSource::estimated(pc), cfg_of(20000, 37), 2);
    auto rep_est = check_structure_preservation(est_ens);
    CHECK(rep_est.total_jumps > 0);
    CHECK(rep_est.violation_fraction() < 0.01);

    // ensembles without jumps pass vacuously
    auto flat = make_constant_scenario({0.0, 0.0}, {0.0, 0.0, 0.0}, LevyKernel::zero(2),
                                       TruncationSpec::none());
    auto quiet = simulate_ensemble(flat, cfg_of(16, 41), 1);
    auto rep_quiet = check_structure_preservation(quiet);
    CHECK(rep_quiet.total_jumps == 0);
    CHECK(rep_quiet.violations == 0);
}

TEST_CASE("compensator accumulator along a mimic path is nondecreasing") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto ens = simulate_mimic(MimicSource::oracle(scn), cfg_of(8, 43), 1);
    for (std::size_t p = 0; p < ens.n_particles(); ++p) {
        CompensatorAccumulator acc(ens.cfg.grid);
        for (std::size_t i = 0; i < ens.n_steps(); ++i) {
            acc.accumulate(i, ens.pool->at(ens.kid_at(p, i)), ens.cfg.grid.dt());
        }
        double prev = 0.0;
        for (std::size_t i = 0; i <= ens.n_steps(); ++i) {
            double m = acc.total_mass_at(i);
            CHECK(m >= prev);
            prev = m;
        }
        CHECK(acc.total_mass_at(0) == 0.0);
    }
}
