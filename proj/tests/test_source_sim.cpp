#include <cmath>

#include "doctest.h"
#include "mimic/errors.hpp"
#include "mimic/simulate.hpp"

using namespace mimic;

namespace {

SimConfig quick_cfg(std::size_t n, std::uint64_t seed) {
    SimConfig cfg;
    cfg.n_particles = n;
    cfg.grid = TimeGrid(1.0 / 256.0, 256);
    cfg.seed = seed;
    return cfg;
}

Scenario brownian() {
    return make_constant_scenario({0.0}, {1.0}, LevyKernel::zero(1), TruncationSpec::hard(1.0));
}

}  // namespace

TEST_CASE("null characteristics give frozen paths") {
    auto scn = make_constant_scenario({0.0}, {0.0}, LevyKernel::zero(1), TruncationSpec::hard(1.0));
    auto ens = simulate_ensemble(scn, quick_cfg(16, 3), 2);
    for (std::size_t p = 0; p < 16; ++p) {
        CHECK(ens.jumps[p].empty());
        for (std::size_t i = 0; i <= ens.n_steps(); ++i) CHECK(ens.y_at(p, i, 0) == 0.0);
    }
}

TEST_CASE("pure Brownian marginals at T=1") {
    auto ens = simulate_ensemble(brownian(), quick_cfg(100000, 42), 2);
    double sum = 0.0, sum2 = 0.0;
    std::size_t S = ens.n_steps();
    for (std::size_t p = 0; p < ens.n_particles(); ++p) {
        double v = ens.y_at(p, S, 0);
        sum += v;
        sum2 += v * v;
    }
    double n = static_cast<double>(ens.n_particles());
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) <= 0.01);
    CHECK(std::abs(var - 1.0) <= 0.02);  // 3 * sqrt(2/N) with margin
    for (std::size_t p = 0; p < 64; ++p) CHECK(ens.jumps[p].empty());
}

TEST_CASE("mixed-Poisson jump counts") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto ens = simulate_ensemble(scn, quick_cfg(100000, 7), 2);
    double total = 0.0;
    for (std::size_t p = 0; p < ens.n_particles(); ++p) {
        total += static_cast<double>(ens.jumps[p].size());
        CHECK(ens.y_at(p, ens.n_steps(), 0) == static_cast<double>(ens.jumps[p].size()));
    }
    double mean = total / static_cast<double>(ens.n_particles());
    // E N_1 = 2.5, Var N_1 = E[Λ] + Var[Λ] = 4.75
    double se = std::sqrt(4.75 / static_cast<double>(ens.n_particles()));
    CHECK(std::abs(mean - 2.5) <= 3.0 * se);
}

TEST_CASE("determinism: identical seeds and any thread count") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto cfg = quick_cfg(4000, 99);
    auto a = simulate_ensemble(scn, cfg, 2);
    auto b = simulate_ensemble(scn, cfg, 2);
    auto serial = simulate_ensemble_serial(scn, cfg);
    CHECK(a.y == b.y);
    CHECK(a.y == serial.y);
    CHECK(a.latent == serial.latent);
    CHECK(a.kid_col.raw() == serial.kid_col.raw());
    REQUIRE(a.jumps.size() == serial.jumps.size());
    for (std::size_t p = 0; p < a.jumps.size(); ++p) {
        REQUIRE(a.jumps[p].size() == serial.jumps[p].size());
        for (std::size_t k = 0; k < a.jumps[p].size(); ++k) {
            CHECK(a.jumps[p][k].step == serial.jumps[p][k].step);
            CHECK(a.jumps[p][k].delta[0] == serial.jumps[p][k].delta[0]);
        }
    }

    auto c = simulate_ensemble(scn, quick_cfg(4000, 100), 2);
    CHECK(a.y != c.y);
}

TEST_CASE("adaptedness: Z recomputes exactly from (Z0, Y)") {
    for (const char* name : {"random_drift_sign", "mixed_poisson", "sup_dependent_vol",
                             "iterated_integral"}) {
        auto scn = builtin_scenario(name);
        auto ens = simulate_ensemble(scn, quick_cfg(50, 17), 2);
        auto phi = scn.phi();
        for (std::size_t p = 0; p < ens.n_particles(); ++p) {
            auto z = ens.z_path(p);
            std::vector<double> z0(ens.z0.begin() + p * ens.dim_e,
                                   ens.z0.begin() + (p + 1) * ens.dim_e);
            auto recomputed = phi.apply(z0, ens.y_path(p));
            CHECK(z.same_values(recomputed));
        }
    }
}

TEST_CASE("declared characteristic bounds hold along every path") {
    for (const char* name : {"random_drift_sign", "mixed_poisson", "sup_dependent_vol",
                             "iterated_integral"}) {
        auto scn = builtin_scenario(name);
        auto ens = simulate_ensemble(scn, quick_cfg(200, 5), 2);
        REQUIRE(ens.has_chars);
        for (std::size_t p = 0; p < ens.n_particles(); ++p) {
            std::vector<double> zmax(1, 0.0);
            ens.scan_z(p, [&](std::size_t, std::span<const double> z) {
                for (double v : z) zmax[0] = std::max(zmax[0], std::abs(v));
            });
            for (std::size_t i = 0; i < ens.n_steps(); ++i) {
                const double* b = ens.b_at(p, i);
                double bound_b = scn.bound_b_const + scn.bound_b_lin * zmax[0];
                for (std::size_t j = 0; j < ens.d; ++j) CHECK(std::abs(b[j]) <= bound_b + 1e-12);
                const double* c = ens.c_at(p, i);
                for (std::size_t j = 0; j < packed_size(ens.d); ++j) {
                    CHECK(std::abs(c[j]) <= scn.bound_c + 1e-12);
                }
                CHECK(ens.pool->at(ens.kid_at(p, i)).total_rate() <= scn.bound_rate + 1e-12);
            }
        }
    }
}

TEST_CASE("stored characteristics equal the rule evaluated along the path") {
    for (const char* name : {"random_drift_sign", "mixed_poisson", "sup_dependent_vol",
                             "iterated_integral"}) {
        auto scn = builtin_scenario(name);
        auto ens = simulate_ensemble(scn, quick_cfg(40, 23), 2);
        auto fixed = scn.fixed_kernels();
        for (std::size_t p = 0; p < ens.n_particles(); ++p) {
            double latent = ens.latent.empty() ? 0.0 : ens.latent[p];
            ens.scan_z(p, [&](std::size_t i, std::span<const double> z) {
                if (i >= ens.n_steps()) return;
                StepChars sc;
                scn.step_chars(ens.cfg.grid.time(i), z, latent, sc);
                for (std::size_t j = 0; j < ens.d; ++j) CHECK(ens.b_at(p, i)[j] == sc.b[j]);
                for (std::size_t j = 0; j < packed_size(ens.d); ++j) {
                    CHECK(ens.c_at(p, i)[j] == sc.c[j]);
                }
                const LevyKernel& stored = ens.pool->at(ens.kid_at(p, i));
                LevyKernel expected = sc.fixed_slot >= 0
                                          ? fixed[static_cast<std::size_t>(sc.fixed_slot)]
                                          : sc.inl.to_kernel();
                REQUIRE(stored.atoms().size() == expected.atoms().size());
                for (std::size_t a = 0; a < stored.atoms().size(); ++a) {
                    CHECK(stored.atoms()[a].xi == expected.atoms()[a].xi);
                    CHECK(stored.atoms()[a].rate == expected.atoms()[a].rate);
                }
            });
        }
    }
}

TEST_CASE("realized characteristics are inspectable per step") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    auto ens = simulate_ensemble(scn, quick_cfg(20, 8), 1);
    auto cr = ens.char_at(3, 17);
    CHECK(cr.b.size() == 1);
    CHECK(cr.b[0] == ens.latent[3]);
    CHECK(cr.c_packed[0] == 0.0);
    CHECK(cr.kernel.total_rate() == ens.latent[3]);
}

TEST_CASE("thinning guards") {
    auto warn_scn = make_constant_scenario({0.0}, {0.0}, LevyKernel::single_atom({1.0}, 30.0),
                                           TruncationSpec::hard(2.0));
    auto ens = simulate_ensemble(warn_scn, quick_cfg(10, 1), 1);
    CHECK(ens.thinning_warnings > 0);
    CHECK(ens.max_rate_dt > 0.1);

    auto bad_scn = make_constant_scenario({0.0}, {0.0}, LevyKernel::single_atom({1.0}, 300.0),
                                          TruncationSpec::hard(2.0));
    CHECK_THROWS_AS(simulate_ensemble(bad_scn, quick_cfg(4, 1), 1), ScenarioError);
}

TEST_CASE("random_drift_sign oracle") {
    auto scn = make_random_drift_sign();
    StepChars sc;
    double z0 = 0.0;
    scn.oracle_chars(1.0, std::span<const double>(&z0, 1), sc);
    CHECK(sc.b[0] == 0.0);  // tanh(0)
    double zm = -2.0;
    scn.oracle_chars(0.5, std::span<const double>(&zm, 1), sc);
    CHECK(sc.b[0] == doctest::Approx(-0.9640275800758169).epsilon(1e-12));
    CHECK(sc.c[0] == 1.0);
}

TEST_CASE("mixed-Poisson oracle matches explicit Bayes normalization") {
    auto scn = make_mixed_poisson(0.3, 1.0, 4.0);
    // prior mean at t=0, n=0
    CHECK(scn.mixed_poisson_lambda_hat(0.0, 0) ==
          doctest::Approx(0.3 * 1.0 + 0.7 * 4.0).epsilon(1e-14));
    for (double t : {0.25, 0.5, 1.0}) {
        for (long long n = 0; n <= 20; ++n) {
            // direct two-point posterior, no common-factor rescaling
            double w1 = 0.3 * std::pow(1.0 * t, static_cast<double>(n)) * std::exp(-1.0 * t);
            double w2 = 0.7 * std::pow(4.0 * t, static_cast<double>(n)) * std::exp(-4.0 * t);
            double expected = (w1 * 1.0 + w2 * 4.0) / (w1 + w2);
            CHECK(scn.mixed_poisson_lambda_hat(t, n) ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("default mixed-Poisson oracle value at t=1, n=0") {
    auto scn = make_mixed_poisson(0.5, 1.0, 4.0);
    // (0.5*1*e^-1 + 0.5*4*e^-4) / (0.5*e^-1 + 0.5*e^-4)
    double e1 = std::exp(-1.0), e4 = std::exp(-4.0);
    double expected = (0.5 * e1 + 2.0 * e4) / (0.5 * e1 + 0.5 * e4);
    CHECK(expected == doctest::Approx(1.1422776).epsilon(1e-6));
    CHECK(scn.mixed_poisson_lambda_hat(1.0, 0) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("sup-dependent volatility oracle") {
    auto scn = make_sup_dependent_vol();
    StepChars sc;
    std::vector<double> z{0.3, 0.5};
    scn.oracle_chars(0.25, z, sc);
    CHECK(sc.c[0] == 1.0);
    z[1] = 1.5;
    scn.oracle_chars(0.25, z, sc);
    CHECK(sc.c[0] == 2.0);
    z = {0.3, 0.9};
    scn.oracle_chars(0.7, z, sc);
    CHECK(sc.c[0] == 1.0);
}

TEST_CASE("scenario parameter validation") {
    CHECK_THROWS_AS(make_mixed_poisson(1.5, 1.0, 4.0), ConfigError);
    CHECK_THROWS_AS(make_mixed_poisson(0.5, -1.0, 4.0), ConfigError);
    CHECK_THROWS_AS(make_iterated_integral(0.5, 0.0), ConfigError);
    CHECK_THROWS_AS(builtin_scenario("unknown"), ConfigError);
}
