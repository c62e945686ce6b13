// Monte Carlo engine for Markovian projections of jump processes: simulate a
// source process, estimate projected coefficients by conditional-expectation
// regression, simulate the mimicking process, and compare marginal laws.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "mimic/errors.hpp"
#include "mimic/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
    bool oracle = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_out) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration")->required();
    auto* out = cmd->add_option("--out", opts.out, "output directory");
    if (needs_out) out->required();
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--threads", opts.threads, "worker threads (default: hardware)");
}

mimic::RunConfig load(const CommonOpts& opts) {
    mimic::RunConfig cfg = mimic::load_config(opts.config_path);
    if (opts.seed_set) cfg.sim.seed = opts.seed;
    if (opts.threads >= 0) cfg.threads = opts.threads;
    if (opts.oracle) cfg.use_oracle = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mimic: Markovian projection Monte Carlo engine"};
    app.require_subcommand(1);

    CommonOpts sim_opts, proj_opts, mimic_opts, val_opts, pipe_opts;
    std::string proj_ensemble_dir, mimic_projection_dir, val_a, val_b;

    auto* cmd_sim = app.add_subcommand("simulate", "simulate the source ensemble");
    add_common(cmd_sim, sim_opts, true);

    auto* cmd_proj = app.add_subcommand("project", "estimate projected characteristics");
    add_common(cmd_proj, proj_opts, true);
    cmd_proj->add_option("--ensemble", proj_ensemble_dir, "source ensemble directory")->required();

    auto* cmd_mimic = app.add_subcommand("mimic", "simulate the mimicking process");
    add_common(cmd_mimic, mimic_opts, true);
    cmd_mimic->add_option("--projection", mimic_projection_dir,
                          "projection directory (omit with --oracle)");
    cmd_mimic->add_flag("--oracle", mimic_opts.oracle, "use the closed-form projection");

    auto* cmd_val = app.add_subcommand("validate", "compare two ensembles");
    add_common(cmd_val, val_opts, true);
    cmd_val->add_option("--a", val_a, "first ensemble directory")->required();
    cmd_val->add_option("--b", val_b, "second ensemble directory")->required();

    auto* cmd_pipe = app.add_subcommand("pipeline", "simulate, project, mimic and validate");
    add_common(cmd_pipe, pipe_opts, true);
    cmd_pipe->add_flag("--oracle", pipe_opts.oracle, "use the closed-form projection");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : mimic::kExitConfigError;
    }

    try {
        if (cmd_sim->parsed()) {
            mimic::RunConfig cfg = load(sim_opts);
            mimic::run_simulate(cfg, sim_opts.out);
            return mimic::kExitPass;
        }
        if (cmd_proj->parsed()) {
            mimic::RunConfig cfg = load(proj_opts);
            mimic::ParticleEnsemble ens = mimic::read_ensemble_csv(proj_ensemble_dir);
            mimic::run_project(cfg, ens, proj_opts.out);
            return mimic::kExitPass;
        }
        if (cmd_mimic->parsed()) {
            mimic::RunConfig cfg = load(mimic_opts);
            if (cfg.use_oracle) {
                mimic::Scenario scn = mimic::scenario_from_config(cfg);
                mimic::run_mimic(cfg, mimic::MimicSource::oracle(scn), mimic_opts.out);
            } else {
                if (mimic_projection_dir.empty()) {
                    throw mimic::ConfigError("mimic requires --projection or --oracle");
                }
                mimic::ProjectedCharacteristics pc =
                    mimic::read_projection_csv(mimic_projection_dir);
                mimic::run_mimic(cfg, mimic::MimicSource::estimated(pc), mimic_opts.out);
            }
            return mimic::kExitPass;
        }
        if (cmd_val->parsed()) {
            mimic::RunConfig cfg = load(val_opts);
            mimic::ParticleEnsemble a = mimic::read_ensemble_csv(val_a);
            mimic::ParticleEnsemble b = mimic::read_ensemble_csv(val_b);
            mimic::ValidationOutcome res = mimic::run_validate(cfg, a, b, val_opts.out);
            for (const auto& line : res.summary) std::printf("%s\n", line.c_str());
            return res.pass ? mimic::kExitPass : mimic::kExitValidationFail;
        }
        if (cmd_pipe->parsed()) {
            mimic::RunConfig cfg = load(pipe_opts);
            int code = mimic::run_pipeline(cfg, pipe_opts.out);
            std::printf("%s\n", code == 0 ? "PASS pipeline" : "FAIL pipeline");
            return code;
        }
    } catch (const mimic::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return mimic::kExitConfigError;
    } catch (const mimic::ScenarioError& e) {
        std::fprintf(stderr, "scenario error: %s\n", e.what());
        return mimic::kExitScenarioError;
    } catch (const mimic::EstimationError& e) {
        std::fprintf(stderr, "estimation error: %s\n", e.what());
        return mimic::kExitScenarioError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return mimic::kExitScenarioError;
    }
    return mimic::kExitConfigError;
}
