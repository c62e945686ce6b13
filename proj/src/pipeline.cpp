#include "mimic/pipeline.hpp"

#include <cmath>
#include <filesystem>

#include "mimic/errors.hpp"
#include "mimic/parallel.hpp"

namespace mimic {

int effective_threads(const RunConfig& cfg) {
    return cfg.threads > 0 ? cfg.threads : hardware_threads();
}

ParticleEnsemble run_simulate(const RunConfig& cfg, const std::string& out) {
    Scenario scn = scenario_from_config(cfg);
    ParticleEnsemble ens = simulate_ensemble(scn, cfg.sim, effective_threads(cfg));
    if (!out.empty()) {
        write_ensemble_csv(out, ens);
        write_manifest(out, "simulate", cfg, &ens, nullptr);
    }
    return ens;
}

ProjectedCharacteristics run_project(const RunConfig& cfg, const ParticleEnsemble& ens,
                                     const std::string& out) {
    ProjectedCharacteristics pc = estimate(ens, cfg.scheme, effective_threads(cfg));
    if (!out.empty()) {
        write_projection_csv(out, pc);
        write_manifest(out, "project", cfg, nullptr, &pc);
    }
    return pc;
}

ParticleEnsemble run_mimic(const RunConfig& cfg, const MimicSource& src, const std::string& out) {
    ParticleEnsemble ens = simulate_mimic(src, cfg.sim, effective_threads(cfg));
    if (!out.empty()) {
        write_ensemble_csv(out, ens);
        write_manifest(out, "mimic", cfg, &ens, nullptr);
    }
    return ens;
}

ValidationOutcome run_validate(const RunConfig& cfg, const ParticleEnsemble& a,
                               const ParticleEnsemble& b, const std::string& out) {
    int threads = effective_threads(cfg);
    ValidationOutcome res;
    res.marginal = compare_marginals(a, b, cfg.validation_times, cfg.tolerances, threads);

    auto family_a = test_function_family(a.d, a.trunc);
    res.martingale_a = a.has_chars
                           ? martingale_residuals(a, family_a, cfg.martingale_windows, threads)
                           : MartingaleReport{};
    auto family_b = test_function_family(b.d, b.trunc);
    res.martingale_b = b.has_chars
                           ? martingale_residuals(b, family_b, cfg.martingale_windows, threads)
                           : MartingaleReport{};

    res.pass = res.marginal.all_pass();
    for (const auto& r : res.marginal.rows) {
        std::string line = std::string(r.pass ? "PASS" : "FAIL") + " marginal t=" +
                           format_double(r.t) + " coord=" + std::to_string(r.coord) +
                           " ks=" + format_double(r.ks) + " tol=" + format_double(r.ks_tol) +
                           " w1=" + format_double(r.w1);
        if (r.tv_defined) line += " tv=" + format_double(r.tv);
        res.summary.push_back(line);
    }
    auto z_line = [&](const char* tag, const MartingaleReport& rep) {
        if (rep.rows.empty()) return;
        double mz = rep.max_abs_z();
        std::string line = std::string(mz <= cfg.max_abs_z ? "PASS" : "WARN");
        line += std::string(" martingale ") + tag + " max|z|=" + format_double(mz) +
                " threshold=" + format_double(cfg.max_abs_z);
        res.summary.push_back(line);
    };
    z_line("a", res.martingale_a);
    z_line("b", res.martingale_b);
    if (b.source_kind != "source") {
        res.summary.push_back(std::string(b.flagged ? "WARN" : "PASS") +
                              " lookup fallbacks: " + std::to_string(b.fallback_count) + "/" +
                              std::to_string(b.lookup_count));
    }
    res.summary.push_back(std::string(res.pass ? "PASS" : "FAIL") + " overall");

    if (!out.empty()) {
        std::filesystem::create_directories(out);
        write_marginal_csv(out + "/marginal_report.csv", res.marginal);
        write_martingale_csv(out + "/martingale_report.csv", res.martingale_a, res.martingale_b);
        write_summary(out + "/summary.txt", res.summary);
    }
    return res;
}

int run_pipeline(const RunConfig& cfg, const std::string& out) {
    std::string source_dir = out.empty() ? "" : out + "/source";
    std::string proj_dir = out.empty() ? "" : out + "/projection";
    std::string mimic_dir = out.empty() ? "" : out + "/mimic";

    Scenario scn = scenario_from_config(cfg);
    ParticleEnsemble source = run_simulate(cfg, source_dir);

    ParticleEnsemble mimic_ens;
    if (cfg.use_oracle) {
        MimicSource src = MimicSource::oracle(scn);
        mimic_ens = run_mimic(cfg, src, mimic_dir);
    } else {
        ProjectedCharacteristics pc = run_project(cfg, source, proj_dir);
        MimicSource src = MimicSource::estimated(pc);
        mimic_ens = run_mimic(cfg, src, mimic_dir);
    }

    ValidationOutcome outcome = run_validate(cfg, source, mimic_ens, out);
    if (!out.empty()) write_manifest(out, "pipeline", cfg, nullptr, nullptr);
    return outcome.pass ? kExitPass : kExitValidationFail;
}

}  // namespace mimic
