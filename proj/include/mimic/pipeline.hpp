#pragma once

#include <string>
#include <vector>

#include "mimic/io.hpp"
#include "mimic/mimic_sim.hpp"

namespace mimic {

// Exit codes shared by the CLI: 0 pass, 1 validation failure, 2 usage or
// configuration error, 3 runtime/scenario error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitValidationFail = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitScenarioError = 3;

struct ValidationOutcome {
    MarginalReport marginal;
    MartingaleReport martingale_a;
    MartingaleReport martingale_b;
    std::vector<std::string> summary;
    bool pass = false;
};

int effective_threads(const RunConfig& cfg);

// Stage entry points; each writes its output directory when `out` is nonempty.
ParticleEnsemble run_simulate(const RunConfig& cfg, const std::string& out);
ProjectedCharacteristics run_project(const RunConfig& cfg, const ParticleEnsemble& ens,
                                     const std::string& out);
ParticleEnsemble run_mimic(const RunConfig& cfg, const MimicSource& src, const std::string& out);
ValidationOutcome run_validate(const RunConfig& cfg, const ParticleEnsemble& a,
                               const ParticleEnsemble& b, const std::string& out);

// simulate -> project -> mimic -> validate, with every stage written under
// out/<stage>. Returns the exit code.
int run_pipeline(const RunConfig& cfg, const std::string& out);

}  // namespace mimic
