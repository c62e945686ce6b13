#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mimic/ensemble.hpp"
#include "mimic/projector.hpp"
#include "mimic/scenario.hpp"
#include "mimic/validator.hpp"

namespace mimic {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
    // scenario
    std::string scenario_name = "mixed_poisson";
    double p = 0.5, lambda1 = 1.0, lambda2 = 4.0;  // mixed_poisson
    double mu = 0.5, lambda = 2.0;                 // iterated_integral
    std::vector<double> const_b{0.0};
    std::vector<double> const_c{0.0};
    std::optional<LevyKernel> const_kernel;
    std::optional<TruncationSpec> trunc_override;
    std::optional<std::string> phi_name;  // constant scenario only

    SimConfig sim;
    ConditioningScheme scheme;

    std::vector<double> validation_times{0.5, 1.0};
    MarginalTolerances tolerances;
    std::size_t martingale_windows = 20;
    double max_abs_z = 4.0;

    bool use_oracle = false;
    int threads = 0;  // 0: hardware default

    std::string raw_json;  // canonical echo of the parsed configuration
    std::uint64_t config_hash = 0;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);
Scenario scenario_from_config(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);

// Shortest round-trip decimal representation.
std::string format_double(double v);

// --- directory outputs -------------------------------------------------

void write_manifest(const std::string& dir, const std::string& command, const RunConfig& cfg,
                    const ParticleEnsemble* ens, const ProjectedCharacteristics* pc);

void write_ensemble_csv(const std::string& dir, const ParticleEnsemble& ens);
ParticleEnsemble read_ensemble_csv(const std::string& dir);

void write_projection_csv(const std::string& dir, const ProjectedCharacteristics& pc);
ProjectedCharacteristics read_projection_csv(const std::string& dir);

void write_marginal_csv(const std::string& path, const MarginalReport& report);
void write_martingale_csv(const std::string& path, const MartingaleReport& a,
                          const MartingaleReport& b);
void write_summary(const std::string& path, const std::vector<std::string>& lines);

// Kernel JSON schema used inside scenario configs: atoms as a list of
// {"xi": [floats], "rate": float}.
LevyKernel kernel_from_json_text(const std::string& text);

}  // namespace mimic
