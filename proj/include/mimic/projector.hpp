#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mimic/ensemble.hpp"
#include "mimic/levy_kernel.hpp"

namespace mimic {

// Binned conditional-expectation regression: every k-th grid step is a
// projection time; quantile bin edges per active state dimension; bins below
// the minimum count are merged into the nearest neighboring bin.
struct ConditioningScheme {
    std::size_t stride = 4;
    std::size_t n_bins = 30;
    std::size_t min_bin_count = 50;
    double degenerate_range = 1e-9;
};

// Bounded test functions determining the projected kernel: the ramp family
// (a|x|-1)^+ ∧ 1, the truncation products h_i h_j, and 1 ∧ |x|^2.
struct TestFn {
    std::string name;
    std::function<double(std::span<const double>)> f;
};

std::vector<TestFn> test_function_family(std::size_t dim, const TruncationSpec& trunc,
                                         std::vector<double> ramp_coeffs = {0.25, 0.5, 1.0, 2.0,
                                                                            4.0, 8.0});

struct MixtureMember {
    std::uint32_t kernel_id = 0;
    double weight = 0.0;
};

// One conditioning bin at one projection time.
struct BinProj {
    std::size_t count = 0;
    std::vector<double> centroid;      // dim_e
    std::vector<double> lo, hi;        // member value range per dimension
    std::vector<double> b_hat;         // d
    std::vector<double> c_hat_packed;  // PSD-clipped mean
    double clip_delta = 0.0;           // max |clipped - raw| entry
    std::vector<MixtureMember> mixture;
    double total_rate = 0.0;
    std::uint32_t flat_kernel_id = 0;  // mixture flattened into one kernel
};

struct SliceProj {
    std::size_t step = 0;
    double t = 0.0;
    std::vector<std::uint8_t> active;          // per state dimension
    std::vector<std::vector<double>> edges;    // per active dimension
    std::vector<double> dim_scale;             // standardization for distances
    std::vector<std::int32_t> cell_to_group;
    std::vector<BinProj> groups;
};

struct LookupResult {
    const SliceProj* slice = nullptr;
    const BinProj* bin = nullptr;
    bool fallback = false;
};

// Time-and-state-indexed tables of projected characteristics. Immutable after
// construction; lookups are thread-safe.
class ProjectedCharacteristics {
public:
    std::string scenario_name;
    std::size_t d = 1;
    std::size_t dim_e = 1;
    UpdatingKind phi_kind = UpdatingKind::ProcessItself;
    TruncationSpec trunc;
    TimeGrid grid;
    ConditioningScheme scheme;
    std::vector<SliceProj> slices;
    std::shared_ptr<KernelPool> pool;

    // Nearest earlier projection time, containing (or nearest) bin.
    LookupResult lookup(double t, std::span<const double> z) const;

    // ∫ f dκ̂ for each member of the family, at the resolved (t, z).
    std::vector<double> khat_probe(double t, std::span<const double> z,
                                   const std::vector<TestFn>& family) const;

    // Total rate plus mark sampling from the resolved mixture. A zero-rate
    // mixture yields total_rate == 0 and must not be sampled.
    const LevyKernel& flat_kernel(const BinProj& bin) const { return pool->at(bin.flat_kernel_id); }
};

ProjectedCharacteristics estimate(const ParticleEnsemble& ens, const ConditioningScheme& scheme,
                                  int threads);
ProjectedCharacteristics estimate_serial(const ParticleEnsemble& ens,
                                         const ConditioningScheme& scheme);

// Jump sampling surface of a projection table: total rate and the flattened
// mixture kernel at the resolved (t, z). Drawing a mark from the kernel picks
// a member with probability weight * member_rate / total_rate and then its
// normalized law, so a compound-Poisson step built from it has compensator
// exactly κ̂ dt. A zero total rate means nothing may be drawn; that is not an
// error.
struct JumpSampler {
    double total_rate = 0.0;
    const LevyKernel* kernel = nullptr;

    template <typename RNG>
    void sample(RNG& rng, std::span<double> out) const {
        kernel->sample_mark(rng, out);
    }
};

JumpSampler sample_jump(const ProjectedCharacteristics& pc, double t, std::span<const double> z);

// Snap-tolerant bin index: values a float ulp below a quantile edge land in
// the upper bin, keeping lattice-valued states stable.
std::size_t bin_index(const std::vector<double>& edges, double v);

// PSD-clip a packed symmetric matrix in place; returns the largest entry
// change.
double psd_clip_packed(std::size_t d, std::span<double> c);

}  // namespace mimic
