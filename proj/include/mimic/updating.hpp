#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mimic/path.hpp"

namespace mimic {

enum class UpdatingKind {
    ProcessItself,
    IntegralToDate,
    SupremumToDate,
    MaxJumpToDate,
    Custom,
};

const char* updating_kind_name(UpdatingKind kind);
UpdatingKind updating_kind_from_name(const std::string& name);

// State space E ⊂ R^n with an optional membership constraint.
struct StateSpace {
    std::size_t dim = 1;
    std::function<bool(std::span<const double>)> constraint;  // empty: all of R^dim

    bool contains(std::span<const double> e) const { return !constraint || constraint(e); }
};

// Map Φ from (initial state, increment path starting at 0) to a state path,
// satisfying the initial-condition, nonanticipativity and flow axioms at grid
// resolution. The built-ins advance state step by step; apply() is defined
// through the same per-step transition the simulators use, so recomputing a
// state path from its driving path reproduces it exactly.
class UpdatingFunction {
public:
    using CustomApply = std::function<CadlagPath(std::span<const double>, const CadlagPath&)>;

    static UpdatingFunction builtin(UpdatingKind kind, std::size_t driving_dim);
    static UpdatingFunction custom(StateSpace space, std::size_t driving_dim, CustomApply apply,
                                   std::string name);

    UpdatingKind kind() const { return kind_; }
    const StateSpace& state_space() const { return space_; }
    std::size_t state_dim() const { return space_.dim; }
    std::size_t driving_dim() const { return driving_dim_; }
    const std::string& name() const { return name_; }

    // One grid transition: total increment of the driving path, the jump
    // marks recorded inside it (flattened, k x driving_dim), and the step
    // length (left-endpoint quadrature for the integral state).
    void step_update(std::span<double> state, std::span<const double> delta,
                     std::span<const double> marks, double dt) const;

    CadlagPath apply(std::span<const double> initial_state, const CadlagPath& x) const;

private:
    UpdatingKind kind_ = UpdatingKind::ProcessItself;
    StateSpace space_;
    std::size_t driving_dim_ = 1;
    std::string name_;
    CustomApply custom_;
};

struct AxiomViolation {
    int axiom = 0;  // 1 = initial condition, 2 = nonanticipativity, 3 = flow
    std::size_t trial = 0;
    double t = 0.0;
};

struct AxiomReport {
    std::size_t trials = 0;
    std::size_t checks = 0;
    std::vector<AxiomViolation> violations;

    bool clean() const { return violations.empty(); }
};

// Exercises the three defining axioms on random piecewise-constant paths with
// dyadic values (so both sides of each identity are exact in floating point)
// and random grid times. times_per_trial grid times are drawn per path.
AxiomReport check_axioms(const UpdatingFunction& phi, std::size_t trials, std::uint64_t rng_seed,
                         std::size_t times_per_trial = 10);

}  // namespace mimic
