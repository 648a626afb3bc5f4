#pragma once

#include <cstdint>
#include <vector>

#include "hjbs/hjb.hpp"

namespace hjbs {

struct Policy {
    enum class Kind { Feedback, Constant, OpenLoop };
    Kind kind = Kind::Constant;
    const ValueSolution* solution = nullptr;
    Vector control;                    ///< Constant
    std::vector<double> switch_times;  ///< OpenLoop: control i applies on [t_i, t_{i+1})
    std::vector<Vector> controls;

    static Policy feedback(const ValueSolution& sol) { return {Kind::Feedback, &sol, {}, {}, {}}; }
    static Policy constant(Vector u) { return {Kind::Constant, nullptr, std::move(u), {}, {}}; }
    static Policy open_loop(std::vector<double> times, std::vector<Vector> us) {
        return {Kind::OpenLoop, nullptr, {}, std::move(times), std::move(us)};
    }
};

struct SimulationSettings {
    double lambda = 0.0;
    double dt = 1e-3;
    double horizon = 0.0;  ///< 0 means 40 / lambda
    std::size_t paths = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t dump_paths = 0;
};

struct TrajectorySample {
    std::size_t path = 0;
    double t = 0.0;
    Vector z;
    Vector u;
};

struct SimulationResult {
    double cost_estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double horizon = 0.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    double tail_bound = 0.0;  ///< discounted cost beyond the horizon
    std::vector<double> path_costs;
    /// Per path int e^{-lambda s}[H_CV(w(Z);u) - H_min(w(Z))] ds, when a solution is available.
    std::vector<double> path_gaps;
    std::vector<TrajectorySample> trajectories;
};

/// gamma(w(Px)): the H_min minimizer at the tabulated B-gradient.
Vector feedback(const SpectralModel& model, const HamiltonianSpec& spec, const ValueSolution& sol,
                const StateVector& x);
Vector feedback_projected(const HamiltonianSpec& spec, const ValueSolution& sol, const Vector& z);

/// Exact-exponential stepping of dX = (AX + Bu) dt + G dW with piecewise-constant u.
/// The gap integrand is recorded whenever `gap_solution` is given.
SimulationResult evaluate_cost(const SpectralModel& model, const HamiltonianSpec& spec,
                               const Policy& policy, const StateVector& x0,
                               const SimulationSettings& settings,
                               const ValueSolution* gap_solution = nullptr);

SimulationResult simulate_closed_loop(const SpectralModel& model, const HamiltonianSpec& spec,
                                      const ValueSolution& sol, const StateVector& x0,
                                      const SimulationSettings& settings);

struct PairedGap {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Mean and standard error of a.path_costs - b.path_costs (common random numbers).
PairedGap paired_difference(const SimulationResult& a, const SimulationResult& b);

struct IdentityCheck {
    double value = 0.0;  ///< v(Px)
    SimulationResult sim;
    PairedGap cost_gap;       ///< J - v
    PairedGap integrand_gap;  ///< direct estimate of the Hamiltonian gap
    PairedGap mismatch;       ///< mean(J_p - G_p) - v
    double budget = 0.0;      ///< 10 tol + solver quadrature + horizon tail
    bool estimators_agree = false;
};

IdentityCheck fundamental_identity_check(const SpectralModel& model, const HamiltonianSpec& spec,
                                         const ValueSolution& sol, const Policy& policy,
                                         const StateVector& x0, const SimulationSettings& settings);

}  // namespace hjbs
