#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjbs/config.hpp"
#include "hjbs/hjb.hpp"
#include "hjbs/synthesis.hpp"

namespace hjbs {

struct EstimatesOutput {
    EstimateReport report;
    nlohmann::json summary;
    std::string csv;
};

EstimatesOutput run_estimates(const RunConfig& config);

/// Fits the smoothing exponent over the configured window and turns it into
/// a contraction threshold for the configured Hamiltonian.
Certificate certify_config(const RunConfig& config, const SpectralModel& model);

HamiltonianSpec build_spec(const RunConfig& config, const std::vector<GridAxis>& axes);

struct SolveOutput {
    ValueSolution solution;
    nlohmann::json json;
    std::string residual_csv;
};

/// lambda: the override if given, else problem.lambda (guarded against the
/// certified threshold), else the threshold itself.
SolveOutput run_solve(const RunConfig& config, std::optional<double> lambda_override,
                      unsigned threads);

/// x = V z in the full state.
StateVector lift_projected(const SpectralModel& model, const Vector& z);

/// Configured initial states, or grid nodes around the origin of the first axis.
std::vector<Vector> verification_states(const RunConfig& config, const ValueSolution& sol);

struct SimulateOutput {
    nlohmann::json json;
    std::string trajectories_csv;
};

SimulateOutput run_simulate(const RunConfig& config, const ValueSolution& sol, unsigned threads,
                            std::size_t paths);

struct VerifyOutput {
    nlohmann::json report;
    bool passed = false;
};

VerifyOutput run_verify(const RunConfig& config, const ValueSolution& sol, unsigned threads,
                        std::size_t paths);

}  // namespace hjbs
