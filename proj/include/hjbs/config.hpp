#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjbs/hamiltonian.hpp"
#include "hjbs/spectral.hpp"

namespace hjbs {

struct EstimatesConfig {
    double t_min = 1e-4;
    double t_max = 1e-1;
    std::size_t samples = 24;
    bool lifted = true;
    double rho = 1.0;
    std::size_t lift_nodes = 80;
};

struct StateCostConfig {
    std::string kind = "bump";  ///< bump | step | table
    double height = 1.0;
    double width = 0.2;         ///< bump: l0 = height (1 - exp(-|z - c|^2 / (2 width^2)))
    Vector center;              ///< bump center (empty means 0)
    double threshold = 0.0;     ///< step: l0 = height * [z_1 > threshold]
    std::vector<GridAxis> table_axes;
    std::vector<double> table_values;
};

struct ProblemConfig {
    std::optional<double> lambda;
    double tol = 1e-6;
    std::size_t max_iter = 200;
    std::size_t grid_nodes = 0;
    double grid_halfwidth = 5.0;
    std::size_t gh_order = 20;
    std::size_t time_nodes = 96;
    double margin = 0.9;
    ControlSet control_set = ControlSet::ball(1.0);
    ControlCost control_cost;
    StateCostConfig state_cost;
};

struct SimulationConfig {
    double dt = 1e-3;
    double horizon = 0.0;
    std::size_t paths = 2000;
    std::vector<Vector> initial_states;  ///< projected coordinates z, state x = V z
    std::size_t dump_paths = 0;
};

struct VerifyConfig {
    std::size_t constant_policies = 10;
    double min_radius_fraction = 0.2;  ///< random constants have |u| >= this * R
    std::size_t initial_states = 5;    ///< used when simulation.initial_states is empty
};

struct RunConfig {
    std::uint64_t seed = 0;
    ModelConfig model;
    EstimatesConfig estimates;
    ProblemConfig problem;
    SimulationConfig simulation;
    VerifyConfig verify;
    nlohmann::json document;  ///< parsed document, keys sorted
};

RunConfig load_config_file(const std::string& path);
RunConfig load_config_string(const std::string& text, const std::string& source = "<string>");

/// SHA-256 of the canonical (sorted-key) JSON form of the document.
std::string config_digest(const RunConfig& config);
std::string sha256_hex(const std::string& bytes);

/// l0 as an exact callable, tabulated on the given axes.
StateCost build_state_cost(const StateCostConfig& c, const std::vector<GridAxis>& axes);

}  // namespace hjbs
