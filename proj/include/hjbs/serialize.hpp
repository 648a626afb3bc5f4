#pragma once

#include <string>

#include <json.hpp>

#include "hjbs/hjb.hpp"
#include "hjbs/smoothing.hpp"
#include "hjbs/synthesis.hpp"

namespace hjbs {

/// Shortest round-trip decimal form, '.' as decimal separator.
std::string format_double(double x);

nlohmann::json grid_to_json(const GridFunction& g);
GridFunction grid_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const ValueSolution& sol);
/// Raises Config errors naming the offending field.
ValueSolution solution_from_json(const nlohmann::json& j);
ValueSolution solution_from_text(const std::string& text);

/// Columns: iteration, residual, ratio.
std::string residual_csv(const ValueSolution& sol);

/// Columns: t, lambda_norm, duality_constant, lifted_lambda_norm, residual.
std::string estimates_csv(const EstimateReport& r);

nlohmann::json simulation_to_json(const SimulationResult& r);
/// Columns: path, t, z_1..z_n, u_1..u_m.
std::string trajectories_csv(const SimulationResult& r);

}  // namespace hjbs
