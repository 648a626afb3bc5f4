#pragma once

#include <functional>
#include <string>

#include "hjbs/grid.hpp"
#include "hjbs/types.hpp"

namespace hjbs {

struct ControlSet {
    enum class Kind { Ball, Box };
    Kind kind = Kind::Ball;
    double radius = 1.0;
    Vector lower;
    Vector upper;

    static ControlSet ball(double r) { return {Kind::Ball, r, {}, {}}; }
    static ControlSet box(Vector lo, Vector hi) { return {Kind::Box, 0.0, std::move(lo), std::move(hi)}; }

    bool contains(const Vector& u, double tol = 1e-12) const;
    /// sup over U of |u|.
    double max_norm(Eigen::Index m) const;
};

struct ControlCost {
    enum class Kind { Quadratic, Linear, Custom };
    Kind kind = Kind::Quadratic;
    double eta = 1.0;  ///< Quadratic: eta/2 |u|^2
    double c = 0.0;    ///< Linear: c |u|
    GridFunction table;  ///< Custom: tabulated over the bounding box of U

    double operator()(const Vector& u) const;
};

/// Running state cost as a function of the projected coordinates. The grid
/// table is what gets serialized; an exact form is used when available.
struct StateCost {
    GridFunction table;
    std::function<double(const Vector&)> exact;
    std::string description;

    double operator()(const Vector& z) const { return exact ? exact(z) : table.eval(z); }
    double sup() const;
};

struct HamiltonianSpec {
    ControlSet set;
    ControlCost cost;
    StateCost l0;
    std::size_t search_nodes = 41;  ///< coarse brute-force resolution per axis
};

void validate(const HamiltonianSpec& spec, Eigen::Index m);

/// <p, u> + l1(u).
double h_cv(const Vector& p, const Vector& u, const HamiltonianSpec& spec);

struct HMin {
    double value = 0.0;
    Vector argmin;
};

HMin h_min(const Vector& p, const HamiltonianSpec& spec);

/// Lipschitz constant of H_min, sup_{u in U} |u|.
double hamiltonian_lipschitz(const HamiltonianSpec& spec, Eigen::Index m);
/// sup over U of l1.
double control_cost_sup(const HamiltonianSpec& spec, Eigen::Index m);

/// kappa0 * int_0^inf e^{-lambda t} (1 v t^{-gamma}) dt.
double contraction_bound(double lambda, double gamma, double kappa0);

/// Smallest lambda in [lo, hi] with lipschitz * contraction_bound <= margin.
double lambda_threshold(double kappa0, double gamma, double lipschitz, double margin = 0.9,
                        double lo = 1e-2, double hi = 1e6);

}  // namespace hjbs
