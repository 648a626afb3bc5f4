#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hjbs/grid.hpp"
#include "hjbs/hamiltonian.hpp"
#include "hjbs/ou.hpp"
#include "hjbs/smoothing.hpp"

namespace hjbs {

/// Graded rule for int_0^inf e^{-lambda t} f(t) dt: trapezoid in log t on one
/// geometric grid over [t_cut, t_max]; [0, t_cut] is folded into the first node.
struct TimeQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;  ///< already include e^{-lambda t}
    double lambda = 0.0;
    double t_cut = 0.0;
    double t_max = 0.0;
    double cut_weight = 0.0;  ///< int_0^{t_cut} e^{-lambda t} dt
};

TimeQuadrature make_time_quadrature(double lambda, std::size_t nodes = 96, double t_cut = 1e-6,
                                    double tmax_factor = 40.0);

/// Constants behind the contraction argument.
struct Certificate {
    double kappa0 = 0.0;
    double gamma = 0.0;
    double fit_r2 = 0.0;
    double lipschitz = 0.0;
    double margin = 0.9;
    double lambda0 = 0.0;
};

Certificate certify(const SpectralModel& model, const HamiltonianSpec& spec,
                    const EstimateReport& report, double margin = 0.9);

struct SolverSettings {
    double lambda = 0.0;  ///< 0 selects the certified threshold
    double tol = 1e-6;
    std::size_t max_iter = 200;
    std::size_t grid_nodes = 0;  ///< 0: 33 per axis for n <= 2, 17 for n = 3
    double grid_halfwidth = 5.0;  ///< in standard deviations of the projected law at t_max
    std::vector<GridAxis> axes;   ///< explicit grid, overrides the two fields above
    std::size_t gh_order = 20;
    std::size_t time_nodes = 96;
    double t_cut = 1e-6;
    double tmax_factor = 40.0;
    unsigned threads = 1;
    double init_value = 0.0;  ///< constant initial v
    Vector init_gradient;     ///< constant initial w (empty means 0)
    /// Initial w as a function of the node point; overrides init_gradient.
    std::function<Vector(const Vector&)> init_gradient_fn;
    double fd_step = 1e-4;
};

struct SolverDiagnostics {
    std::size_t iterations = 0;
    bool converged = false;
    bool below_threshold = false;
    double certified_rate = 0.0;  ///< L_H * max(contraction bound, 1/lambda)
    std::vector<double> ratios;
    double quadrature_error = 0.0;  ///< tail plus cut budget of the last sweep
    double consistency_error = 0.0; ///< sup over interior nodes |FD of v - w|
    double gradient_lipschitz = 0.0;
    double value_bound = 0.0;       ///< (sup l0 + sup l1) / lambda
};

struct ValueSolution {
    GridFunction v;
    GridFunction w;
    double lambda = 0.0;
    std::vector<double> residual_history;
    double contraction_bound = 0.0;
    double tol = 0.0;
    Certificate certificate;
    SolverDiagnostics diagnostics;
    /// Cubic interpolants of v and w; rebuilt by refresh_interpolants().
    SplineFunction v_fn;
    SplineFunction w_fn;

    void refresh_interpolants();
    double value(const Vector& z) const { return v_fn.eval(z); }
    Vector gradient(const Vector& z) const { return w_fn.eval_vector(z); }
};

/// The operator F = (F1, F2) on a fixed grid, with all kernels precomputed.
class MildOperator {
public:
    MildOperator(const SpectralModel& model, const HamiltonianSpec& spec, double lambda,
                 std::vector<GridAxis> axes, const SolverSettings& settings,
                 const Certificate& certificate);

    const std::vector<GridAxis>& axes() const { return axes_; }
    const TimeQuadrature& time_quadrature() const { return quad_; }
    Eigen::Index dim_k() const { return m_; }

    struct Result {
        GridFunction v;
        GridFunction w;
        double error_budget = 0.0;
    };

    /// F evaluated on every grid node given the current gradient field w.
    Result apply(const GridFunction& w) const;
    /// F1[w] at an arbitrary projected point.
    double value_at(const GridFunction& w, const Vector& z) const;
    /// F2[w] at an arbitrary projected point.
    Vector gradient_at(const GridFunction& w, const Vector& z) const;

private:
    void evaluate(const SplineFunction& w, const Vector& z, double& value, Vector& grad) const;

    const SpectralModel& model_;
    const HamiltonianSpec& spec_;
    double lambda_;
    std::vector<GridAxis> axes_;
    TimeQuadrature quad_;
    std::vector<OuEvaluator> kernels_;
    Eigen::Index m_;
    unsigned threads_;
    double kappa0_, gamma_;
};

/// Default grid: per axis, +-halfwidth standard deviations of P X(t_max).
std::vector<GridAxis> default_axes(const SpectralModel& model, double lambda,
                                   const SolverSettings& settings);

ValueSolution solve_fixed_point(const SpectralModel& model, const HamiltonianSpec& spec,
                                const Certificate& certificate, const SolverSettings& settings);

/// Sup over interior nodes of |(F1[w](z + h d_k) - F1[w](z - h d_k)) / 2h - w_k(z)|,
/// with d_k = V^T B e_k.
double mild_consistency_error(const MildOperator& op, const SpectralModel& model,
                              const GridFunction& w_source, const GridFunction& w, double h);

}  // namespace hjbs
