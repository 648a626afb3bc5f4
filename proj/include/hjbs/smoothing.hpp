#pragma once

#include <optional>
#include <vector>

#include "hjbs/linalg.hpp"
#include "hjbs/spectral.hpp"

namespace hjbs {

/// Everything needed to average and differentiate along B at one time t.
struct SmoothingKernel {
    double t = 0.0;
    Matrix transition;    ///< A_P(t) = V^T e^{tA} V, n x n
    GaussianFactor law;   ///< factor of P Q_t P*
    Matrix response;      ///< M = V^T e^{tA} B, n x m
    Matrix lambda_white;  ///< F^+ M, r x m (whitened coordinates)
    double residual = 0.0;  ///< |F F^+ M - M| / |M|
};

/// Builds the kernel and enforces the range inclusion Im M in Im Q^{1/2}.
SmoothingKernel smoothing_kernel(const SpectralModel& model, double t,
                                 double range_tol = 1e-8);

struct LambdaOperator {
    Matrix op;              ///< (P Q_t P*)^{-1/2} P e^{tA} B in v_i coordinates
    double residual = 0.0;  ///< relative range residual
};

LambdaOperator lambda_operator(const SpectralModel& model, double t);
double lambda_norm(const SpectralModel& model, double t);

/// Largest generalized eigenvalue of (M M^T, P Q_t P*), via Cholesky.
double duality_constant(const SpectralModel& model, double t);

/// |Q_t^{-1/2} e^{tA} B| on the full truncated state (no projection).
double unprojected_lambda_norm(const SpectralModel& model, double t);

struct LiftDiscretization {
    std::vector<double> time_nodes;
    std::vector<double> quad_weights;
    double rho = 1.0;
};

/// Geometric nodes on [t_lo, horizon_factor / rho], trapezoid weights in log t.
LiftDiscretization make_lift_discretization(const SpectralModel& model, double rho = 1.0,
                                            std::size_t nodes = 80, double t_lo = 1e-6,
                                            double horizon_factor = 20.0);

/// Rows sqrt(w_i) e^{-rho t_i} V^T e^{t_i A}; the weighted space becomes Euclidean.
Matrix lift_operator(const SpectralModel& model, const LiftDiscretization& disc);

/// Squared weighted norm sum_i w_i e^{-2 rho t_i} |P e^{t_i A} x|^2.
double lift_norm_squared(const SpectralModel& model, const LiftDiscretization& disc,
                         const Vector& x);

/// sum_i w_i e^{-2 rho t_i} e^{t_i A*} V z_i, for a trajectory z (n x nodes).
Vector lift_adjoint(const SpectralModel& model, const LiftDiscretization& disc,
                    const Matrix& z);

/// Relative mismatch between <Upsilon x, z> and <x, Upsilon* z>.
double lift_adjoint_check(const SpectralModel& model, const LiftDiscretization& disc,
                          const Matrix& z, const Vector& x);

double lifted_lambda_norm(const SpectralModel& model, const LiftDiscretization& disc, double t);

struct EstimateReport {
    std::vector<double> t_samples;
    std::vector<double> norms;
    std::vector<double> duality;
    std::vector<double> lifted;  ///< empty unless requested
    std::vector<double> residuals;
    double fitted_exponent = 0.0;
    double fit_r2 = 0.0;
    double kappa0 = 0.0;
    /// Heat only: fit of the unprojected norm over the same window.
    std::optional<PowerLawFit> unprojected_fit;
    std::vector<double> unprojected_norms;
};

struct EstimateOptions {
    bool lifted = false;
    bool unprojected = true;
    /// kappa0 also covers a geometric sweep of [sweep_lo, sweep_hi] so the
    /// bound can be used on the whole half line by the solver.
    double sweep_lo = 1e-6;
    double sweep_hi = 10.0;
    std::size_t sweep_samples = 64;
};

EstimateReport fit_exponent(const SpectralModel& model, double t_min, double t_max,
                            std::size_t n_samples, const EstimateOptions& options = {});

/// Smallest prefactor with norm(t) <= kappa0 (t^{-gamma} v 1) on the given samples.
double kappa0_for(std::span<const double> t, std::span<const double> norms, double gamma);

/// Whether e^{tA} maps into Im Q_t^{1/2} on the full state (strong Feller).
struct StrongFellerReport {
    double t = 0.0;
    Eigen::Index covariance_rank = 0;
    Eigen::Index state_dim = 0;
    double residual = 0.0;   ///< relative range residual of e^{tA}
    bool holds = false;
    double norm = 0.0;       ///< |Q_t^{-1/2} e^{tA}| when it holds
};

StrongFellerReport strong_feller_diagnostic(const SpectralModel& model, double t);

}  // namespace hjbs
