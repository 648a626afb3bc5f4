#include "hjbs/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjbs/error.hpp"

namespace hjbs {

namespace {

void require_positive(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        std::ostringstream os;
        os << "t must be > 0, got " << t;
        fail(ErrorCode::NegativeTime, os.str());
    }
}

double relative_residual(const Matrix& fitted, const Matrix& target) {
    const double scale = target.norm();
    if (scale == 0.0) return 0.0;
    return (fitted - target).norm() / scale;
}

}  // namespace

SmoothingKernel smoothing_kernel(const SpectralModel& model, double t, double range_tol) {
    require_positive(t);
    SmoothingKernel k;
    k.t = t;
    const Matrix& v = model.projection();
    const Matrix et = model.semigroup_matrix(t);
    k.transition = v.transpose() * et * v;
    k.response = v.transpose() * et * model.control();
    k.law = factorize_covariance(model.covariance_projected(t));
    k.lambda_white = k.law.whiten() * k.response;
    k.residual = relative_residual(k.law.factor() * k.lambda_white, k.response);
    if (k.residual > range_tol) {
        std::ostringstream os;
        os << "P e^{tA} B leaves the range of the projected covariance at t = " << t
           << " (residual " << k.residual << ")";
        fail(ErrorCode::RangeViolation, os.str());
    }
    return k;
}

LambdaOperator lambda_operator(const SpectralModel& model, double t) {
    const SmoothingKernel k = smoothing_kernel(model, t);
    return {k.law.basis * k.lambda_white, k.residual};
}

double lambda_norm(const SpectralModel& model, double t) {
    const SmoothingKernel k = smoothing_kernel(model, t);
    return spectral_norm(k.lambda_white);
}

double duality_constant(const SpectralModel& model, double t) {
    require_positive(t);
    const Matrix q = model.covariance_projected(t);
    const Matrix m = model.projected_control_response(t);
    if (m.norm() == 0.0) return 0.0;
    // Diagonal scaling keeps graded covariances well conditioned for Cholesky.
    const Vector d = q.diagonal().cwiseMax(0.0).cwiseSqrt();
    if (!(d.minCoeff() > 0.0)) fail(ErrorCode::DegeneratePencil, "projected covariance has a null coordinate");
    const Vector dinv = d.cwiseInverse();
    const Matrix qs = dinv.asDiagonal() * q * dinv.asDiagonal();
    const Matrix ms = dinv.asDiagonal() * m;
    Eigen::LLT<Matrix> llt(qs);
    if (llt.info() != Eigen::Success) fail(ErrorCode::DegeneratePencil, "projected covariance is not positive definite");
    const Matrix y = llt.matrixL().solve(ms);
    const Matrix pencil = y * y.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(pencil, Eigen::EigenvaluesOnly);
    return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

double unprojected_lambda_norm(const SpectralModel& model, double t) {
    require_positive(t);
    const GaussianFactor f = factorize_covariance(model.covariance(t));
    const Matrix m = model.semigroup_matrix(t) * model.control();
    const Matrix lam = f.whiten() * m;
    const double res = relative_residual(f.factor() * lam, m);
    if (res > 1e-8) {
        std::ostringstream os;
        os << "e^{tA} B leaves the range of Q_t^{1/2} at t = " << t << " (residual " << res << ")";
        fail(ErrorCode::RangeViolation, os.str());
    }
    return spectral_norm(lam);
}

LiftDiscretization make_lift_discretization(const SpectralModel& model, double rho,
                                            std::size_t nodes, double t_lo,
                                            double horizon_factor) {
    if (!(rho > model.growth_type())) {
        std::ostringstream os;
        os << "weight exponent rho = " << rho << " must exceed the growth type "
           << model.growth_type();
        fail(ErrorCode::BadWeight, os.str());
    }
    LiftDiscretization d;
    d.rho = rho;
    d.time_nodes = geometric_grid(t_lo, horizon_factor / rho, nodes);
    const double h = std::log(d.time_nodes[1] / d.time_nodes[0]);
    d.quad_weights.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
        d.quad_weights[i] = h * d.time_nodes[i] * ((i == 0 || i + 1 == nodes) ? 0.5 : 1.0);
    return d;
}

namespace {

void check_disc(const SpectralModel& model, const LiftDiscretization& disc) {
    if (!(disc.rho > model.growth_type())) fail(ErrorCode::BadWeight, "rho must exceed the growth type");
    if (disc.time_nodes.size() != disc.quad_weights.size() || disc.time_nodes.empty())
        fail(ErrorCode::InvalidArgument, "lift nodes and weights differ in length");
    for (std::size_t i = 0; i < disc.time_nodes.size(); ++i) {
        if (!(disc.quad_weights[i] > 0.0)) fail(ErrorCode::BadWeight, "lift weights must be positive");
        if (i > 0 && !(disc.time_nodes[i] > disc.time_nodes[i - 1]))
            fail(ErrorCode::InvalidArgument, "lift nodes must increase");
    }
}

double node_scale(const LiftDiscretization& disc, std::size_t i) {
    return std::sqrt(disc.quad_weights[i]) * std::exp(-disc.rho * disc.time_nodes[i]);
}

}  // namespace

Matrix lift_operator(const SpectralModel& model, const LiftDiscretization& disc) {
    check_disc(model, disc);
    const Eigen::Index n = model.dim_p();
    const auto nt = static_cast<Eigen::Index>(disc.time_nodes.size());
    Matrix l(n * nt, model.state_dim());
    const Matrix vt = model.projection().transpose();
    for (Eigen::Index i = 0; i < nt; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        l.middleRows(i * n, n) = node_scale(disc, iu) * vt * model.semigroup_matrix(disc.time_nodes[iu]);
    }
    return l;
}

double lift_norm_squared(const SpectralModel& model, const LiftDiscretization& disc,
                         const Vector& x) {
    check_disc(model, disc);
    double s = 0.0;
    for (std::size_t i = 0; i < disc.time_nodes.size(); ++i) {
        const Vector y = model.projection().transpose() * model.semigroup(disc.time_nodes[i], x);
        const double a = node_scale(disc, i);
        s += a * a * y.squaredNorm();
    }
    return s;
}

Vector lift_adjoint(const SpectralModel& model, const LiftDiscretization& disc, const Matrix& z) {
    check_disc(model, disc);
    if (z.rows() != model.dim_p() || z.cols() != static_cast<Eigen::Index>(disc.time_nodes.size()))
        fail(ErrorCode::DimensionMismatch, "trajectory must be n x nodes");
    Vector out = Vector::Zero(model.state_dim());
    for (std::size_t i = 0; i < disc.time_nodes.size(); ++i) {
        const double a = node_scale(disc, i);
        const Vector pz = model.projection() * z.col(static_cast<Eigen::Index>(i));
        out += a * a * model.semigroup_adjoint(disc.time_nodes[i], pz);
    }
    return out;
}

double lift_adjoint_check(const SpectralModel& model, const LiftDiscretization& disc,
                          const Matrix& z, const Vector& x) {
    const Vector adj = lift_adjoint(model, disc, z);
    double lhs = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < disc.time_nodes.size(); ++i) {
        const Vector y = model.projection().transpose() * model.semigroup(disc.time_nodes[i], x);
        const double a = node_scale(disc, i);
        const Eigen::Index c = static_cast<Eigen::Index>(i);
        lhs += a * a * y.dot(z.col(c));
        scale += a * a * y.norm() * z.col(c).norm();
    }
    const double rhs = x.dot(adj);
    if (scale == 0.0) return std::abs(lhs - rhs);
    return std::abs(lhs - rhs) / scale;
}

double lifted_lambda_norm(const SpectralModel& model, const LiftDiscretization& disc, double t) {
    require_positive(t);
    const Matrix l = lift_operator(model, disc);
    const GaussianFactor fq = factorize_covariance(model.covariance(t));
    const Matrix target = l * model.semigroup_matrix(t) * model.control();
    if (target.norm() == 0.0) return 0.0;
    // Upsilon Q_t Upsilon* = T T^T with T = Upsilon F_Q.
    const Matrix tm = l * fq.factor();
    Eigen::JacobiSVD<Matrix> svd(tm, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > 1e-12 * sv(0)) ++r;
    const Matrix u = svd.matrixU().leftCols(r);
    const Matrix lam = sv.head(r).cwiseInverse().asDiagonal() * (u.transpose() * target);
    const double res = relative_residual(u * (sv.head(r).asDiagonal() * lam), target);
    if (res > 1e-8) {
        std::ostringstream os;
        os << "lifted response leaves the lifted covariance range at t = " << t << " (residual " << res << ")";
        fail(ErrorCode::RangeViolation, os.str());
    }
    return spectral_norm(lam);
}

double kappa0_for(std::span<const double> t, std::span<const double> norms, double gamma) {
    double k = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        k = std::max(k, norms[i] / std::max(std::pow(t[i], -gamma), 1.0));
    return k;
}

EstimateReport fit_exponent(const SpectralModel& model, double t_min, double t_max,
                            std::size_t n_samples, const EstimateOptions& options) {
    if (!(t_min > 0.0) || !(t_max > t_min)) fail(ErrorCode::InvalidArgument, "need 0 < t_min < t_max");
    if (n_samples < 8) fail(ErrorCode::InvalidArgument, "need at least 8 samples");
    EstimateReport rep;
    rep.t_samples = geometric_grid(t_min, t_max, n_samples);
    std::optional<LiftDiscretization> disc;
    if (options.lifted) disc = make_lift_discretization(model);
    const bool unproj = options.unprojected && model.kind() == ModelKind::HeatBoundary;
    for (double t : rep.t_samples) {
        const SmoothingKernel k = smoothing_kernel(model, t);
        rep.norms.push_back(spectral_norm(k.lambda_white));
        rep.residuals.push_back(k.residual);
        rep.duality.push_back(duality_constant(model, t));
        if (disc) rep.lifted.push_back(lifted_lambda_norm(model, *disc, t));
        if (unproj) rep.unprojected_norms.push_back(unprojected_lambda_norm(model, t));
    }
    const PowerLawFit fit = fit_power_law(rep.t_samples, rep.norms);
    rep.fitted_exponent = fit.slope;
    rep.fit_r2 = fit.r2;
    if (unproj) rep.unprojected_fit = fit_power_law(rep.t_samples, rep.unprojected_norms);

    const double gamma = std::clamp(-fit.slope, 0.0, 1.0);
    rep.kappa0 = kappa0_for(rep.t_samples, rep.norms, gamma);
    if (options.sweep_samples >= 2) {
        const auto sweep = geometric_grid(options.sweep_lo, options.sweep_hi, options.sweep_samples);
        std::vector<double> sn;
        sn.reserve(sweep.size());
        for (double t : sweep) sn.push_back(lambda_norm(model, t));
        rep.kappa0 = std::max(rep.kappa0, kappa0_for(sweep, sn, gamma));
    }
    return rep;
}

StrongFellerReport strong_feller_diagnostic(const SpectralModel& model, double t) {
    require_positive(t);
    StrongFellerReport rep;
    rep.t = t;
    rep.state_dim = model.state_dim();
    const GaussianFactor f = factorize_covariance(model.covariance(t));
    rep.covariance_rank = f.rank;
    const Matrix e = model.semigroup_matrix(t);
    const Matrix lam = f.whiten() * e;
    rep.residual = relative_residual(f.factor() * lam, e);
    rep.holds = rep.residual <= 1e-8;
    rep.norm = rep.holds ? spectral_norm(lam) : std::numeric_limits<double>::infinity();
    return rep;
}

}  // namespace hjbs
