#include "hjbs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hjbs/error.hpp"

namespace hjbs {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Config: return "ConfigError";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::InvalidExponents: return "InvalidExponents";
        case ErrorCode::DegenerateNoise: return "DegenerateNoise";
        case ErrorCode::NegativeTime: return "NegativeTime";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::RangeViolation: return "RangeViolation";
        case ErrorCode::DegeneratePencil: return "DegeneratePencil";
        case ErrorCode::BadWeight: return "BadWeight";
        case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
        case ErrorCode::ControlOutOfSet: return "ControlOutOfSet";
        case ErrorCode::BadExponent: return "BadExponent";
        case ErrorCode::NoThreshold: return "NoThreshold";
        case ErrorCode::NotContracted: return "NotContracted";
        case ErrorCode::ThresholdGuard: return "ThresholdGuard";
        case ErrorCode::UnstableStep: return "UnstableStep";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

namespace {

constexpr double kPi = std::numbers::pi;

// sinc(x) - sinc(y), accurate when both arguments are small.
double sinc_diff(double x, double y) {
    if (std::max(std::abs(x), std::abs(y)) < 0.5) {
        double sum = 0.0, fact = 1.0;
        double x2 = x * x, y2 = y * y, xp = 1.0, yp = 1.0;
        for (int k = 1; k <= 12; ++k) {
            xp *= x2;
            yp *= y2;
            fact *= static_cast<double>((2 * k) * (2 * k + 1));
            sum += ((k % 2) ? -1.0 : 1.0) * (xp - yp) / fact;
        }
        return sum;
    }
    auto sinc = [](double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; };
    return sinc(x) - sinc(y);
}

double sinc(double x) {
    return std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
}

// int_0^t sin(w s) ds
double int_sin(double w, double t) {
    const double h = 0.5 * w * t;
    return t * std::sin(h) * sinc(h);
}

// int_0^t sin(a s) sin(b s) ds
double int_ss(double a, double b, double t) {
    return 0.5 * t * sinc_diff((a - b) * t, (a + b) * t);
}

// int_0^t cos(a s) cos(b s) ds
double int_cc(double a, double b, double t) {
    return 0.5 * t * (sinc((a - b) * t) + sinc((a + b) * t));
}

// int_0^t sin(a s) cos(b s) ds
double int_sc(double a, double b, double t) {
    return 0.5 * (int_sin(a + b, t) + int_sin(a - b, t));
}

void require_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        std::ostringstream os;
        os << "time must be >= 0, got " << t;
        fail(ErrorCode::NegativeTime, os.str());
    }
}

}  // namespace

SpectralModel::SpectralModel(const ModelConfig& config)
    : config_(config), kind_(config.kind), modes_(config.modes) {
    if (modes_ == 0) fail(ErrorCode::InvalidArgument, "model needs at least one mode");
    const auto nm = static_cast<Eigen::Index>(modes_);
    eigenvalues_.resize(nm);
    for (Eigen::Index j = 0; j < nm; ++j) {
        const double k = static_cast<double>(j + 1) * kPi;
        eigenvalues_(j) = k * k;
    }

    if (kind_ == ModelKind::HeatBoundary) {
        if (!(config.epsilon > 0.0 && config.epsilon < 0.25))
            fail(ErrorCode::InvalidExponents, "epsilon must lie in (0, 1/4)");
        if (!(config.beta >= 0.0))
            fail(ErrorCode::InvalidExponents, "beta must be >= 0");
        if (!(config.alpha > config.beta + 0.25))
            fail(ErrorCode::InvalidExponents, "alpha must exceed beta + 1/4");

        state_dim_ = nm;
        hbar_weights_ = eigenvalues_.array().pow(-extended_weight_exponent());

        noise_ = Matrix::Zero(nm, nm);
        for (Eigen::Index j = 0; j < nm; ++j)
            noise_(j, j) = config.noise_scale * std::pow(eigenvalues_(j), -config.beta);

        // (Bu)_j = lambda_j <D u, e_j>, with D(a0, a1) = a0 (1 - xi) + a1 xi.
        control_ = Matrix::Zero(nm, 2);
        for (Eigen::Index j = 0; j < nm; ++j) {
            const double c = std::sqrt(2.0) * static_cast<double>(j + 1) * kPi;
            control_(j, 0) = c;
            control_(j, 1) = (j % 2 == 0) ? c : -c;
        }

        const Matrix& rows = config.projection;
        if (rows.rows() == 0) fail(ErrorCode::Config, "heat model needs at least one projection vector");
        if (rows.cols() > nm) fail(ErrorCode::DimensionMismatch, "projection vector longer than the truncation");
        Matrix v = Matrix::Zero(nm, rows.rows());
        v.topRows(rows.cols()) = rows.transpose();

        Matrix gram = v.transpose() * v;
        Eigen::SelfAdjointEigenSolver<Matrix> gs(gram);
        const double gmin = gs.eigenvalues().minCoeff(), gmax = gs.eigenvalues().maxCoeff();
        if (!(gmin > 1e-12 * gmax)) fail(ErrorCode::Config, "projection vectors are linearly dependent");
        gram_condition_ = gmax / gmin;

        if (config.orthonormalize) {
            // Modified Gram-Schmidt keeps the orientation of v_1.
            for (Eigen::Index i = 0; i < v.cols(); ++i) {
                for (Eigen::Index k = 0; k < i; ++k) v.col(i) -= v.col(k).dot(v.col(i)) * v.col(k);
                v.col(i) /= v.col(i).norm();
            }
        }
        projection_ = v;
        projection_regularity_.resize(v.cols());
        for (Eigen::Index i = 0; i < v.cols(); ++i)
            projection_regularity_(i) =
                (eigenvalues_.array().pow(config.alpha) * v.col(i).array()).matrix().norm();
        min_noise_eig_ = (projection_.transpose() * noise_ * noise_.transpose() * projection_)
                             .selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
    } else {
        if (!(config.wave_speed > 0.0)) fail(ErrorCode::InvalidArgument, "wave speed must be positive");
        state_dim_ = 2 * nm;
        frequencies_ = config.wave_speed * eigenvalues_.array().sqrt();
        hbar_weights_ = Vector::Ones(state_dim_);

        const std::size_t np = config.projected_modes;
        if (np == 0 || np > modes_) fail(ErrorCode::Config, "projected_modes must lie in [1, modes]");

        Matrix sigma = config.sigma;
        if (sigma.size() == 0) {
            const std::size_t nn = config.noise_modes == 0 ? np : config.noise_modes;
            if (nn > modes_) fail(ErrorCode::Config, "noise_modes exceeds modes");
            sigma = Matrix::Zero(nm, static_cast<Eigen::Index>(nn));
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(nn); ++j) sigma(j, j) = 1.0;
        }
        if (sigma.rows() != nm) fail(ErrorCode::DimensionMismatch, "sigma must have one row per mode");
        noise_ = Matrix::Zero(state_dim_, sigma.cols());
        for (Eigen::Index j = 0; j < nm; ++j) noise_.row(2 * j + 1) = sigma.row(j);

        const std::size_t mk = config.control_modes == 0 ? modes_ : config.control_modes;
        if (mk > modes_) fail(ErrorCode::Config, "control_modes exceeds modes");
        control_ = Matrix::Zero(state_dim_, static_cast<Eigen::Index>(mk));
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(mk); ++j) control_(2 * j + 1, j) = 1.0;

        const auto n = static_cast<Eigen::Index>(2 * np);
        projection_ = Matrix::Zero(state_dim_, n);
        for (Eigen::Index i = 0; i < n; ++i) projection_(i, i) = 1.0;
        projection_regularity_ = Vector::Ones(n);

        // Velocity block of P G G* P*: sigma sigma* over the projected modes.
        const Matrix s = sigma.topRows(static_cast<Eigen::Index>(np));
        const Matrix ss = s * s.transpose();
        min_noise_eig_ = ss.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
        if (!(min_noise_eig_ > 1e-12)) {
            std::ostringstream os;
            os << "velocity block of PGG*P* has min eigenvalue " << min_noise_eig_;
            fail(ErrorCode::DegenerateNoise, os.str());
        }
        const GaussianFactor f = factorize_covariance(covariance_projected(1.0));
        if (f.rank < n) fail(ErrorCode::DegenerateNoise, "P Q_t P* is singular at t = 1");
    }
}

Matrix SpectralModel::projector() const {
    const Matrix gram = projection_.transpose() * projection_;
    return projection_ * gram.ldlt().solve(projection_.transpose());
}

Vector SpectralModel::semigroup(double t, const Vector& x) const {
    require_time(t);
    if (x.size() != state_dim_) fail(ErrorCode::DimensionMismatch, "state has wrong length");
    Vector y(x.size());
    if (kind_ == ModelKind::HeatBoundary) {
        y = ((-t) * eigenvalues_.array()).exp() * x.array();
    } else {
        for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) {
            const double c = std::cos(frequencies_(j) * t), s = std::sin(frequencies_(j) * t);
            const double p = x(2 * j), v = x(2 * j + 1);
            y(2 * j) = c * p + s * v;
            y(2 * j + 1) = -s * p + c * v;
        }
    }
    return y;
}

Vector SpectralModel::semigroup_adjoint(double t, const Vector& x) const {
    if (kind_ == ModelKind::HeatBoundary) return semigroup(t, x);
    require_time(t);
    if (x.size() != state_dim_) fail(ErrorCode::DimensionMismatch, "state has wrong length");
    Vector y(x.size());
    for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) {
        const double c = std::cos(frequencies_(j) * t), s = std::sin(frequencies_(j) * t);
        const double p = x(2 * j), v = x(2 * j + 1);
        y(2 * j) = c * p - s * v;
        y(2 * j + 1) = s * p + c * v;
    }
    return y;
}

Matrix SpectralModel::semigroup_matrix(double t) const {
    require_time(t);
    Matrix m = Matrix::Zero(state_dim_, state_dim_);
    if (kind_ == ModelKind::HeatBoundary) {
        m.diagonal() = ((-t) * eigenvalues_.array()).exp();
    } else {
        for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) {
            const double c = std::cos(frequencies_(j) * t), s = std::sin(frequencies_(j) * t);
            m(2 * j, 2 * j) = c;
            m(2 * j, 2 * j + 1) = s;
            m(2 * j + 1, 2 * j) = -s;
            m(2 * j + 1, 2 * j + 1) = c;
        }
    }
    return m;
}

Matrix SpectralModel::forcing_integral(double t) const {
    require_time(t);
    Matrix m = Matrix::Zero(state_dim_, state_dim_);
    if (kind_ == ModelKind::HeatBoundary) {
        for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j)
            m(j, j) = -std::expm1(-eigenvalues_(j) * t) / eigenvalues_(j);
    } else {
        for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) {
            const double w = frequencies_(j);
            const double is = t * sinc(w * t);  // int cos
            const double ic = int_sin(w, t);     // int sin
            m(2 * j, 2 * j) = is;
            m(2 * j, 2 * j + 1) = ic;
            m(2 * j + 1, 2 * j) = -ic;
            m(2 * j + 1, 2 * j + 1) = is;
        }
    }
    return m;
}

Matrix SpectralModel::covariance(double t) const {
    require_time(t);
    Matrix q = Matrix::Zero(state_dim_, state_dim_);
    if (kind_ == ModelKind::HeatBoundary) {
        for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) {
            const double g = noise_(j, j);
            q(j, j) = g * g * (-std::expm1(-2.0 * eigenvalues_(j) * t)) / (2.0 * eigenvalues_(j));
        }
        return q;
    }
    // e^{sA} (0, 1)_j = (sin w_j s, cos w_j s) in stored coordinates.
    const Eigen::Index nm = eigenvalues_.size();
    Matrix sigma(nm, noise_.cols());
    for (Eigen::Index j = 0; j < nm; ++j) sigma.row(j) = noise_.row(2 * j + 1);
    const Matrix s = sigma * sigma.transpose();
    for (Eigen::Index j = 0; j < nm; ++j) {
        for (Eigen::Index k = 0; k < nm; ++k) {
            if (s(j, k) == 0.0) continue;
            const double a = frequencies_(j), b = frequencies_(k);
            q(2 * j, 2 * k) = s(j, k) * int_ss(a, b, t);
            q(2 * j, 2 * k + 1) = s(j, k) * int_sc(a, b, t);
            q(2 * j + 1, 2 * k) = s(j, k) * int_sc(b, a, t);
            q(2 * j + 1, 2 * k + 1) = s(j, k) * int_cc(a, b, t);
        }
    }
    return q;
}

Matrix SpectralModel::covariance_projected(double t) const {
    const Matrix q = projection_.transpose() * covariance(t) * projection_;
    return 0.5 * (q + q.transpose());
}

Matrix SpectralModel::projected_semigroup(double t) const {
    return projection_.transpose() * semigroup_matrix(t) * projection_;
}

Matrix SpectralModel::projected_control_response(double t) const {
    return projection_.transpose() * semigroup_matrix(t) * control_;
}

double SpectralModel::norm(const StateVector& x) const {
    if (x.coeffs.size() != state_dim_) fail(ErrorCode::DimensionMismatch, "state has wrong length");
    if (x.space == Space::H) return x.coeffs.norm();
    return std::sqrt((hbar_weights_.array() * x.coeffs.array().square()).sum());
}

Vector SpectralModel::wave_from_raw(const Vector& raw) const {
    if (kind_ != ModelKind::WaveDistributed) fail(ErrorCode::InvalidArgument, "not a wave model");
    if (raw.size() != state_dim_) fail(ErrorCode::DimensionMismatch, "state has wrong length");
    Vector x = raw;
    for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) x(2 * j) *= frequencies_(j);
    return x;
}

Vector SpectralModel::wave_to_raw(const Vector& x) const {
    if (kind_ != ModelKind::WaveDistributed) fail(ErrorCode::InvalidArgument, "not a wave model");
    if (x.size() != state_dim_) fail(ErrorCode::DimensionMismatch, "state has wrong length");
    Vector raw = x;
    for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) raw(2 * j) /= frequencies_(j);
    return raw;
}

SpectralModel make_model(const ModelConfig& config) { return SpectralModel(config); }

StateVector semigroup_apply(const SpectralModel& model, double t, const StateVector& x) {
    return {model.semigroup(t, x.coeffs), x.space};
}

ProjectedCovariance covariance_projected(const SpectralModel& model, double t) {
    if (!(t > 0.0)) fail(ErrorCode::NegativeTime, "projected covariance needs t > 0");
    ProjectedCovariance out;
    out.cov = model.covariance_projected(t);
    const GaussianFactor f = factorize_covariance(out.cov);
    out.sqrt_factor = f.sym_root();
    out.rank = f.rank;
    return out;
}

StateVector control_operator_apply(const SpectralModel& model, const Vector& u) {
    if (u.size() != model.dim_k()) fail(ErrorCode::DimensionMismatch, "control has wrong length");
    const Space space = model.kind() == ModelKind::HeatBoundary ? Space::HBar : Space::H;
    return {model.control() * u, space};
}

Vector projection_apply(const SpectralModel& model, const StateVector& x) {
    if (x.coeffs.size() != model.state_dim()) fail(ErrorCode::DimensionMismatch, "state has wrong length");
    return model.projection().transpose() * x.coeffs;
}

double check_commutation(const SpectralModel& model, std::span<const double> t_samples) {
    const Matrix p = model.projector();
    double worst = 0.0;
    for (double t : t_samples) {
        const Matrix e = model.semigroup_matrix(t);
        worst = std::max(worst, spectral_norm(p * e - e * p));
    }
    return worst;
}

double path_growth_norm(const SpectralModel& model, double t) {
    Matrix op = model.projection().transpose() * model.semigroup_matrix(t);
    const Vector inv_sqrt_w = model.hbar_weights().array().rsqrt();
    return spectral_norm(op * inv_sqrt_w.asDiagonal());
}

}  // namespace hjbs
