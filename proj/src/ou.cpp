#include "hjbs/ou.hpp"

#include <cmath>

#include "hjbs/error.hpp"

namespace hjbs {

OuEvaluator::OuEvaluator(const SpectralModel& model, double t, const QuadScheme& scheme)
    : kernel_(smoothing_kernel(model, t)) {
    const Eigen::Index r = kernel_.law.rank;
    Matrix xi;
    if (scheme.kind == QuadScheme::Kind::GaussHermite) {
        if (scheme.order < 2) fail(ErrorCode::InvalidArgument, "Gauss-Hermite order must be >= 2");
        if (r > 3) fail(ErrorCode::InvalidArgument, "tensor Gauss-Hermite is limited to 3 directions");
        TensorRule rule = tensor_hermite(scheme.order, r);
        xi = std::move(rule.points);
        weights_ = std::move(rule.weights);
    } else {
        if (scheme.samples < 1000) fail(ErrorCode::InvalidArgument, "Monte Carlo needs at least 1000 samples");
        const auto ns = static_cast<Eigen::Index>(scheme.samples);
        xi.resize(r, ns);
        std::vector<double> buf(static_cast<std::size_t>(r));
        for (Eigen::Index c = 0; c < ns; ++c) {
            standard_normals(scheme.seed, static_cast<std::uint64_t>(c), buf);
            for (Eigen::Index d = 0; d < r; ++d) xi(d, c) = buf[static_cast<std::size_t>(d)];
        }
        weights_ = Vector::Constant(ns, 1.0 / static_cast<double>(ns));
    }
    shifts_ = kernel_.law.factor() * xi;
    grad_weights_ = kernel_.lambda_white.transpose() * xi;
}

Matrix OuEvaluator::evaluation_points(const Vector& z) const {
    const Vector mean = kernel_.transition * z;
    return shifts_.colwise() + mean;
}

void OuEvaluator::apply_both(const Integrand& fhat, const Vector& z, double& value,
                             Vector& gradient) const {
    if (z.size() != kernel_.transition.rows()) fail(ErrorCode::DimensionMismatch, "point has wrong dimension");
    const Vector mean = kernel_.transition * z;
    value = 0.0;
    gradient = Vector::Zero(grad_weights_.rows());
    Vector y(mean.size());
    for (Eigen::Index c = 0; c < weights_.size(); ++c) {
        y = mean + shifts_.col(c);
        const double f = fhat(y);
        if (!std::isfinite(f)) fail(ErrorCode::NonFiniteIntegrand, "integrand returned a non-finite value");
        const double wf = weights_(c) * f;
        value += wf;
        gradient += wf * grad_weights_.col(c);
    }
}

double OuEvaluator::apply(const Integrand& fhat, const Vector& z) const {
    double v;
    Vector g;
    apply_both(fhat, z, v, g);
    return v;
}

Vector OuEvaluator::b_gradient(const Integrand& fhat, const Vector& z) const {
    double v;
    Vector g;
    apply_both(fhat, z, v, g);
    return g;
}

namespace {

Integrand wrap(const GridFunction& f) {
    return [&f](const Vector& z) { return f.eval(z); };
}

}  // namespace

double ou_apply(const SpectralModel& model, double t, const Integrand& fhat, const Vector& z,
                const QuadScheme& scheme) {
    if (t == 0.0) return fhat(z);
    return OuEvaluator(model, t, scheme).apply(fhat, z);
}

double ou_apply(const SpectralModel& model, double t, const GridFunction& fhat, const Vector& z,
                const QuadScheme& scheme) {
    return ou_apply(model, t, wrap(fhat), z, scheme);
}

Vector ou_b_gradient(const SpectralModel& model, double t, const Integrand& fhat, const Vector& z,
                     const QuadScheme& scheme) {
    return OuEvaluator(model, t, scheme).b_gradient(fhat, z);
}

Vector ou_b_gradient(const SpectralModel& model, double t, const GridFunction& fhat,
                     const Vector& z, const QuadScheme& scheme) {
    return ou_b_gradient(model, t, wrap(fhat), z, scheme);
}

}  // namespace hjbs
