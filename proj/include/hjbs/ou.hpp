#pragma once

#include "hjbs/grid.hpp"
#include "hjbs/quadrature.hpp"
#include "hjbs/smoothing.hpp"

namespace hjbs {

/// Precomputed O-U kernel at a fixed t: quadrature nodes pushed through the
/// covariance factor, reused for every base point z.
class OuEvaluator {
public:
    OuEvaluator(const SpectralModel& model, double t, const QuadScheme& scheme);

    double t() const { return kernel_.t; }
    const SmoothingKernel& kernel() const { return kernel_; }
    Eigen::Index nodes() const { return weights_.size(); }

    /// E fhat(A_P(t) z + eta), eta ~ N(0, P Q_t P*).
    double apply(const Integrand& fhat, const Vector& z) const;
    /// B-gradient as an m-vector: Lambda_R^T E[fhat(.) xi].
    Vector b_gradient(const Integrand& fhat, const Vector& z) const;
    /// Both quantities from one sweep of integrand evaluations.
    void apply_both(const Integrand& fhat, const Vector& z, double& value, Vector& gradient) const;

    /// Points where fhat is evaluated for base point z (n x nodes).
    Matrix evaluation_points(const Vector& z) const;
    const Vector& weights() const { return weights_; }
    /// Per-node gradient weights Lambda_R^T xi_c (m x nodes).
    const Matrix& gradient_weights() const { return grad_weights_; }

private:
    SmoothingKernel kernel_;
    Matrix shifts_;        ///< F xi_c, n x N
    Vector weights_;       ///< N
    Matrix grad_weights_;  ///< m x N
};

double ou_apply(const SpectralModel& model, double t, const Integrand& fhat, const Vector& z,
                const QuadScheme& scheme);
double ou_apply(const SpectralModel& model, double t, const GridFunction& fhat, const Vector& z,
                const QuadScheme& scheme);

Vector ou_b_gradient(const SpectralModel& model, double t, const Integrand& fhat, const Vector& z,
                     const QuadScheme& scheme);
Vector ou_b_gradient(const SpectralModel& model, double t, const GridFunction& fhat,
                     const Vector& z, const QuadScheme& scheme);

}  // namespace hjbs
