#pragma once

#include <span>
#include <vector>

#include "hjbs/types.hpp"

namespace hjbs {

/// Factorization Q = F F^T of a symmetric positive semidefinite covariance.
///
/// The matrix is first rescaled by its diagonal (Q = D S D) so graded
/// covariances such as the wave block [[t^3/3, t^2/2], [t^2/2, t]] keep their
/// small eigenvalues to relative accuracy. F = U diag(sigma) holds the
/// retained eigenvectors U of Q scaled by the square roots sigma of the
/// eigenvalues. Eigenvalues below rank_tol * (largest eigenvalue) are
/// dropped and negative round-off is clamped to zero.
struct GaussianFactor {
    Matrix cov;        ///< n x n covariance as given
    Matrix basis;      ///< n x r, orthonormal columns U spanning Im Q
    Vector sigma;      ///< r square roots of the retained eigenvalues
    Eigen::Index rank = 0;
    Matrix scaled_factor;   ///< F0 = D V sqrt(ev) from the correlation eigenproblem
    Matrix scaled_inverse;  ///< left inverse of F0
    Matrix rotation;        ///< W with F0 W = U diag(sigma)

    Eigen::Index dim() const { return cov.rows(); }
    /// F = U diag(sigma), so that y = F xi with xi ~ N(0, I_r) has law N(0, Q).
    Matrix factor() const;
    /// Symmetric square root U diag(sigma) U^T.
    Matrix sym_root() const;
    /// Pseudo-inverse F^+ = diag(1/sigma) U^T.
    Matrix whiten() const;
    /// Condition number of the retained part (max sigma / min sigma)^2.
    double condition() const;
};

GaussianFactor factorize_covariance(const Matrix& cov, double rank_tol = 1e-12);

/// Largest singular value.
double spectral_norm(const Matrix& a);

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least-squares line through (log x, log y).
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

/// n points geometrically spaced on [lo, hi], endpoints included.
std::vector<double> geometric_grid(double lo, double hi, std::size_t n);

}  // namespace hjbs
