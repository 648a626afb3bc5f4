#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hjbs/linalg.hpp"
#include "hjbs/types.hpp"

namespace hjbs {

enum class ModelKind { HeatBoundary, WaveDistributed };

/// User-facing description of one of the two truncated models on O = (0,1).
///
/// Heat: H = L^2(0,1) in the sine basis, A = Laplacian with Dirichlet
/// conditions, noise G = noise_scale * (-A)^{-beta}, boundary control
/// u = (a0, a1) entering through B = -A D with D the Dirichlet lift.
/// Wave: H = H^1_0 x L^2 with the energy norm, stored per mode as the pair
/// (c*kappa_j*u_j, v_j); noise and control act on the velocity component.
struct ModelConfig {
    ModelKind kind = ModelKind::HeatBoundary;
    std::size_t modes = 64;

    // heat
    double beta = 0.0;
    double alpha = 0.6;
    double epsilon = 0.1;
    double noise_scale = 1.4142135623730951;
    Matrix projection;  ///< n x k, row i = eigenbasis coefficients of v_i (k <= modes)
    bool orthonormalize = true;

    // wave
    double wave_speed = 1.0;
    std::size_t projected_modes = 8;
    std::size_t control_modes = 0;  ///< 0 means every mode
    std::size_t noise_modes = 0;    ///< 0 means projected_modes; used when sigma is empty
    Matrix sigma;                   ///< modes x noise_dim coefficients of sigma
};

enum class Space { H, HBar };

struct StateVector {
    Vector coeffs;
    Space space = Space::H;
};

class SpectralModel {
public:
    explicit SpectralModel(const ModelConfig& config);

    ModelKind kind() const { return kind_; }
    const ModelConfig& config() const { return config_; }
    std::size_t modes() const { return modes_; }
    Eigen::Index state_dim() const { return state_dim_; }
    Eigen::Index dim_p() const { return projection_.cols(); }
    Eigen::Index dim_k() const { return control_.cols(); }
    Eigen::Index noise_dim() const { return noise_.cols(); }

    /// Laplacian eigenvalues (j pi)^2, j = 1..modes.
    const Vector& eigenvalues() const { return eigenvalues_; }
    /// Wave angular frequencies c * j * pi (empty for heat).
    const Vector& frequencies() const { return frequencies_; }
    /// Exponential type of the semigroup (both models are contractions).
    double growth_type() const { return 0.0; }
    double extended_weight_exponent() const { return 0.75 + config_.epsilon; }
    /// Per-coordinate weights of the extended-space norm.
    const Vector& hbar_weights() const { return hbar_weights_; }

    const Matrix& noise() const { return noise_; }              ///< G, state_dim x noise_dim
    const Matrix& control() const { return control_; }          ///< B, state_dim x dim_k
    const Matrix& projection() const { return projection_; }    ///< V, columns v_i
    /// Orthogonal projector onto span{v_i}.
    Matrix projector() const;
    double gram_condition() const { return gram_condition_; }
    /// |(-A)^alpha v_i| per projection vector (heat only).
    const Vector& projection_regularity() const { return projection_regularity_; }
    /// Smallest eigenvalue of the noise-excited block of P G G* P*.
    double min_projected_noise_eigenvalue() const { return min_noise_eig_; }

    Vector semigroup(double t, const Vector& x) const;
    /// Applies e^{tA*}.
    Vector semigroup_adjoint(double t, const Vector& x) const;
    Matrix semigroup_matrix(double t) const;
    /// int_0^t e^{sA} ds, used for piecewise-constant forcing.
    Matrix forcing_integral(double t) const;

    /// Q_t = int_0^t e^{sA} G G* e^{sA*} ds in closed form.
    Matrix covariance(double t) const;
    /// V^T Q_t V.
    Matrix covariance_projected(double t) const;
    /// V^T e^{tA} V, the projected semigroup acting on coordinates.
    Matrix projected_semigroup(double t) const;
    /// V^T e^{tA} B.
    Matrix projected_control_response(double t) const;

    double norm(const StateVector& x) const;

    /// Wave only: maps raw (u_j, v_j) coefficients to stored coordinates and back.
    Vector wave_from_raw(const Vector& raw) const;
    Vector wave_to_raw(const Vector& x) const;

private:
    ModelConfig config_;
    ModelKind kind_;
    std::size_t modes_;
    Eigen::Index state_dim_;
    Vector eigenvalues_;
    Vector frequencies_;
    Vector hbar_weights_;
    Matrix noise_;
    Matrix control_;
    Matrix projection_;
    Vector projection_regularity_;
    double gram_condition_ = 1.0;
    double min_noise_eig_ = 0.0;
};

SpectralModel make_model(const ModelConfig& config);

StateVector semigroup_apply(const SpectralModel& model, double t, const StateVector& x);

struct ProjectedCovariance {
    Matrix cov;          ///< P Q_t P* in v_i coordinates
    Matrix sqrt_factor;  ///< symmetric square root
    Eigen::Index rank = 0;
};

ProjectedCovariance covariance_projected(const SpectralModel& model, double t);

StateVector control_operator_apply(const SpectralModel& model, const Vector& u);

/// Coordinates (<x, v_1>, ..., <x, v_n>).
Vector projection_apply(const SpectralModel& model, const StateVector& x);

/// max over samples of |P e^{tA} - e^{tA} P| in operator norm.
double check_commutation(const SpectralModel& model, std::span<const double> t_samples);

/// sup over x of |P e^{tA} x|_H / |x|_HBar.
double path_growth_norm(const SpectralModel& model, double t);

}  // namespace hjbs
