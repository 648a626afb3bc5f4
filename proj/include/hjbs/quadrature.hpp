#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hjbs/linalg.hpp"
#include "hjbs/types.hpp"

namespace hjbs {

/// Gauss-Hermite rule for the standard normal density (weights sum to 1).
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch on the probabilists' Hermite recurrence.
HermiteRule gauss_hermite(std::size_t order);

/// Tensor product of a 1-D rule in r dimensions; points stored column-wise.
struct TensorRule {
    Matrix points;   ///< r x N standard normal nodes
    Vector weights;  ///< N
};

TensorRule tensor_hermite(std::size_t order, Eigen::Index dims);

struct ProjectedGaussian {
    Vector mean;
    Matrix cov_root;  ///< symmetric square root
    Matrix factor;    ///< n x r, F F^T = covariance
    Matrix basis;     ///< n x r orthonormal U, F = U diag(sigma)
    Eigen::Index rank = 0;
};

ProjectedGaussian make_projected_gaussian(const Vector& mean, const Matrix& cov);
ProjectedGaussian make_projected_gaussian(const Vector& mean, const GaussianFactor& f);

struct QuadScheme {
    enum class Kind { GaussHermite, MonteCarlo };
    Kind kind = Kind::GaussHermite;
    std::size_t order = 20;
    std::size_t samples = 100000;
    std::uint64_t seed = 0;

    static QuadScheme gh(std::size_t order) { return {Kind::GaussHermite, order, 0, 0}; }
    static QuadScheme mc(std::size_t samples, std::uint64_t seed) {
        return {Kind::MonteCarlo, 0, samples, seed};
    }
};

struct QuadResult {
    double value = 0.0;
    double std_error = 0.0;  ///< zero for deterministic rules
};

using Integrand = std::function<double(const Vector&)>;

/// E g(mean + y), y ~ N(0, F F^T).
QuadResult expect(const Integrand& g, const ProjectedGaussian& law, const QuadScheme& scheme);

/// E[g(mean + y) <w, Q^{-1/2} y>]; directions of w outside Im Q contribute 0.
QuadResult expect_weighted(const Integrand& g, const ProjectedGaussian& law, const Vector& w,
                           const QuadScheme& scheme);

/// Counter-based stream seed, independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

/// Fills out with standard normal draws of stream (master, counter).
void standard_normals(std::uint64_t master, std::uint64_t counter, std::span<double> out);

}  // namespace hjbs
