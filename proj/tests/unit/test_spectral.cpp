#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"

using namespace hjbs;
using namespace hjbs::test;

namespace {

constexpr double kPi = std::numbers::pi;

Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

// Composite Simpson of s -> e^{sA} G G* e^{sA*} over [0, t].
Matrix covariance_by_quadrature(const SpectralModel& m, double t, int panels) {
    const double h = t / panels;
    Matrix acc = Matrix::Zero(m.state_dim(), m.state_dim());
    for (int i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const Matrix eg = m.semigroup_matrix(i * h) * m.noise();
        acc += w * eg * eg.transpose();
    }
    return acc * h / 3.0;
}

}  // namespace

TEST(Spectral, HeatEigenvaluesAreSquaredWavenumbers) {
    const SpectralModel m(heat_config(8));
    for (Eigen::Index j = 0; j < 8; ++j) EXPECT_NEAR(m.eigenvalues()(j), std::pow((j + 1) * kPi, 2), 1e-12);
}

TEST(Spectral, SemigroupPropertyHoldsForBothModels) {
    std::mt19937_64 rng(7);
    for (const ModelConfig& c : {heat_config(), wave_config()}) {
        const SpectralModel m(c);
        const Vector x = random_vector(m.state_dim(), rng);
        const Vector a = m.semigroup(0.03 + 0.02, x);
        const Vector b = m.semigroup(0.03, m.semigroup(0.02, x));
        EXPECT_LE((a - b).norm(), 1e-12 * x.norm());
        EXPECT_LE((m.semigroup(0.0, x) - x).norm(), 1e-15 * x.norm());
    }
}

TEST(Spectral, WaveSemigroupConservesEnergy) {
    std::mt19937_64 rng(11);
    const SpectralModel m(wave_config());
    const Vector x = random_vector(m.state_dim(), rng);
    for (double t : {1e-3, 0.1, 1.0, 7.5}) EXPECT_NEAR(m.semigroup(t, x).norm(), x.norm(), 1e-12 * x.norm());
}

TEST(Spectral, HeatAdjointMatchesTranspose) {
    std::mt19937_64 rng(3);
    const SpectralModel m(heat_config(16));
    const Vector x = random_vector(16, rng), y = random_vector(16, rng);
    EXPECT_NEAR(m.semigroup(0.01, x).dot(y), x.dot(m.semigroup_adjoint(0.01, y)), 1e-12);
}

TEST(Spectral, HeatCovarianceMatchesScalarClosedForm) {
    const SpectralModel m(heat_config(8));
    const double t = 0.1;
    const Matrix q = m.covariance(t);
    for (Eigen::Index j = 0; j < 8; ++j) {
        const double lam = std::pow((j + 1) * kPi, 2);
        const double expected = 2.0 * (1.0 - std::exp(-2.0 * lam * t)) / (2.0 * lam);
        EXPECT_NEAR(q(j, j), expected, 1e-14);
    }
    EXPECT_NEAR(q(0, 1), 0.0, 0.0);
}

TEST(Spectral, WaveCovarianceMatchesQuadrature) {
    const SpectralModel m(wave_config(6, 3));
    for (double t : {0.05, 0.7}) {
        const Matrix q = m.covariance(t);
        const Matrix oracle = covariance_by_quadrature(m, t, 4000);
        EXPECT_LE((q - oracle).norm(), 1e-10 * oracle.norm()) << "t = " << t;
    }
}

TEST(Spectral, SmallTimeCovarianceIsLinearInTime) {
    const SpectralModel m(heat_config(4));
    const double t = 1e-6;
    const Matrix gg = m.noise() * m.noise().transpose();
    const Matrix q = m.covariance(t);
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(q(j, j) / (t * gg(j, j)), 1.0, 1e-2);
}

TEST(Spectral, HeatControlMatchesDirichletLift) {
    // (Bu)_j = lambda_j <D u, e_j>; integrate D u against sqrt(2) sin(j pi xi) by Simpson.
    const SpectralModel m(heat_config(6));
    const Vector u = (Vector(2) << 0.7, -1.3).finished();
    const Vector bu = control_operator_apply(m, u).coeffs;
    const int panels = 2000;
    for (int j = 1; j <= 6; ++j) {
        double s = 0.0;
        for (int i = 0; i <= panels; ++i) {
            const double xi = static_cast<double>(i) / panels;
            const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * (u(0) * (1.0 - xi) + u(1) * xi) * std::sqrt(2.0) * std::sin(j * kPi * xi);
        }
        s /= 3.0 * panels;
        EXPECT_NEAR(bu(j - 1), std::pow(j * kPi, 2) * s, 1e-8);
    }
}

TEST(Spectral, SpectralProjectionsCommute) {
    const std::vector<double> ts{1e-4, 1e-2, 1.0};
    EXPECT_LE(check_commutation(SpectralModel(heat_config()), ts), 1e-12);
    EXPECT_LE(check_commutation(SpectralModel(wave_config()), ts), 1e-12);
}

TEST(Spectral, MixedProjectionDoesNotCommute) {
    ModelConfig c = heat_config(8);
    c.projection = (Matrix(1, 2) << 1.0, 1.0).finished();
    const std::vector<double> ts{1e-2};
    EXPECT_GT(check_commutation(SpectralModel(c), ts), 1e-3);
}

TEST(Spectral, ProjectionReturnsInnerProducts) {
    const SpectralModel m(heat_config(8));
    Vector x = Vector::Zero(8);
    x(0) = 0.25;
    x(3) = 9.0;
    const Vector z = projection_apply(m, {x, Space::H});
    ASSERT_EQ(z.size(), 1);
    EXPECT_DOUBLE_EQ(z(0), 0.25);
}

TEST(Spectral, ProjectedCovarianceRejectsNonPositiveTime) {
    const SpectralModel m(heat_config(8));
    EXPECT_EQ(error_code_of([&] { covariance_projected(m, 0.0); }), ErrorCode::NegativeTime);
    EXPECT_EQ(error_code_of([&] { m.semigroup(-1.0, Vector::Zero(8)); }), ErrorCode::NegativeTime);
}

TEST(Spectral, InvalidExponentsAreRejected) {
    ModelConfig c = heat_config(8);
    c.epsilon = 0.3;
    EXPECT_EQ(error_code_of([&] { SpectralModel m(c); }), ErrorCode::InvalidExponents);
    c = heat_config(8);
    c.alpha = 0.2;
    EXPECT_EQ(error_code_of([&] { SpectralModel m(c); }), ErrorCode::InvalidExponents);
}

TEST(Spectral, WaveWithoutNoiseOnProjectedModeIsDegenerate) {
    ModelConfig c = wave_config(4, 2);
    c.sigma = Matrix::Zero(4, 1);
    c.sigma(0, 0) = 1.0;
    EXPECT_EQ(error_code_of([&] { SpectralModel m(c); }), ErrorCode::DegenerateNoise);
}

TEST(Spectral, HeatPathGrowthIsIntegrable) {
    // theta = 3/4 + eps - alpha = 0.25: the ratio grows like t^{-theta} at most.
    const SpectralModel m(heat_config());
    const double a = path_growth_norm(m, 1e-4), b = path_growth_norm(m, 1e-1);
    EXPECT_GE(std::log(b / a) / std::log(1e3), -0.5 + 0.01);
}
