#include <cmath>
#include <random>

#include "hjbs/hjb.hpp"
#include "support.hpp"

using namespace hjbs;
using namespace hjbs::test;

namespace {

HamiltonianSpec spec_with_cost(const std::vector<GridAxis>& axes, std::function<double(const Vector&)> l0) {
    HamiltonianSpec s;
    s.set = ControlSet::ball(1.0);
    s.l0.exact = l0;
    s.l0.table = GridFunction::tabulate_scalar(axes, l0);
    return s;
}

double bump(const Vector& z) { return 1.0 - std::exp(-z.squaredNorm() / (2.0 * 0.04)); }

struct HeatFixture {
    SpectralModel model{heat_config()};
    Certificate cert;
    SolverSettings settings;
    std::vector<GridAxis> axes;

    HeatFixture() {
        const EstimateReport r = fit_exponent(model, 1e-4, 1e-1, 24);
        HamiltonianSpec probe;
        probe.set = ControlSet::ball(1.0);
        cert = certify(model, probe, r);
        settings.lambda = cert.lambda0;
        axes = default_axes(model, settings.lambda, settings);
    }
};

}  // namespace

TEST(TimeQuadrature, IntegratesTheDiscount) {
    for (double lambda : {0.5, 10.0, 85.0}) {
        const TimeQuadrature q = make_time_quadrature(lambda);
        double s = q.cut_weight;
        for (double w : q.weights) s += w;
        EXPECT_LE(rel_diff(s, 1.0 / lambda), 1e-6) << "lambda = " << lambda;
    }
}

TEST(Solver, ConstantCostGivesConstantValue) {
    HeatFixture f;
    const HamiltonianSpec s = spec_with_cost(f.axes, [](const Vector&) { return 1.0; });
    const MildOperator op(f.model, s, f.settings.lambda, f.axes, f.settings, f.cert);
    const MildOperator::Result r = op.apply(GridFunction(f.axes, 2));
    for (std::size_t i = 0; i < r.v.size(); ++i) {
        EXPECT_LE(rel_diff(r.v.at(i), 1.0 / f.settings.lambda), 1e-6);
        EXPECT_LE(std::abs(r.w.at(i, 0)) + std::abs(r.w.at(i, 1)), 1e-9);
    }
    const ValueSolution sol = solve_fixed_point(f.model, s, f.cert, f.settings);
    EXPECT_TRUE(sol.diagnostics.converged);
    EXPECT_LE(rel_diff(sol.value(Vector::Constant(1, 0.1)), 1.0 / f.settings.lambda), 1e-6);
}

TEST(Solver, ZeroCostConvergesInOneSweep) {
    HeatFixture f;
    const HamiltonianSpec s = spec_with_cost(f.axes, [](const Vector&) { return 0.0; });
    const ValueSolution sol = solve_fixed_point(f.model, s, f.cert, f.settings);
    EXPECT_EQ(sol.diagnostics.iterations, 1U);
    EXPECT_EQ(sol.v.sup_norm(), 0.0);
    EXPECT_EQ(sol.w.sup_norm(), 0.0);
}

TEST(Solver, OperatorContractsAtTheCertifiedRate) {
    HeatFixture f;
    const HamiltonianSpec s = spec_with_cost(f.axes, bump);
    const MildOperator op(f.model, s, f.settings.lambda, f.axes, f.settings, f.cert);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    const double cb = contraction_bound(f.settings.lambda, f.cert.gamma, f.cert.kappa0);
    for (int trial = 0; trial < 3; ++trial) {
        GridFunction a(f.axes, 2), b(f.axes, 2);
        for (double& x : a.values()) x = ud(rng);
        for (double& x : b.values()) x = ud(rng);
        const MildOperator::Result fa = op.apply(a), fb = op.apply(b);
        const double d = a.sup_distance(b);
        EXPECT_LE(fa.w.sup_distance(fb.w), cb * f.cert.lipschitz * d);
        EXPECT_LE(fa.v.sup_distance(fb.v), f.cert.lipschitz * d / f.settings.lambda);
    }
}

TEST(Solver, BumpProblemConvergesGeometrically) {
    HeatFixture f;
    const HamiltonianSpec s = spec_with_cost(f.axes, bump);
    const ValueSolution sol = solve_fixed_point(f.model, s, f.cert, f.settings);
    ASSERT_TRUE(sol.diagnostics.converged);
    for (double r : sol.diagnostics.ratios) EXPECT_LE(r, sol.diagnostics.certified_rate + 0.05);
    EXPECT_LE(sol.v.sup_norm(), sol.diagnostics.value_bound);
    EXPECT_LE(sol.diagnostics.consistency_error, 10.0 * sol.tol);
    EXPECT_FALSE(sol.diagnostics.below_threshold);
}

TEST(Solver, InitializationDoesNotMatter) {
    HeatFixture f;
    const HamiltonianSpec s = spec_with_cost(f.axes, bump);
    const ValueSolution a = solve_fixed_point(f.model, s, f.cert, f.settings);
    SolverSettings other = f.settings;
    other.init_value = s.l0.sup() / f.settings.lambda;
    // A constant gradient only shifts the integrand and is forgotten after one sweep.
    other.init_gradient_fn = [](const Vector& z) {
        return (Vector(2) << 0.7 * std::sin(4.0 * z(0)), -0.4 * std::cos(3.0 * z(0))).finished();
    };
    const ValueSolution b = solve_fixed_point(f.model, s, f.cert, other);
    EXPECT_GT(std::abs(a.residual_history[1] - b.residual_history[1]), 0.0);
    EXPECT_LE(a.v.sup_distance(b.v), 10.0 * a.tol);
    EXPECT_LE(a.w.sup_distance(b.w), 10.0 * a.tol);
}

TEST(Solver, ThreadCountDoesNotChangeTheResult) {
    HeatFixture f;
    const HamiltonianSpec s = spec_with_cost(f.axes, bump);
    SolverSettings threaded = f.settings;
    threaded.threads = 3;
    const ValueSolution a = solve_fixed_point(f.model, s, f.cert, f.settings);
    const ValueSolution b = solve_fixed_point(f.model, s, f.cert, threaded);
    EXPECT_EQ(a.v.values(), b.v.values());
    EXPECT_EQ(a.w.values(), b.w.values());
}

TEST(Solver, BelowThresholdIsFlagged) {
    HeatFixture f;
    const HamiltonianSpec s = spec_with_cost(f.axes, bump);
    SolverSettings low = f.settings;
    low.lambda = 0.5 * f.cert.lambda0;
    low.axes = f.axes;
    const ValueSolution sol = solve_fixed_point(f.model, s, f.cert, low);
    EXPECT_TRUE(sol.diagnostics.below_threshold);
}

TEST(Solver, DefaultGridFollowsDimension) {
    SolverSettings st;
    const SpectralModel heat(heat_config());
    EXPECT_EQ(default_axes(heat, 50.0, st)[0].nodes, 33U);
    // Stationary standard deviation of the first heat mode is sqrt(2 / (2 pi^2)).
    EXPECT_NEAR(default_axes(heat, 50.0, st)[0].hi, 5.0 * std::sqrt(1.0 / (M_PI * M_PI)), 1e-6);
}
