#include <cmath>

#include "hjbs/synthesis.hpp"
#include "support.hpp"

using namespace hjbs;
using namespace hjbs::test;

namespace {

HamiltonianSpec spec_with_cost(std::function<double(const Vector&)> l0) {
    HamiltonianSpec s;
    s.set = ControlSet::ball(1.0);
    s.l0.exact = l0;
    s.l0.table = GridFunction::tabulate_scalar({{-2.0, 2.0, 9}}, l0);
    return s;
}

SimulationSettings settings(double lambda, std::size_t paths) {
    SimulationSettings s;
    s.lambda = lambda;
    s.dt = 1e-3;
    s.paths = paths;
    s.seed = 77;
    return s;
}

}  // namespace

TEST(Synthesis, ConstantCostIsDiscountedExactly) {
    const SpectralModel m(heat_config(8));
    const HamiltonianSpec s = spec_with_cost([](const Vector&) { return 2.0; });
    const double lambda = 20.0;
    const SimulationResult r =
        evaluate_cost(m, s, Policy::constant(Vector::Zero(2)), {Vector::Zero(8), Space::H}, settings(lambda, 8));
    const double expected = 2.0 * (-std::expm1(-lambda * r.horizon)) / lambda;
    for (double c : r.path_costs) EXPECT_LE(rel_diff(c, expected), 1e-12);
}

TEST(Synthesis, QuadraticCostMatchesMoments) {
    // E int e^{-lambda t} Z_t^2 dt with Z_t = e^{-l t} z0 + N(0, q(t)), q(t) = (1 - e^{-2 l t}) / l.
    const SpectralModel m(heat_config(8));
    const HamiltonianSpec s = spec_with_cost([](const Vector& z) { return z(0) * z(0); });
    const double lambda = 20.0, z0 = 0.4, l = M_PI * M_PI;
    Vector x0 = Vector::Zero(8);
    x0(0) = z0;
    const SimulationResult r =
        evaluate_cost(m, s, Policy::constant(Vector::Zero(2)), {x0, Space::H}, settings(lambda, 4000));
    const int n = 20000;
    const double h = r.horizon / n;
    double oracle = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double mean = std::exp(-l * t) * z0;
        oracle += w * std::exp(-lambda * t) * (mean * mean - std::expm1(-2.0 * l * t) / l);
    }
    oracle *= h / 3.0;
    EXPECT_LE(std::abs(r.cost_estimate - oracle), 4.0 * r.std_error);
}

TEST(Synthesis, ControlCostEntersWithDiscountWeight) {
    const SpectralModel m(heat_config(8));
    const HamiltonianSpec s = spec_with_cost([](const Vector&) { return 0.0; });
    const double lambda = 20.0;
    const Vector u = (Vector(2) << 0.6, 0.0).finished();
    const SimulationResult r = evaluate_cost(m, s, Policy::constant(u), {Vector::Zero(8), Space::H}, settings(lambda, 4));
    const double expected = 0.5 * 0.36 * (-std::expm1(-lambda * r.horizon)) / lambda;
    for (double c : r.path_costs) EXPECT_LE(rel_diff(c, expected), 1e-12);
}

TEST(Synthesis, SeedsMakePathsReproducible) {
    const SpectralModel m(heat_config(8));
    const HamiltonianSpec s = spec_with_cost([](const Vector& z) { return std::abs(z(0)); });
    const StateVector x0{Vector::Zero(8), Space::H};
    SimulationSettings st = settings(20.0, 64);
    const SimulationResult a = evaluate_cost(m, s, Policy::constant(Vector::Zero(2)), x0, st);
    st.threads = 3;
    const SimulationResult b = evaluate_cost(m, s, Policy::constant(Vector::Zero(2)), x0, st);
    EXPECT_EQ(a.path_costs, b.path_costs);
    st.seed = 78;
    const SimulationResult c = evaluate_cost(m, s, Policy::constant(Vector::Zero(2)), x0, st);
    EXPECT_NE(a.path_costs, c.path_costs);
}

TEST(Synthesis, SingleSegmentOpenLoopEqualsConstant) {
    const SpectralModel m(heat_config(8));
    const HamiltonianSpec s = spec_with_cost([](const Vector& z) { return z(0) * z(0); });
    const StateVector x0{Vector::Zero(8), Space::H};
    const Vector u = (Vector(2) << 0.2, -0.3).finished();
    const SimulationResult a = evaluate_cost(m, s, Policy::constant(u), x0, settings(20.0, 32));
    const SimulationResult b = evaluate_cost(m, s, Policy::open_loop({0.0}, {u}), x0, settings(20.0, 32));
    EXPECT_EQ(a.path_costs, b.path_costs);
    const PairedGap d = paired_difference(a, b);
    EXPECT_EQ(d.mean, 0.0);
    EXPECT_EQ(d.std_error, 0.0);
}

TEST(Synthesis, InputsAreValidated) {
    const SpectralModel m(heat_config(8));
    const HamiltonianSpec s = spec_with_cost([](const Vector&) { return 0.0; });
    const StateVector x0{Vector::Zero(8), Space::H};
    EXPECT_EQ(error_code_of([&] { evaluate_cost(m, s, Policy::constant(Vector::Constant(2, 1.0)), x0, settings(20.0, 2)); }),
              ErrorCode::ControlOutOfSet);
    SimulationSettings shortrun = settings(20.0, 2);
    shortrun.horizon = 0.1;
    EXPECT_EQ(error_code_of([&] { evaluate_cost(m, s, Policy::constant(Vector::Zero(2)), x0, shortrun); }),
              ErrorCode::InvalidArgument);
    Vector big = Vector::Zero(8);
    big(0) = 1e9;
    EXPECT_EQ(error_code_of([&] { evaluate_cost(m, s, Policy::constant(Vector::Zero(2)), {big, Space::H}, settings(20.0, 2)); }),
              ErrorCode::UnstableStep);
}
