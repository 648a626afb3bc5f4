#include "hjbs/synthesis.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hjbs/error.hpp"
#include "hjbs/parallel.hpp"
#include "hjbs/quadrature.hpp"

namespace hjbs {

namespace {

struct Entry {
    Eigen::Index row;
    Eigen::Index col;
    double value;
};

std::vector<Entry> sparse(const Matrix& m) {
    std::vector<Entry> out;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) out.push_back({i, j, m(i, j)});
    return out;
}

void multiply_add(const std::vector<Entry>& a, const double* x, Vector& y) {
    for (const Entry& e : a) y(e.row) += e.value * x[e.col];
}

/// One exact step: x' = E x + Gamma u + L xi.
struct Stepper {
    std::vector<Entry> transition;
    Matrix forcing;  ///< state_dim x m
    std::vector<Entry> noise;
    Eigen::Index noise_rank = 0;

    Stepper(const SpectralModel& model, double dt) {
        transition = sparse(model.semigroup_matrix(dt));
        forcing = model.forcing_integral(dt) * model.control();
        const GaussianFactor f = factorize_covariance(model.covariance(dt));
        noise = sparse(f.factor());
        noise_rank = f.rank;
    }
};

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

PairedGap mean_and_error(const std::vector<double>& x) {
    PairedGap g;
    const std::size_t n = x.size();
    if (n == 0) return g;
    g.mean = pairwise_sum(x.data(), n) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (x[i] - g.mean) * (x[i] - g.mean);
    const double var = n > 1 ? pairwise_sum(sq.data(), n) / static_cast<double>(n - 1) : 0.0;
    g.std_error = std::sqrt(var / static_cast<double>(n));
    return g;
}

Vector open_loop_control(const Policy& p, double t) {
    std::size_t j = 0;
    while (j + 1 < p.switch_times.size() && t >= p.switch_times[j + 1]) ++j;
    return p.controls[j];
}

}  // namespace

Vector feedback_projected(const HamiltonianSpec& spec, const ValueSolution& sol, const Vector& z) {
    return h_min(sol.gradient(z), spec).argmin;
}

Vector feedback(const SpectralModel& model, const HamiltonianSpec& spec, const ValueSolution& sol,
                const StateVector& x) {
    return feedback_projected(spec, sol, projection_apply(model, x));
}

SimulationResult evaluate_cost(const SpectralModel& model, const HamiltonianSpec& spec,
                               const Policy& policy, const StateVector& x0,
                               const SimulationSettings& settings,
                               const ValueSolution* gap_solution) {
    const double lambda = settings.lambda;
    if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "simulation needs a positive discount");
    if (!(settings.dt > 0.0)) fail(ErrorCode::InvalidArgument, "time step must be positive");
    if (settings.paths < 1) fail(ErrorCode::InvalidArgument, "need at least one path");
    const double horizon = settings.horizon > 0.0 ? settings.horizon : 40.0 / lambda;
    if (horizon < 20.0 / lambda * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "horizon " << horizon << " is shorter than 20 / lambda";
        fail(ErrorCode::InvalidArgument, os.str());
    }
    if (x0.coeffs.size() != model.state_dim()) fail(ErrorCode::DimensionMismatch, "initial state has wrong length");
    const Eigen::Index m = model.dim_k();
    switch (policy.kind) {
        case Policy::Kind::Feedback:
            if (!policy.solution) fail(ErrorCode::InvalidArgument, "feedback policy needs a solution");
            break;
        case Policy::Kind::Constant:
            if (policy.control.size() != m) fail(ErrorCode::DimensionMismatch, "constant control has wrong length");
            if (!spec.set.contains(policy.control)) fail(ErrorCode::ControlOutOfSet, "constant control lies outside U");
            break;
        case Policy::Kind::OpenLoop:
            if (policy.controls.empty() || policy.controls.size() != policy.switch_times.size())
                fail(ErrorCode::InvalidArgument, "open-loop table needs matching times and controls");
            for (const Vector& u : policy.controls) {
                if (u.size() != m) fail(ErrorCode::DimensionMismatch, "open-loop control has wrong length");
                if (!spec.set.contains(u)) fail(ErrorCode::ControlOutOfSet, "open-loop control lies outside U");
            }
            break;
    }

    const double dt = settings.dt;
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    const Stepper stepper(model, dt);
    const Matrix vt = model.projection().transpose();
    // Exact discount weights for a linear interpolant on one step.
    const double x = lambda * dt;
    const double i0 = -std::expm1(-x) / lambda;
    const double i1 = (-std::expm1(-x) - x * std::exp(-x)) / (lambda * lambda);
    const double w_end = i1 / dt, w_start = i0 - w_end;
    const double decay = std::exp(-x);

    SimulationResult res;
    res.n_paths = settings.paths;
    res.horizon = static_cast<double>(steps) * dt;
    res.dt = dt;
    res.seed = settings.seed;
    res.path_costs.assign(settings.paths, 0.0);
    if (gap_solution) res.path_gaps.assign(settings.paths, 0.0);
    std::vector<std::vector<TrajectorySample>> dumps(std::min(settings.dump_paths, settings.paths));

    parallel_for(settings.paths, settings.threads, [&](std::size_t path) {
        std::mt19937_64 eng(derive_seed(settings.seed, path));
        std::normal_distribution<double> nd;
        std::vector<double> xi(static_cast<std::size_t>(stepper.noise_rank));
        Vector state = x0.coeffs, next(state.size());
        Vector z = vt * state;
        double l0 = spec.l0(z);
        double discount = 1.0, cost = 0.0, gap = 0.0;
        Vector u(m);
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = static_cast<double>(k) * dt;
            switch (policy.kind) {
                case Policy::Kind::Feedback: u = feedback_projected(spec, *policy.solution, z); break;
                case Policy::Kind::Constant: u = policy.control; break;
                case Policy::Kind::OpenLoop: u = open_loop_control(policy, t); break;
            }
            if (gap_solution) {
                const Vector p = gap_solution->gradient(z);
                gap += discount * i0 * (p.dot(u) + spec.cost(u) - h_min(p, spec).value);
            }
            if (path < dumps.size()) dumps[path].push_back({path, t, z, u});

            for (double& e : xi) e = nd(eng);
            next.setZero();
            multiply_add(stepper.transition, state.data(), next);
            next.noalias() += stepper.forcing * u;
            multiply_add(stepper.noise, xi.data(), next);
            if (!(next.cwiseAbs().maxCoeff() <= 1e8)) {
                std::ostringstream os;
                os << "state left the stable range at t = " << t + dt << " on path " << path;
                fail(ErrorCode::UnstableStep, os.str());
            }
            state.swap(next);
            z.noalias() = vt * state;
            const double l0_next = spec.l0(z);
            cost += discount * (w_start * l0 + w_end * l0_next + i0 * spec.cost(u));
            l0 = l0_next;
            discount *= decay;
        }
        res.path_costs[path] = cost;
        if (gap_solution) res.path_gaps[path] = gap;
    });

    const PairedGap s = mean_and_error(res.path_costs);
    res.cost_estimate = s.mean;
    res.std_error = s.std_error;
    res.tail_bound = std::exp(-lambda * res.horizon) * (spec.l0.sup() + control_cost_sup(spec, m)) / lambda;
    for (auto& d : dumps) res.trajectories.insert(res.trajectories.end(), d.begin(), d.end());
    return res;
}

SimulationResult simulate_closed_loop(const SpectralModel& model, const HamiltonianSpec& spec,
                                      const ValueSolution& sol, const StateVector& x0,
                                      const SimulationSettings& settings) {
    SimulationSettings s = settings;
    if (!(s.lambda > 0.0)) s.lambda = sol.lambda;
    return evaluate_cost(model, spec, Policy::feedback(sol), x0, s, &sol);
}

PairedGap paired_difference(const SimulationResult& a, const SimulationResult& b) {
    if (a.path_costs.size() != b.path_costs.size())
        fail(ErrorCode::DimensionMismatch, "paired comparison needs equal path counts");
    std::vector<double> d(a.path_costs.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.path_costs[i] - b.path_costs[i];
    return mean_and_error(d);
}

IdentityCheck fundamental_identity_check(const SpectralModel& model, const HamiltonianSpec& spec,
                                         const ValueSolution& sol, const Policy& policy,
                                         const StateVector& x0, const SimulationSettings& settings) {
    SimulationSettings s = settings;
    s.lambda = sol.lambda;
    IdentityCheck c;
    c.value = sol.value(projection_apply(model, x0));
    c.sim = evaluate_cost(model, spec, policy, x0, s, &sol);
    c.cost_gap = mean_and_error(c.sim.path_costs);
    c.cost_gap.mean -= c.value;
    c.integrand_gap = mean_and_error(c.sim.path_gaps);
    std::vector<double> d(c.sim.path_costs.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = c.sim.path_costs[i] - c.sim.path_gaps[i];
    c.mismatch = mean_and_error(d);
    c.mismatch.mean -= c.value;
    c.budget = 10.0 * sol.tol + sol.diagnostics.quadrature_error + c.sim.tail_bound;
    c.estimators_agree = std::abs(c.mismatch.mean) <= 3.0 * c.mismatch.std_error + c.budget;
    return c;
}

}  // namespace hjbs
