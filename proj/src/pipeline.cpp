#include "hjbs/pipeline.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hjbs/error.hpp"
#include "hjbs/quadrature.hpp"
#include "hjbs/serialize.hpp"

namespace hjbs {

using nlohmann::json;

namespace {

// Graded-grid integral of the smoothing norm over (0, 1], with the part
// below the first node bounded by kappa0 t^{1-gamma} / (1 - gamma).
double integrated_norm(const SpectralModel& model, double kappa0, double gamma) {
    const double lo = 1e-8;
    const auto t = geometric_grid(lo, 1.0, 96);
    const double h = std::log(t[1] / t[0]);
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        s += ((i == 0 || i + 1 == t.size()) ? 0.5 : 1.0) * h * t[i] * lambda_norm(model, t[i]);
    return s + kappa0 * std::pow(lo, 1.0 - gamma) / (1.0 - gamma);
}

json fit_json(const PowerLawFit& f) { return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}}; }

}  // namespace

EstimatesOutput run_estimates(const RunConfig& config) {
    const SpectralModel model(config.model);
    const EstimatesConfig& ec = config.estimates;
    EstimateOptions opt;
    opt.lifted = ec.lifted;
    EstimatesOutput out;
    out.report = fit_exponent(model, ec.t_min, ec.t_max, ec.samples, opt);
    const EstimateReport& r = out.report;
    if (ec.lifted && (ec.rho != 1.0 || ec.lift_nodes != 80)) {
        const LiftDiscretization disc = make_lift_discretization(model, ec.rho, ec.lift_nodes);
        for (std::size_t i = 0; i < r.t_samples.size(); ++i)
            out.report.lifted[i] = lifted_lambda_norm(model, disc, r.t_samples[i]);
    }

    double duality_err = 0.0, lifted_gap = 0.0, max_residual = 0.0;
    for (std::size_t i = 0; i < r.t_samples.size(); ++i) {
        const double n2 = r.norms[i] * r.norms[i];
        if (n2 > 0.0) duality_err = std::max(duality_err, std::abs(r.duality[i] - n2) / n2);
        if (i < r.lifted.size() && r.norms[i] > 0.0)
            lifted_gap = std::max(lifted_gap, std::abs(r.lifted[i] - r.norms[i]) / r.norms[i]);
        max_residual = std::max(max_residual, r.residuals[i]);
    }
    const double gamma = std::clamp(-r.fitted_exponent, 0.0, 1.0);
    json summary = {
        {"model", model.kind() == ModelKind::HeatBoundary ? "heat" : "wave"},
        {"t_min", ec.t_min},
        {"t_max", ec.t_max},
        {"samples", ec.samples},
        {"fitted_exponent", r.fitted_exponent},
        {"fit_r2", r.fit_r2},
        {"kappa0", r.kappa0},
        {"duality_max_rel_error", duality_err},
        {"max_range_residual", max_residual},
        {"commutation_deviation", check_commutation(model, r.t_samples)},
        {"gram_condition", model.gram_condition()},
    };
    if (!r.lifted.empty()) summary["lifted_max_rel_gap"] = lifted_gap;
    if (gamma < 1.0) summary["integral_0_1"] = integrated_norm(model, r.kappa0, gamma);
    if (r.unprojected_fit) summary["unprojected_fit"] = fit_json(*r.unprojected_fit);
    if (model.kind() == ModelKind::HeatBoundary) {
        const auto tg = geometric_grid(1e-4, 1e-1, 16);
        std::vector<double> g;
        for (double t : tg) g.push_back(path_growth_norm(model, t));
        summary["growth_fit"] = fit_json(fit_power_law(tg, g));
        summary["growth_theta"] = model.extended_weight_exponent() - config.model.alpha;
    }
    const StrongFellerReport sf = strong_feller_diagnostic(model, 1e-2);
    summary["strong_feller"] = {{"t", sf.t}, {"holds", sf.holds}, {"covariance_rank", sf.covariance_rank},
                                {"state_dim", sf.state_dim}, {"range_residual", sf.residual}};
    out.summary = std::move(summary);
    out.csv = estimates_csv(out.report);
    return out;
}

Certificate certify_config(const RunConfig& config, const SpectralModel& model) {
    const EstimatesConfig& ec = config.estimates;
    EstimateOptions opt;
    opt.unprojected = false;
    const EstimateReport r = fit_exponent(model, ec.t_min, ec.t_max, ec.samples, opt);
    HamiltonianSpec spec;
    spec.set = config.problem.control_set;
    spec.cost = config.problem.control_cost;
    return certify(model, spec, r, config.problem.margin);
}

HamiltonianSpec build_spec(const RunConfig& config, const std::vector<GridAxis>& axes) {
    HamiltonianSpec spec;
    spec.set = config.problem.control_set;
    spec.cost = config.problem.control_cost;
    spec.l0 = build_state_cost(config.problem.state_cost, axes);
    return spec;
}

namespace {

SolverSettings solver_settings(const RunConfig& config, double lambda, unsigned threads) {
    const ProblemConfig& p = config.problem;
    SolverSettings s;
    s.lambda = lambda;
    s.tol = p.tol;
    s.max_iter = p.max_iter;
    s.grid_nodes = p.grid_nodes;
    s.grid_halfwidth = p.grid_halfwidth;
    s.gh_order = p.gh_order;
    s.time_nodes = p.time_nodes;
    s.threads = threads;
    return s;
}

}  // namespace

SolveOutput run_solve(const RunConfig& config, std::optional<double> lambda_override,
                      unsigned threads) {
    const SpectralModel model(config.model);
    const Certificate cert = certify_config(config, model);
    double lambda = cert.lambda0;
    if (lambda_override) {
        if (!(*lambda_override > 0.0)) fail(ErrorCode::InvalidArgument, "lambda override must be positive");
        lambda = *lambda_override;
    } else if (config.problem.lambda) {
        if (*config.problem.lambda < cert.lambda0) {
            std::ostringstream os;
            os << "configured lambda " << *config.problem.lambda
               << " is below the certified threshold lambda0 = " << cert.lambda0;
            fail(ErrorCode::ThresholdGuard, os.str());
        }
        lambda = *config.problem.lambda;
    }
    SolverSettings settings = solver_settings(config, lambda, threads);
    settings.axes = default_axes(model, lambda, settings);
    const HamiltonianSpec spec = build_spec(config, settings.axes);
    SolveOutput out;
    out.solution = solve_fixed_point(model, spec, cert, settings);
    out.json = solution_to_json(out.solution);
    out.residual_csv = residual_csv(out.solution);
    return out;
}

StateVector lift_projected(const SpectralModel& model, const Vector& z) {
    if (z.size() != model.dim_p()) fail(ErrorCode::DimensionMismatch, "initial state has the wrong projected dimension");
    const Matrix& v = model.projection();
    // Least-squares preimage; exact for orthonormal projection vectors.
    return {v * (v.transpose() * v).ldlt().solve(z), Space::H};
}

std::vector<Vector> verification_states(const RunConfig& config, const ValueSolution& sol) {
    if (!config.simulation.initial_states.empty()) return config.simulation.initial_states;
    const auto& axes = sol.v.axes();
    const std::size_t count = std::max<std::size_t>(config.verify.initial_states, 1);
    const GridAxis& a = axes.front();
    const std::size_t center = (a.nodes - 1) / 2;
    const std::size_t stride = std::max<std::size_t>(1, (a.nodes - 1) / 10);
    std::vector<Vector> states;
    for (std::size_t k = 0; k < count; ++k) {
        // 0, +s, -s, +2s, -2s, ... clamped to the grid
        const long long off = static_cast<long long>((k + 1) / 2) * (k % 2 == 1 ? 1 : -1);
        long long idx = static_cast<long long>(center) + off * static_cast<long long>(stride);
        idx = std::clamp<long long>(idx, 0, static_cast<long long>(a.nodes - 1));
        Vector z = Vector::Zero(static_cast<Eigen::Index>(axes.size()));
        for (std::size_t d = 0; d < axes.size(); ++d) z(static_cast<Eigen::Index>(d)) = axes[d].node((axes[d].nodes - 1) / 2);
        z(0) = a.node(static_cast<std::size_t>(idx));
        states.push_back(z);
    }
    return states;
}

namespace {

SimulationSettings sim_settings(const RunConfig& config, const ValueSolution& sol, unsigned threads,
                                std::size_t paths) {
    SimulationSettings s;
    s.lambda = sol.lambda;
    s.dt = config.simulation.dt;
    s.horizon = config.simulation.horizon;
    s.paths = paths > 0 ? paths : config.simulation.paths;
    s.seed = config.seed;
    s.threads = threads;
    s.dump_paths = config.simulation.dump_paths;
    return s;
}

void check_solution_fits(const SpectralModel& model, const ValueSolution& sol) {
    if (sol.v.dims() != static_cast<std::size_t>(model.dim_p()))
        fail(ErrorCode::Config, "solution grid dimension does not match the model projection");
    if (sol.w.components() != static_cast<std::size_t>(model.dim_k()))
        fail(ErrorCode::Config, "solution gradient dimension does not match the model controls");
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<Vector> random_constants(const RunConfig& config, Eigen::Index m) {
    std::mt19937_64 eng(derive_seed(config.seed, 0xC0457A47ULL));
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const ControlSet& set = config.problem.control_set;
    const double fmin = config.verify.min_radius_fraction;
    std::vector<Vector> out;
    while (out.size() < config.verify.constant_policies) {
        Vector u(m);
        if (set.kind == ControlSet::Kind::Ball) {
            for (Eigen::Index i = 0; i < m; ++i) u(i) = nd(eng);
            const double r = set.radius * (fmin + (1.0 - fmin) * ud(eng));
            u *= r / u.norm();
        } else {
            for (Eigen::Index i = 0; i < m; ++i) u(i) = set.lower(i) + ud(eng) * (set.upper(i) - set.lower(i));
            if (u.norm() < fmin * set.max_norm(m)) continue;
        }
        out.push_back(u);
    }
    return out;
}

}  // namespace

SimulateOutput run_simulate(const RunConfig& config, const ValueSolution& sol, unsigned threads,
                            std::size_t paths) {
    const SpectralModel model(config.model);
    check_solution_fits(model, sol);
    const HamiltonianSpec spec = build_spec(config, sol.v.axes());
    const SimulationSettings s = sim_settings(config, sol, threads, paths);
    SimulateOutput out;
    out.json = {{"lambda", sol.lambda}, {"runs", json::array()}};
    SimulationResult dumped;
    for (const Vector& z : verification_states(config, sol)) {
        const SimulationResult r = simulate_closed_loop(model, spec, sol, lift_projected(model, z), s);
        json run = simulation_to_json(r);
        run["initial_state"] = vec_json(z);
        run["value"] = sol.value(z);
        out.json["runs"].push_back(run);
        if (dumped.trajectories.empty()) dumped.trajectories = r.trajectories;
    }
    if (s.dump_paths > 0) out.trajectories_csv = trajectories_csv(dumped);
    return out;
}

VerifyOutput run_verify(const RunConfig& config, const ValueSolution& sol, unsigned threads,
                        std::size_t paths) {
    const SpectralModel model(config.model);
    check_solution_fits(model, sol);
    const HamiltonianSpec spec = build_spec(config, sol.v.axes());
    SimulationSettings s = sim_settings(config, sol, threads, paths);
    s.dump_paths = 0;
    const std::vector<Vector> constants = random_constants(config, model.dim_k());

    VerifyOutput out;
    bool passed = true;
    json states = json::array();
    for (const Vector& z : verification_states(config, sol)) {
        const StateVector x0 = lift_projected(model, z);
        const IdentityCheck fb = fundamental_identity_check(model, spec, sol, Policy::feedback(sol), x0, s);
        const double fb_tol = 3.0 * fb.cost_gap.std_error + 10.0 * sol.tol;
        const bool fb_ok = std::abs(fb.cost_gap.mean) <= fb_tol;
        json entry = {
            {"initial_state", vec_json(z)},
            {"value", fb.value},
            {"feedback",
             {{"cost", fb.sim.cost_estimate},
              {"std_error", fb.sim.std_error},
              {"gap", fb.cost_gap.mean},
              {"gap_tolerance", fb_tol},
              {"integrand_gap", fb.integrand_gap.mean},
              {"integrand_gap_std_error", fb.integrand_gap.std_error},
              {"identity_mismatch", fb.mismatch.mean},
              {"identity_mismatch_std_error", fb.mismatch.std_error},
              {"estimators_agree", fb.estimators_agree},
              {"passed", fb_ok}}},
        };
        passed = passed && fb_ok && fb.estimators_agree;
        json policies = json::array();
        for (const Vector& u : constants) {
            const IdentityCheck c = fundamental_identity_check(model, spec, sol, Policy::constant(u), x0, s);
            const PairedGap pg = paired_difference(c.sim, fb.sim);
            const bool beaten = pg.mean > 2.0 * pg.std_error;
            const bool lower = c.sim.cost_estimate + 3.0 * c.sim.std_error >= fb.value;
            passed = passed && beaten && lower && c.estimators_agree;
            policies.push_back({{"control", vec_json(u)},
                                {"cost", c.sim.cost_estimate},
                                {"std_error", c.sim.std_error},
                                {"gap", c.cost_gap.mean},
                                {"integrand_gap", c.integrand_gap.mean},
                                {"paired_gap", pg.mean},
                                {"paired_std_error", pg.std_error},
                                {"estimators_agree", c.estimators_agree},
                                {"beaten_by_feedback", beaten},
                                {"lower_bound_holds", lower}});
        }
        entry["constant_policies"] = policies;
        states.push_back(entry);
    }
    out.report = {{"lambda", sol.lambda},
                  {"tol", sol.tol},
                  {"paths", s.paths},
                  {"dt", s.dt},
                  {"seed", s.seed},
                  {"states", states},
                  {"passed", passed}};
    out.passed = passed;
    return out;
}

}  // namespace hjbs
