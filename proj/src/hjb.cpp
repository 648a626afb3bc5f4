#include "hjbs/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjbs/error.hpp"
#include "hjbs/parallel.hpp"

namespace hjbs {

TimeQuadrature make_time_quadrature(double lambda, std::size_t nodes, double t_cut,
                                    double tmax_factor) {
    if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "lambda must be positive");
    if (nodes < 8) fail(ErrorCode::InvalidArgument, "time quadrature needs at least 8 nodes");
    TimeQuadrature q;
    q.lambda = lambda;
    q.t_cut = t_cut;
    q.t_max = std::max(tmax_factor / lambda, 10.0 * t_cut);
    // One log-uniform grid: the integrand is smooth in log t and negligible at
    // both ends, so the trapezoid rule converges quickly.
    q.nodes = geometric_grid(t_cut, q.t_max, nodes);
    const double h = std::log(q.nodes[1] / q.nodes[0]);
    q.weights.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double t = q.nodes[i];
        const double end = (i == 0 || i + 1 == nodes) ? 0.5 : 1.0;
        q.weights[i] = end * h * t * std::exp(-lambda * t);
    }
    q.cut_weight = -std::expm1(-lambda * t_cut) / lambda;
    return q;
}

Certificate certify(const SpectralModel& model, const HamiltonianSpec& spec,
                    const EstimateReport& report, double margin) {
    Certificate c;
    c.gamma = std::clamp(-report.fitted_exponent, 0.0, 1.0);
    if (!(c.gamma < 1.0)) {
        std::ostringstream os;
        os << "fitted singularity exponent " << report.fitted_exponent << " is not integrable";
        fail(ErrorCode::BadExponent, os.str());
    }
    c.kappa0 = report.kappa0;
    c.fit_r2 = report.fit_r2;
    c.lipschitz = hamiltonian_lipschitz(spec, model.dim_k());
    c.margin = margin;
    c.lambda0 = lambda_threshold(c.kappa0, c.gamma, c.lipschitz, margin);
    return c;
}

std::vector<GridAxis> default_axes(const SpectralModel& model, double lambda,
                                   const SolverSettings& settings) {
    if (!settings.axes.empty()) {
        if (settings.axes.size() != static_cast<std::size_t>(model.dim_p()))
            fail(ErrorCode::DimensionMismatch, "grid must have one axis per projected coordinate");
        return settings.axes;
    }
    const Eigen::Index n = model.dim_p();
    if (n > 3) fail(ErrorCode::Config, "grid solves support at most 3 projected coordinates");
    std::size_t nodes = settings.grid_nodes;
    if (nodes == 0) nodes = n <= 2 ? 33 : 17;
    const double t = settings.tmax_factor / lambda;
    const Matrix q = model.covariance_projected(t);
    std::vector<GridAxis> axes;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double half = settings.grid_halfwidth * std::sqrt(std::max(q(i, i), 0.0));
        if (!(half > 0.0)) fail(ErrorCode::DegenerateNoise, "projected coordinate carries no noise");
        axes.push_back({-half, half, nodes});
    }
    return axes;
}

MildOperator::MildOperator(const SpectralModel& model, const HamiltonianSpec& spec, double lambda,
                           std::vector<GridAxis> axes, const SolverSettings& settings,
                           const Certificate& certificate)
    : model_(model), spec_(spec), lambda_(lambda), axes_(std::move(axes)),
      quad_(make_time_quadrature(lambda, settings.time_nodes, settings.t_cut, settings.tmax_factor)),
      m_(model.dim_k()), threads_(settings.threads),
      kappa0_(certificate.kappa0), gamma_(certificate.gamma) {
    validate(spec, m_);
    const QuadScheme scheme = QuadScheme::gh(settings.gh_order);
    kernels_.reserve(quad_.nodes.size());
    for (double t : quad_.nodes) kernels_.emplace_back(model, t, scheme);
}

void ValueSolution::refresh_interpolants() {
    v_fn = SplineFunction(v);
    w_fn = SplineFunction(w);
}

void MildOperator::evaluate(const SplineFunction& w, const Vector& z, double& value,
                            Vector& grad) const {
    const Integrand g = [&](const Vector& y) {
        return spec_.l0(y) + h_min(w.eval_vector(y), spec_).value;
    };
    value = 0.0;
    grad = Vector::Zero(m_);
    double v;
    Vector gr;
    for (std::size_t i = 0; i < kernels_.size(); ++i) {
        kernels_[i].apply_both(g, z, v, gr);
        double wt = quad_.weights[i];
        // Below t_cut the kernel is frozen at the first node.
        if (i == 0) wt += quad_.cut_weight;
        value += wt * v;
        grad += wt * gr;
    }
}

double MildOperator::value_at(const GridFunction& w, const Vector& z) const {
    double v;
    Vector g;
    evaluate(SplineFunction(w), z, v, g);
    return v;
}

Vector MildOperator::gradient_at(const GridFunction& w, const Vector& z) const {
    double v;
    Vector g;
    evaluate(SplineFunction(w), z, v, g);
    return g;
}

MildOperator::Result MildOperator::apply(const GridFunction& w) const {
    Result r{GridFunction(axes_, 1), GridFunction(axes_, static_cast<std::size_t>(m_)), 0.0};
    if (!w.same_layout(r.w)) fail(ErrorCode::DimensionMismatch, "gradient field does not match the solver grid");
    const SplineFunction wf(w);
    parallel_for(r.v.size(), threads_, [&](std::size_t i) {
        double v;
        Vector g;
        evaluate(wf, r.v.node_point(i), v, g);
        r.v.at(i) = v;
        for (Eigen::Index k = 0; k < m_; ++k) r.w.at(i, static_cast<std::size_t>(k)) = g(k);
    });

    // sup |l0 + H_min(w)| over the nodes bounds the integrand.
    double sup_g = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const Vector z = w.node_point(i);
        Vector p(m_);
        for (Eigen::Index k = 0; k < m_; ++k) p(k) = w.at(i, static_cast<std::size_t>(k));
        sup_g = std::max(sup_g, std::abs(spec_.l0(z) + h_min(p, spec_).value));
    }
    const double tail = std::exp(-lambda_ * quad_.t_max) * sup_g / lambda_;
    const double tail_grad = tail * kappa0_ * std::max(std::pow(quad_.t_max, -gamma_), 1.0);
    const double cut_value = 2.0 * quad_.cut_weight * sup_g;
    const double cut_grad = 2.0 * kappa0_ * std::pow(quad_.t_cut, 1.0 - gamma_) / (1.0 - gamma_) * sup_g;
    r.error_budget = std::max(tail + cut_value, tail_grad + cut_grad);
    return r;
}

double mild_consistency_error(const MildOperator& op, const SpectralModel& model,
                              const GridFunction& w_source, const GridFunction& w, double h) {
    const Matrix d = model.projection().transpose() * model.control();
    std::vector<double> err(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w.is_interior(i)) continue;
        const Vector z = w.node_point(i);
        double s = 0.0;
        for (Eigen::Index k = 0; k < d.cols(); ++k) {
            const Vector dz = h * d.col(k);
            const double fd = (op.value_at(w_source, z + dz) - op.value_at(w_source, z - dz)) / (2.0 * h);
            const double e = fd - w.at(i, static_cast<std::size_t>(k));
            s += e * e;
        }
        err[i] = std::sqrt(s);
    }
    return *std::max_element(err.begin(), err.end());
}

namespace {

double gradient_lipschitz(const GridFunction& w) {
    double best = 0.0;
    const auto& axes = w.axes();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto idx = w.node_index(i);
        std::size_t stride = 1;
        for (std::size_t d = 0; d < axes.size(); ++d) {
            if (idx[d] + 1 < axes[d].nodes) {
                double s = 0.0;
                for (std::size_t c = 0; c < w.components(); ++c) {
                    const double diff = w.at(i + stride, c) - w.at(i, c);
                    s += diff * diff;
                }
                best = std::max(best, std::sqrt(s) / axes[d].step());
            }
            stride *= axes[d].nodes;
        }
    }
    return best;
}

}  // namespace

ValueSolution solve_fixed_point(const SpectralModel& model, const HamiltonianSpec& spec,
                                const Certificate& certificate, const SolverSettings& settings) {
    if (!(settings.tol > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
    ValueSolution sol;
    sol.certificate = certificate;
    sol.tol = settings.tol;
    sol.lambda = settings.lambda > 0.0 ? settings.lambda : certificate.lambda0;
    sol.diagnostics.below_threshold = sol.lambda < certificate.lambda0;

    const MildOperator op(model, spec, sol.lambda, default_axes(model, sol.lambda, settings),
                          settings, certificate);
    const auto m = static_cast<std::size_t>(model.dim_k());
    sol.v = GridFunction(op.axes(), 1);
    sol.w = GridFunction(op.axes(), m);
    for (std::size_t i = 0; i < sol.v.size(); ++i) sol.v.at(i) = settings.init_value;
    if (settings.init_gradient.size() > 0) {
        if (settings.init_gradient.size() != model.dim_k())
            fail(ErrorCode::DimensionMismatch, "initial gradient has wrong length");
        for (std::size_t i = 0; i < sol.w.size(); ++i)
            for (std::size_t k = 0; k < m; ++k) sol.w.at(i, k) = settings.init_gradient(static_cast<Eigen::Index>(k));
    }
    if (settings.init_gradient_fn) {
        for (std::size_t i = 0; i < sol.w.size(); ++i) {
            const Vector g = settings.init_gradient_fn(sol.w.node_point(i));
            if (g.size() != model.dim_k()) fail(ErrorCode::DimensionMismatch, "initial gradient has wrong length");
            for (std::size_t k = 0; k < m; ++k) sol.w.at(i, k) = g(static_cast<Eigen::Index>(k));
        }
    }

    const double cb = contraction_bound(sol.lambda, certificate.gamma, certificate.kappa0);
    sol.contraction_bound = cb;
    sol.diagnostics.certified_rate = certificate.lipschitz * std::max(cb, 1.0 / sol.lambda);

    GridFunction w_source = sol.w;
    int rising = 0;
    for (std::size_t it = 0; it < settings.max_iter; ++it) {
        MildOperator::Result r = op.apply(sol.w);
        const double res = std::max(r.v.sup_distance(sol.v), r.w.sup_distance(sol.w));
        if (!sol.residual_history.empty()) {
            const double prev = sol.residual_history.back();
            const double ratio = prev > 0.0 ? res / prev : 0.0;
            sol.diagnostics.ratios.push_back(ratio);
            rising = ratio > 1.0 ? rising + 1 : 0;
        }
        sol.residual_history.push_back(res);
        w_source = std::move(sol.w);
        sol.v = std::move(r.v);
        sol.w = std::move(r.w);
        sol.diagnostics.quadrature_error = r.error_budget;
        sol.diagnostics.iterations = it + 1;
        if (rising >= 3) {
            std::ostringstream os;
            os << "residual grew for 3 consecutive iterations (last " << res << ") at lambda = "
               << sol.lambda;
            fail(ErrorCode::NotContracted, os.str());
        }
        if (res <= settings.tol) {
            sol.diagnostics.converged = true;
            break;
        }
    }

    sol.refresh_interpolants();
    sol.diagnostics.consistency_error =
        mild_consistency_error(op, model, w_source, sol.w, settings.fd_step);
    sol.diagnostics.gradient_lipschitz = gradient_lipschitz(sol.w);
    sol.diagnostics.value_bound =
        (spec.l0.sup() + control_cost_sup(spec, model.dim_k())) / sol.lambda;
    return sol;
}

}  // namespace hjbs
