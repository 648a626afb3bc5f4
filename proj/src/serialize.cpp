#include "hjbs/serialize.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "hjbs/error.hpp"

namespace hjbs {

using nlohmann::json;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) fail(ErrorCode::Config, "solution is missing '" + where + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_number()) fail(ErrorCode::Config, "solution field '" + where + key + "' must be a number");
    return v.get<double>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_array()) fail(ErrorCode::Config, "solution field '" + where + key + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& x : v) {
        if (!x.is_number()) fail(ErrorCode::Config, "solution field '" + where + key + "' must hold numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace

json grid_to_json(const GridFunction& g) {
    json axes = json::array();
    for (const auto& a : g.axes()) axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"nodes", a.nodes}});
    return {{"axes", axes}, {"components", g.components()}, {"values", g.values()}};
}

GridFunction grid_from_json(const json& j) {
    const json& axes = field(j, "axes", "grid.");
    if (!axes.is_array()) fail(ErrorCode::Config, "grid.axes must be an array");
    std::vector<GridAxis> ax;
    for (const json& a : axes) {
        const double lo = number(a, "lo", "grid.axes."), hi = number(a, "hi", "grid.axes.");
        const json& n = field(a, "nodes", "grid.axes.");
        if (!n.is_number_integer() || n.get<long long>() < 2) fail(ErrorCode::Config, "grid.axes.nodes must be an integer >= 2");
        ax.push_back({lo, hi, n.get<std::size_t>()});
    }
    const json& comps = field(j, "components", "grid.");
    if (!comps.is_number_integer() || comps.get<long long>() < 1) fail(ErrorCode::Config, "grid.components must be a positive integer");
    GridFunction g;
    try {
        g = GridFunction(ax, comps.get<std::size_t>());
    } catch (const Error& e) {
        fail(ErrorCode::Config, std::string("invalid grid: ") + e.what());
    }
    const std::vector<double> vals = numbers(j, "values", "grid.");
    if (vals.size() != g.values().size()) fail(ErrorCode::Config, "grid.values has the wrong length");
    g.values() = vals;
    return g;
}

json solution_to_json(const ValueSolution& sol) {
    const auto& c = sol.certificate;
    const auto& d = sol.diagnostics;
    return {
        {"format", "hjbs-value-solution"},
        {"version", 1},
        {"lambda", sol.lambda},
        {"tol", sol.tol},
        {"contraction_bound", sol.contraction_bound},
        {"residual_history", sol.residual_history},
        {"certificate",
         {{"kappa0", c.kappa0}, {"gamma", c.gamma}, {"fit_r2", c.fit_r2},
          {"lipschitz", c.lipschitz}, {"margin", c.margin}, {"lambda0", c.lambda0}}},
        {"diagnostics",
         {{"iterations", d.iterations}, {"converged", d.converged},
          {"below_threshold", d.below_threshold}, {"certified_rate", d.certified_rate},
          {"ratios", d.ratios}, {"quadrature_error", finite_or_null(d.quadrature_error)},
          {"consistency_error", finite_or_null(d.consistency_error)},
          {"gradient_lipschitz", d.gradient_lipschitz}, {"value_bound", d.value_bound}}},
        {"v", grid_to_json(sol.v)},
        {"w", grid_to_json(sol.w)},
    };
}

ValueSolution solution_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::Config, "solution document must be a JSON object");
    if (j.value("format", "") != "hjbs-value-solution") fail(ErrorCode::Config, "not a value solution (format tag missing)");
    ValueSolution s;
    s.lambda = number(j, "lambda", "");
    s.tol = number(j, "tol", "");
    s.contraction_bound = number(j, "contraction_bound", "");
    s.residual_history = numbers(j, "residual_history", "");
    const json& c = field(j, "certificate", "");
    s.certificate.kappa0 = number(c, "kappa0", "certificate.");
    s.certificate.gamma = number(c, "gamma", "certificate.");
    s.certificate.fit_r2 = number(c, "fit_r2", "certificate.");
    s.certificate.lipschitz = number(c, "lipschitz", "certificate.");
    s.certificate.margin = number(c, "margin", "certificate.");
    s.certificate.lambda0 = number(c, "lambda0", "certificate.");
    const json& d = field(j, "diagnostics", "");
    s.diagnostics.iterations = static_cast<std::size_t>(number(d, "iterations", "diagnostics."));
    s.diagnostics.converged = field(d, "converged", "diagnostics.").get<bool>();
    s.diagnostics.below_threshold = field(d, "below_threshold", "diagnostics.").get<bool>();
    s.diagnostics.certified_rate = number(d, "certified_rate", "diagnostics.");
    s.diagnostics.ratios = numbers(d, "ratios", "diagnostics.");
    const json& qe = field(d, "quadrature_error", "diagnostics.");
    s.diagnostics.quadrature_error = qe.is_number() ? qe.get<double>() : 0.0;
    const json& ce = field(d, "consistency_error", "diagnostics.");
    s.diagnostics.consistency_error = ce.is_number() ? ce.get<double>() : 0.0;
    s.diagnostics.gradient_lipschitz = number(d, "gradient_lipschitz", "diagnostics.");
    s.diagnostics.value_bound = number(d, "value_bound", "diagnostics.");
    s.v = grid_from_json(field(j, "v", ""));
    s.w = grid_from_json(field(j, "w", ""));
    if (s.v.components() != 1 || s.v.axes().size() != s.w.axes().size())
        fail(ErrorCode::Config, "value and gradient grids are inconsistent");
    if (!(s.lambda > 0.0)) fail(ErrorCode::Config, "solution lambda must be positive");
    s.refresh_interpolants();
    return s;
}

ValueSolution solution_from_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Config, std::string("solution is not valid JSON: ") + e.what());
    }
    try {
        return solution_from_json(j);
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("solution has a malformed field: ") + e.what());
    }
}

std::string residual_csv(const ValueSolution& sol) {
    std::ostringstream os;
    os << "iteration,residual,ratio\n";
    for (std::size_t i = 0; i < sol.residual_history.size(); ++i) {
        os << i + 1 << ',' << format_double(sol.residual_history[i]) << ',';
        if (i > 0) os << format_double(sol.diagnostics.ratios[i - 1]);
        os << '\n';
    }
    return os.str();
}

std::string estimates_csv(const EstimateReport& r) {
    std::ostringstream os;
    os << "t,lambda_norm,duality_constant,lifted_lambda_norm,residual\n";
    for (std::size_t i = 0; i < r.t_samples.size(); ++i) {
        os << format_double(r.t_samples[i]) << ',' << format_double(r.norms[i]) << ','
           << format_double(r.duality[i]) << ',';
        if (i < r.lifted.size()) os << format_double(r.lifted[i]);
        os << ',' << format_double(r.residuals[i]) << '\n';
    }
    return os.str();
}

json simulation_to_json(const SimulationResult& r) {
    return {{"cost_estimate", r.cost_estimate}, {"std_error", r.std_error},
            {"n_paths", r.n_paths},             {"horizon", r.horizon},
            {"dt", r.dt},                       {"seed", r.seed},
            {"tail_bound", r.tail_bound}};
}

std::string trajectories_csv(const SimulationResult& r) {
    std::ostringstream os;
    os << "path,t";
    const Eigen::Index n = r.trajectories.empty() ? 0 : r.trajectories.front().z.size();
    const Eigen::Index m = r.trajectories.empty() ? 0 : r.trajectories.front().u.size();
    for (Eigen::Index i = 0; i < n; ++i) os << ",z_" << i + 1;
    for (Eigen::Index i = 0; i < m; ++i) os << ",u_" << i + 1;
    os << '\n';
    for (const auto& s : r.trajectories) {
        os << s.path << ',' << format_double(s.t);
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.z(i));
        for (Eigen::Index i = 0; i < m; ++i) os << ',' << format_double(s.u(i));
        os << '\n';
    }
    return os.str();
}

}  // namespace hjbs
