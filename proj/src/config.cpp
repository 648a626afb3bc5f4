#include "hjbs/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <toml.hpp>

#include "hjbs/error.hpp"

namespace hjbs {

using nlohmann::json;

namespace {

json to_json(const toml::node& node, const std::string& where) {
    if (auto t = node.as_table()) {
        json out = json::object();
        for (auto&& [k, v] : *t) out[std::string(k.str())] = to_json(v, where + "." + std::string(k.str()));
        return out;
    }
    if (auto a = node.as_array()) {
        json out = json::array();
        for (auto&& v : *a) out.push_back(to_json(v, where));
        return out;
    }
    if (auto v = node.as_integer()) return v->get();
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_boolean()) return v->get();
    if (auto v = node.as_string()) return v->get();
    fail(ErrorCode::Config, "unsupported TOML value (dates are not allowed) at " + where);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) fail(ErrorCode::Config, where + " must be a table");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail(ErrorCode::Config, "unknown key '" + it.key() + "' in " + where);
}

double get_double(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(ErrorCode::Config, where + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ErrorCode::Config, where + "." + key + " must be finite");
    return d;
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        fail(ErrorCode::Config, where + "." + key + " must be a non-negative integer");
    return v.get<std::size_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) fail(ErrorCode::Config, where + "." + key + " must be a boolean");
    return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) fail(ErrorCode::Config, where + "." + key + " must be a string");
    return obj.at(key).get<std::string>();
}

Vector to_vector(const json& arr, const std::string& where) {
    if (!arr.is_array()) fail(ErrorCode::Config, where + " must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) fail(ErrorCode::Config, where + " must be an array of numbers");
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
}

Matrix to_matrix(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty()) fail(ErrorCode::Config, where + " must be a non-empty array of rows");
    const std::size_t cols = arr[0].is_array() ? arr[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(arr.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const Vector row = to_vector(arr[i], where);
        if (static_cast<std::size_t>(row.size()) != cols || cols == 0)
            fail(ErrorCode::Config, where + " rows must be non-empty and of equal length");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

ModelConfig parse_model(const json& j) {
    const std::string w = "model";
    check_keys(j, {"kind", "modes", "beta", "alpha", "epsilon", "noise_scale", "projection",
                   "orthonormalize", "wave_speed", "projected_modes", "control_modes",
                   "noise_modes", "sigma"},
               w);
    ModelConfig m;
    const std::string kind = get_string(j, "kind", "", w);
    if (kind == "heat") m.kind = ModelKind::HeatBoundary;
    else if (kind == "wave") m.kind = ModelKind::WaveDistributed;
    else fail(ErrorCode::Config, "model.kind = \"" + kind + "\": must be \"heat\" or \"wave\"");
    m.modes = get_count(j, "modes", m.kind == ModelKind::HeatBoundary ? 64 : 16, w);
    m.beta = get_double(j, "beta", m.beta, w);
    m.alpha = get_double(j, "alpha", m.alpha, w);
    m.epsilon = get_double(j, "epsilon", m.epsilon, w);
    m.noise_scale = get_double(j, "noise_scale", m.noise_scale, w);
    m.orthonormalize = get_bool(j, "orthonormalize", m.orthonormalize, w);
    if (j.contains("projection")) m.projection = to_matrix(j.at("projection"), "model.projection");
    else if (m.kind == ModelKind::HeatBoundary) m.projection = Matrix::Ones(1, 1);
    m.wave_speed = get_double(j, "wave_speed", m.wave_speed, w);
    m.projected_modes = get_count(j, "projected_modes", m.projected_modes, w);
    m.control_modes = get_count(j, "control_modes", m.control_modes, w);
    m.noise_modes = get_count(j, "noise_modes", m.noise_modes, w);
    if (j.contains("sigma")) m.sigma = to_matrix(j.at("sigma"), "model.sigma");
    return m;
}

EstimatesConfig parse_estimates(const json& j) {
    const std::string w = "estimates";
    check_keys(j, {"t_min", "t_max", "samples", "lifted", "rho", "lift_nodes"}, w);
    EstimatesConfig e;
    e.t_min = get_double(j, "t_min", e.t_min, w);
    e.t_max = get_double(j, "t_max", e.t_max, w);
    e.samples = get_count(j, "samples", e.samples, w);
    e.lifted = get_bool(j, "lifted", e.lifted, w);
    e.rho = get_double(j, "rho", e.rho, w);
    e.lift_nodes = get_count(j, "lift_nodes", e.lift_nodes, w);
    if (!(e.t_min > 0.0 && e.t_max > e.t_min)) fail(ErrorCode::Config, "estimates need 0 < t_min < t_max");
    if (e.samples < 8) fail(ErrorCode::Config, "estimates.samples must be >= 8");
    return e;
}

std::vector<GridAxis> parse_axes(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty()) fail(ErrorCode::Config, where + " must be a non-empty array");
    std::vector<GridAxis> axes;
    for (const json& a : arr) {
        check_keys(a, {"lo", "hi", "nodes"}, where);
        GridAxis g{get_double(a, "lo", -1.0, where), get_double(a, "hi", 1.0, where),
                   get_count(a, "nodes", 2, where)};
        if (!(g.hi > g.lo) || g.nodes < 2) fail(ErrorCode::Config, where + " needs lo < hi and nodes >= 2");
        axes.push_back(g);
    }
    return axes;
}

ProblemConfig parse_problem(const json& j) {
    const std::string w = "problem";
    check_keys(j, {"lambda", "tol", "max_iter", "grid_nodes", "grid_halfwidth", "gh_order",
                   "time_nodes", "margin", "control_set", "control_cost", "state_cost"},
               w);
    ProblemConfig p;
    if (j.contains("lambda")) {
        p.lambda = get_double(j, "lambda", 0.0, w);
        if (!(*p.lambda > 0.0)) fail(ErrorCode::Config, "problem.lambda must be positive");
    }
    p.tol = get_double(j, "tol", p.tol, w);
    p.max_iter = get_count(j, "max_iter", p.max_iter, w);
    p.grid_nodes = get_count(j, "grid_nodes", p.grid_nodes, w);
    p.grid_halfwidth = get_double(j, "grid_halfwidth", p.grid_halfwidth, w);
    p.gh_order = get_count(j, "gh_order", p.gh_order, w);
    p.time_nodes = get_count(j, "time_nodes", p.time_nodes, w);
    p.margin = get_double(j, "margin", p.margin, w);
    if (!(p.tol > 0.0)) fail(ErrorCode::Config, "problem.tol must be positive");
    if (p.gh_order < 2) fail(ErrorCode::Config, "problem.gh_order must be >= 2");
    if (!(p.margin > 0.0 && p.margin < 1.0)) fail(ErrorCode::Config, "problem.margin must lie in (0, 1)");

    if (j.contains("control_set")) {
        const json& c = j.at("control_set");
        const std::string cw = "problem.control_set";
        check_keys(c, {"kind", "radius", "lower", "upper"}, cw);
        const std::string kind = get_string(c, "kind", "ball", cw);
        if (kind == "ball") p.control_set = ControlSet::ball(get_double(c, "radius", 1.0, cw));
        else if (kind == "box") {
            if (!c.contains("lower") || !c.contains("upper")) fail(ErrorCode::Config, cw + " box needs lower and upper");
            p.control_set = ControlSet::box(to_vector(c.at("lower"), cw + ".lower"), to_vector(c.at("upper"), cw + ".upper"));
        } else fail(ErrorCode::Config, cw + ".kind = \"" + kind + "\": must be \"ball\" or \"box\"");
    }
    if (j.contains("control_cost")) {
        const json& c = j.at("control_cost");
        const std::string cw = "problem.control_cost";
        check_keys(c, {"kind", "eta", "c", "axes", "values"}, cw);
        const std::string kind = get_string(c, "kind", "quadratic", cw);
        if (kind == "quadratic") {
            p.control_cost.kind = ControlCost::Kind::Quadratic;
            p.control_cost.eta = get_double(c, "eta", 1.0, cw);
        } else if (kind == "linear") {
            p.control_cost.kind = ControlCost::Kind::Linear;
            p.control_cost.c = get_double(c, "c", 0.0, cw);
        } else if (kind == "custom") {
            p.control_cost.kind = ControlCost::Kind::Custom;
            if (!c.contains("axes") || !c.contains("values")) fail(ErrorCode::Config, cw + " custom needs axes and values");
            GridFunction t(parse_axes(c.at("axes"), cw + ".axes"), 1);
            const Vector vals = to_vector(c.at("values"), cw + ".values");
            if (static_cast<std::size_t>(vals.size()) != t.size()) fail(ErrorCode::Config, cw + ".values has the wrong length");
            for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = vals(static_cast<Eigen::Index>(i));
            p.control_cost.table = std::move(t);
        } else fail(ErrorCode::Config, cw + ".kind = \"" + kind + "\": must be quadratic, linear or custom");
    }
    if (j.contains("state_cost")) {
        const json& c = j.at("state_cost");
        const std::string cw = "problem.state_cost";
        check_keys(c, {"kind", "height", "width", "center", "threshold", "axes", "values"}, cw);
        StateCostConfig& s = p.state_cost;
        s.kind = get_string(c, "kind", "bump", cw);
        s.height = get_double(c, "height", s.height, cw);
        s.width = get_double(c, "width", s.width, cw);
        s.threshold = get_double(c, "threshold", s.threshold, cw);
        if (c.contains("center")) s.center = to_vector(c.at("center"), cw + ".center");
        if (s.kind == "table") {
            if (!c.contains("axes") || !c.contains("values")) fail(ErrorCode::Config, cw + " table needs axes and values");
            s.table_axes = parse_axes(c.at("axes"), cw + ".axes");
            const Vector vals = to_vector(c.at("values"), cw + ".values");
            s.table_values.assign(vals.data(), vals.data() + vals.size());
        } else if (s.kind != "bump" && s.kind != "step") {
            fail(ErrorCode::Config, cw + ".kind = \"" + s.kind + "\": must be bump, step or table");
        }
        if (s.kind == "bump" && !(s.width > 0.0)) fail(ErrorCode::Config, cw + ".width must be positive");
    }
    return p;
}

SimulationConfig parse_simulation(const json& j) {
    const std::string w = "simulation";
    check_keys(j, {"dt", "horizon", "paths", "initial_states", "dump_paths"}, w);
    SimulationConfig s;
    s.dt = get_double(j, "dt", s.dt, w);
    s.horizon = get_double(j, "horizon", s.horizon, w);
    s.paths = get_count(j, "paths", s.paths, w);
    s.dump_paths = get_count(j, "dump_paths", s.dump_paths, w);
    if (j.contains("initial_states")) {
        const json& a = j.at("initial_states");
        if (!a.is_array()) fail(ErrorCode::Config, "simulation.initial_states must be an array of arrays");
        for (const json& x : a) s.initial_states.push_back(to_vector(x, "simulation.initial_states"));
    }
    if (!(s.dt > 0.0)) fail(ErrorCode::Config, "simulation.dt must be positive");
    if (s.paths < 1) fail(ErrorCode::Config, "simulation.paths must be >= 1");
    return s;
}

VerifyConfig parse_verify(const json& j) {
    const std::string w = "verify";
    check_keys(j, {"constant_policies", "min_radius_fraction", "initial_states"}, w);
    VerifyConfig v;
    v.constant_policies = get_count(j, "constant_policies", v.constant_policies, w);
    v.min_radius_fraction = get_double(j, "min_radius_fraction", v.min_radius_fraction, w);
    v.initial_states = get_count(j, "initial_states", v.initial_states, w);
    return v;
}

RunConfig from_document(json doc) {
    check_keys(doc, {"schema", "seed", "model", "estimates", "problem", "simulation", "verify"}, "config");
    if (!doc.contains("schema") || !doc.at("schema").is_number_integer() || doc.at("schema").get<long long>() != 1)
        fail(ErrorCode::Config, "config must declare schema = 1");
    if (!doc.contains("model")) fail(ErrorCode::Config, "config needs a [model] table");
    RunConfig c;
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_integer() || doc.at("seed").get<long long>() < 0)
            fail(ErrorCode::Config, "seed must be a non-negative integer");
        c.seed = doc.at("seed").get<std::uint64_t>();
    }
    c.model = parse_model(doc.at("model"));
    const json empty = json::object();
    c.estimates = parse_estimates(doc.value("estimates", empty));
    c.problem = parse_problem(doc.value("problem", empty));
    c.simulation = parse_simulation(doc.value("simulation", empty));
    c.verify = parse_verify(doc.value("verify", empty));
    c.document = std::move(doc);
    return c;
}

}  // namespace

RunConfig load_config_string(const std::string& text, const std::string& source) {
    toml::table tbl;
    try {
        tbl = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
           << e.description();
        fail(ErrorCode::Config, os.str());
    }
    return from_document(to_json(tbl, source));
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_config_string(ss.str(), path);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::Io, "SHA-256 computation failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string config_digest(const RunConfig& config) {
    return sha256_hex(config.document.dump());
}

StateCost build_state_cost(const StateCostConfig& c, const std::vector<GridAxis>& axes) {
    StateCost s;
    const auto n = static_cast<Eigen::Index>(axes.size());
    if (c.kind == "bump") {
        Vector center = c.center.size() ? c.center : Vector::Zero(n);
        if (center.size() != n) fail(ErrorCode::DimensionMismatch, "bump center has the wrong dimension");
        const double h = c.height, two_w2 = 2.0 * c.width * c.width;
        s.exact = [=](const Vector& z) { return h * (1.0 - std::exp(-(z - center).squaredNorm() / two_w2)); };
        std::ostringstream os;
        os << "bump(height=" << c.height << ", width=" << c.width << ")";
        s.description = os.str();
    } else if (c.kind == "step") {
        const double h = c.height, thr = c.threshold;
        s.exact = [=](const Vector& z) { return z(0) > thr ? h : 0.0; };
        s.description = "step";
    }
    if (c.kind == "table") {
        GridFunction t(c.table_axes, 1);
        if (t.dims() != axes.size()) fail(ErrorCode::DimensionMismatch, "state cost table has the wrong dimension");
        if (c.table_values.size() != t.size()) fail(ErrorCode::Config, "state cost table has the wrong number of values");
        for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = c.table_values[i];
        s.table = std::move(t);
        s.description = "table";
    } else {
        s.table = GridFunction::tabulate_scalar(axes, s.exact);
    }
    return s;
}

}  // namespace hjbs
