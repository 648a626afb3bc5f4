#include "hjbs/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "hjbs/error.hpp"

namespace hjbs {

bool ControlSet::contains(const Vector& u, double tol) const {
    if (kind == Kind::Ball) return u.norm() <= radius * (1.0 + tol) + tol;
    if (u.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (u(i) < lower(i) - tol || u(i) > upper(i) + tol) return false;
    return true;
}

double ControlSet::max_norm(Eigen::Index) const {
    if (kind == Kind::Ball) return radius;
    return lower.cwiseAbs().cwiseMax(upper.cwiseAbs()).norm();
}

double ControlCost::operator()(const Vector& u) const {
    switch (kind) {
        case Kind::Quadratic: return 0.5 * eta * u.squaredNorm();
        case Kind::Linear: return c * u.norm();
        case Kind::Custom: return table.eval(u);
    }
    return 0.0;
}

double StateCost::sup() const {
    if (table.size() > 0) return table.sup_norm();
    return 0.0;
}

void validate(const HamiltonianSpec& spec, Eigen::Index m) {
    if (spec.set.kind == ControlSet::Kind::Ball) {
        if (!(spec.set.radius > 0.0)) fail(ErrorCode::Config, "control ball radius must be positive");
    } else {
        if (spec.set.lower.size() != m || spec.set.upper.size() != m)
            fail(ErrorCode::DimensionMismatch, "control box bounds must have one entry per control");
        if (!((spec.set.upper - spec.set.lower).minCoeff() > 0.0))
            fail(ErrorCode::Config, "control box must be nondegenerate");
    }
    if (spec.cost.kind == ControlCost::Kind::Quadratic && !(spec.cost.eta > 0.0))
        fail(ErrorCode::Config, "quadratic control cost needs eta > 0");
    if (spec.cost.kind == ControlCost::Kind::Linear && !(spec.cost.c >= 0.0))
        fail(ErrorCode::Config, "linear control cost needs c >= 0");
    if (spec.cost.kind == ControlCost::Kind::Custom &&
        spec.cost.table.dims() != static_cast<std::size_t>(m))
        fail(ErrorCode::DimensionMismatch, "custom control cost table must have one axis per control");
    if (m > 3 && (spec.cost.kind == ControlCost::Kind::Custom ||
                  (spec.set.kind == ControlSet::Kind::Box && spec.cost.kind == ControlCost::Kind::Linear)))
        fail(ErrorCode::Config, "brute-force Hamiltonian minimization supports at most 3 controls");
}

double h_cv(const Vector& p, const Vector& u, const HamiltonianSpec& spec) {
    if (p.size() != u.size()) fail(ErrorCode::DimensionMismatch, "p and u differ in length");
    if (!spec.set.contains(u)) fail(ErrorCode::ControlOutOfSet, "control lies outside U");
    return p.dot(u) + spec.cost(u);
}

namespace {

Vector project_ball(const Vector& u, double r) {
    const double n = u.norm();
    return n > r ? Vector(u * (r / n)) : u;
}

// Coarse grid over the bounding box of U, then a few zoomed passes.
HMin brute_force(const Vector& p, const HamiltonianSpec& spec) {
    const Eigen::Index m = p.size();
    Vector lo(m), hi(m);
    if (spec.set.kind == ControlSet::Kind::Ball) {
        lo.setConstant(-spec.set.radius);
        hi.setConstant(spec.set.radius);
    } else {
        lo = spec.set.lower;
        hi = spec.set.upper;
    }
    HMin best{std::numeric_limits<double>::infinity(), Vector::Zero(m)};
    std::size_t nodes = std::max<std::size_t>(spec.search_nodes, 3);
    for (int pass = 0; pass < 4; ++pass) {
        std::size_t count = 1;
        for (Eigen::Index d = 0; d < m; ++d) count *= nodes;
        Vector u(m);
        for (std::size_t c = 0; c < count; ++c) {
            std::size_t rem = c;
            for (Eigen::Index d = 0; d < m; ++d) {
                const double s = static_cast<double>(rem % nodes) / static_cast<double>(nodes - 1);
                rem /= nodes;
                u(d) = lo(d) + s * (hi(d) - lo(d));
            }
            if (spec.set.kind == ControlSet::Kind::Ball) u = project_ball(u, spec.set.radius);
            const double v = p.dot(u) + spec.cost(u);
            if (v < best.value) best = {v, u};
        }
        // Zoom to two coarse cells around the incumbent.
        const Vector width = (hi - lo) * (2.0 / static_cast<double>(nodes - 1));
        Vector nlo = best.argmin - width, nhi = best.argmin + width;
        if (spec.set.kind == ControlSet::Kind::Box) {
            nlo = nlo.cwiseMax(spec.set.lower);
            nhi = nhi.cwiseMin(spec.set.upper);
        }
        lo = nlo;
        hi = nhi;
        nodes = 21;
    }
    return best;
}

}  // namespace

HMin h_min(const Vector& p, const HamiltonianSpec& spec) {
    const ControlSet& set = spec.set;
    const ControlCost& cost = spec.cost;
    const Eigen::Index m = p.size();
    if (cost.kind == ControlCost::Kind::Quadratic) {
        const double eta = cost.eta;
        if (set.kind == ControlSet::Kind::Ball) {
            const double np = p.norm(), r = set.radius;
            if (np <= eta * r) return {-np * np / (2.0 * eta), -p / eta};
            return {-r * np + 0.5 * eta * r * r, -(r / np) * p};
        }
        // Separable: clamp the unconstrained minimizer per coordinate.
        Vector u = (-p / eta).cwiseMax(set.lower).cwiseMin(set.upper);
        return {p.dot(u) + 0.5 * eta * u.squaredNorm(), u};
    }
    if (cost.kind == ControlCost::Kind::Linear && set.kind == ControlSet::Kind::Ball) {
        const double np = p.norm();
        if (np <= cost.c) return {0.0, Vector::Zero(m)};
        return {set.radius * (cost.c - np), -(set.radius / np) * p};
    }
    return brute_force(p, spec);
}

double hamiltonian_lipschitz(const HamiltonianSpec& spec, Eigen::Index m) {
    return spec.set.max_norm(m);
}

double control_cost_sup(const HamiltonianSpec& spec, Eigen::Index m) {
    const double r = spec.set.max_norm(m);
    switch (spec.cost.kind) {
        case ControlCost::Kind::Quadratic: return 0.5 * spec.cost.eta * r * r;
        case ControlCost::Kind::Linear: return spec.cost.c * r;
        case ControlCost::Kind::Custom: return spec.cost.table.sup_norm();
    }
    return 0.0;
}

double contraction_bound(double lambda, double gamma, double kappa0) {
    if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "lambda must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        std::ostringstream os;
        os << "singularity exponent must lie in [0, 1), got " << gamma;
        fail(ErrorCode::BadExponent, os.str());
    }
    if (gamma == 0.0) return kappa0 / lambda;
    const double a = 1.0 - gamma;
    const double head = std::pow(lambda, -a) * boost::math::tgamma_lower(a, lambda);
    return kappa0 * (head + std::exp(-lambda) / lambda);
}

double lambda_threshold(double kappa0, double gamma, double lipschitz, double margin, double lo,
                        double hi) {
    auto ok = [&](double lam) { return lipschitz * contraction_bound(lam, gamma, kappa0) <= margin; };
    if (ok(lo)) return lo;
    if (!ok(hi)) {
        std::ostringstream os;
        os << "no discount below " << hi << " certifies a contraction (kappa0 = " << kappa0
           << ", gamma = " << gamma << ")";
        fail(ErrorCode::NoThreshold, os.str());
    }
    double a = std::log(lo), b = std::log(hi);
    while (b - a > 1e-12) {
        const double mid = 0.5 * (a + b);
        if (ok(std::exp(mid))) b = mid; else a = mid;
    }
    return std::exp(b);
}

}  // namespace hjbs
