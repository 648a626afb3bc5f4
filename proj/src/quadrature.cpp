#include "hjbs/quadrature.hpp"

#include <cmath>
#include <random>

#include "hjbs/error.hpp"

namespace hjbs {

HermiteRule gauss_hermite(std::size_t order) {
    if (order < 1) fail(ErrorCode::InvalidArgument, "Gauss-Hermite order must be >= 1");
    const auto n = static_cast<Eigen::Index>(order);
    // x He_k = He_{k+1} + k He_{k-1}: symmetric Jacobi matrix with off-diagonal sqrt(k).
    Matrix jac = Matrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        jac(k, k - 1) = std::sqrt(static_cast<double>(k));
        jac(k - 1, k) = jac(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
    HermiteRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    // Orthonormal recurrence p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1). Newton on p_n
    // polishes each node; w = 1 / sum_k p_k(x)^2 keeps the tiny outer weights accurate,
    // which the eigenvector components do not.
    auto eval = [order](double x, double& pn, double& dpn, double& christoffel) {
        double prev = 0.0, cur = 1.0;
        christoffel = 1.0;
        for (std::size_t k = 0; k < order; ++k) {
            const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
            prev = cur;
            cur = next;
            if (k + 1 < order) christoffel += cur * cur;
        }
        pn = cur;
        dpn = std::sqrt(static_cast<double>(order)) * prev;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        double x = es.eigenvalues()(i), pn = 0.0, dpn = 0.0, c = 1.0;
        eval(x, pn, dpn, c);
        if (dpn != 0.0) x -= pn / dpn;
        eval(x, pn, dpn, c);
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 1.0 / c;
    }
    // Symmetrize away the eigensolver's round-off.
    for (std::size_t i = 0; i < order / 2; ++i) {
        const std::size_t j = order - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

TensorRule tensor_hermite(std::size_t order, Eigen::Index dims) {
    const HermiteRule r = gauss_hermite(order);
    Eigen::Index count = 1;
    for (Eigen::Index d = 0; d < dims; ++d) count *= static_cast<Eigen::Index>(order);
    TensorRule t;
    t.points.resize(dims, count);
    t.weights.resize(count);
    for (Eigen::Index c = 0; c < count; ++c) {
        Eigen::Index rem = c;
        double w = 1.0;
        for (Eigen::Index d = 0; d < dims; ++d) {
            const auto i = static_cast<std::size_t>(rem % static_cast<Eigen::Index>(order));
            rem /= static_cast<Eigen::Index>(order);
            t.points(d, c) = r.nodes[i];
            w *= r.weights[i];
        }
        t.weights(c) = w;
    }
    return t;
}

ProjectedGaussian make_projected_gaussian(const Vector& mean, const GaussianFactor& f) {
    if (mean.size() != f.dim()) fail(ErrorCode::DimensionMismatch, "mean and covariance differ in size");
    ProjectedGaussian g;
    g.mean = mean;
    g.cov_root = f.sym_root();
    g.factor = f.factor();
    g.basis = f.basis;
    g.rank = f.rank;
    return g;
}

ProjectedGaussian make_projected_gaussian(const Vector& mean, const Matrix& cov) {
    return make_projected_gaussian(mean, factorize_covariance(cov));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    // splitmix64 finalizer over a mixed key
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void standard_normals(std::uint64_t master, std::uint64_t counter, std::span<double> out) {
    std::mt19937_64 eng(derive_seed(master, counter));
    std::normal_distribution<double> nd;
    for (double& x : out) x = nd(eng);
}

namespace {

constexpr std::size_t kMcBlock = 4096;

template <class Weight>
QuadResult integrate(const Integrand& g, const ProjectedGaussian& law, const QuadScheme& scheme,
                     Weight&& weight) {
    const Eigen::Index r = law.rank;
    if (r > 6) fail(ErrorCode::InvalidArgument, "quadrature supports at most 6 directions");
    auto eval = [&](const Vector& xi) {
        const Vector y = law.mean + law.factor * xi;
        const double v = g(y);
        if (!std::isfinite(v)) fail(ErrorCode::NonFiniteIntegrand, "integrand returned a non-finite value");
        return v * weight(xi);
    };
    QuadResult out;
    if (scheme.kind == QuadScheme::Kind::GaussHermite) {
        if (scheme.order < 2) fail(ErrorCode::InvalidArgument, "Gauss-Hermite order must be >= 2");
        if (r == 0) {
            out.value = eval(Vector::Zero(0));
            return out;
        }
        const TensorRule t = tensor_hermite(scheme.order, r);
        double s = 0.0;
        for (Eigen::Index c = 0; c < t.weights.size(); ++c) s += t.weights(c) * eval(t.points.col(c));
        out.value = s;
        return out;
    }
    if (scheme.samples < 1000) fail(ErrorCode::InvalidArgument, "Monte Carlo needs at least 1000 samples");
    double mean = 0.0, m2 = 0.0;
    std::size_t count = 0;
    std::vector<double> buf;
    Vector xi(r);
    for (std::size_t block = 0; count < scheme.samples; ++block) {
        const std::size_t nb = std::min(kMcBlock, scheme.samples - count);
        buf.resize(nb * static_cast<std::size_t>(r));
        standard_normals(scheme.seed, block, buf);
        for (std::size_t i = 0; i < nb; ++i) {
            for (Eigen::Index d = 0; d < r; ++d) xi(d) = buf[i * static_cast<std::size_t>(r) + static_cast<std::size_t>(d)];
            const double v = eval(xi);
            ++count;
            const double delta = v - mean;
            mean += delta / static_cast<double>(count);
            m2 += delta * (v - mean);
        }
    }
    out.value = mean;
    const double var = count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
    out.std_error = std::sqrt(var / static_cast<double>(count));
    return out;
}

}  // namespace

QuadResult expect(const Integrand& g, const ProjectedGaussian& law, const QuadScheme& scheme) {
    return integrate(g, law, scheme, [](const Vector&) { return 1.0; });
}

QuadResult expect_weighted(const Integrand& g, const ProjectedGaussian& law, const Vector& w,
                           const QuadScheme& scheme) {
    if (w.size() != law.mean.size()) fail(ErrorCode::DimensionMismatch, "weight vector has wrong length");
    if (!w.allFinite()) fail(ErrorCode::InvalidArgument, "weight vector must be finite");
    // Q^{-1/2} F xi = U xi, so the weight is <U^T w, xi>.
    const Vector uw = law.basis.transpose() * w;
    return integrate(g, law, scheme, [&](const Vector& xi) { return uw.dot(xi); });
}

}  // namespace hjbs
