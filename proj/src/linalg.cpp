#include "hjbs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hjbs/error.hpp"

namespace hjbs {

Matrix GaussianFactor::factor() const {
    if (scaled_factor.size() > 0) return scaled_factor * rotation;
    return basis * sigma.asDiagonal();
}

Matrix GaussianFactor::sym_root() const {
    return basis * sigma.asDiagonal() * basis.transpose();
}

Matrix GaussianFactor::whiten() const {
    if (scaled_factor.size() > 0) return rotation.transpose() * scaled_inverse;
    return sigma.cwiseInverse().asDiagonal() * basis.transpose();
}

double GaussianFactor::condition() const {
    if (rank == 0) return 0.0;
    const double r = sigma.maxCoeff() / sigma.minCoeff();
    return r * r;
}

GaussianFactor factorize_covariance(const Matrix& cov, double rank_tol) {
    if (cov.rows() != cov.cols())
        fail(ErrorCode::DimensionMismatch, "covariance must be square");
    const Eigen::Index n = cov.rows();
    GaussianFactor out;
    out.cov = cov;
    if (n == 0) return out;

    Vector scale(n);
    for (Eigen::Index i = 0; i < n; ++i) scale(i) = std::sqrt(std::max(cov(i, i), 0.0));
    const double smax = scale.maxCoeff();
    if (!(smax > 0.0)) {
        out.basis = Matrix::Zero(n, 0);
        out.sigma = Vector::Zero(0);
        return out;
    }

    // Correlation matrix over the coordinates that carry variance.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i)
        if (scale(i) > 1e-150 * smax) active.push_back(i);
    const auto na = static_cast<Eigen::Index>(active.size());
    Matrix corr(na, na);
    for (Eigen::Index a = 0; a < na; ++a)
        for (Eigen::Index b = 0; b < na; ++b)
            corr(a, b) = cov(active[a], active[b]) / (scale(active[a]) * scale(active[b]));
    corr = 0.5 * (corr + corr.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(corr);
    const Vector& ev = es.eigenvalues();
    const double evmax = std::max(ev.maxCoeff(), 0.0);

    // F0 = D * V * sqrt(ev) restricted to clearly positive correlation modes.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < na; ++k)
        if (ev(k) > 1e-15 * evmax) keep.push_back(k);
    Matrix f0 = Matrix::Zero(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const double s = std::sqrt(ev(keep[c]));
        for (Eigen::Index a = 0; a < na; ++a)
            f0(active[a], static_cast<Eigen::Index>(c)) = scale(active[a]) * es.eigenvectors()(a, keep[c]) * s;
    }

    // Rotate to the eigenbasis of Q: F0 = U Sigma W^T, Q = U Sigma^2 U^T.
    Eigen::JacobiSVD<Matrix> svd(f0, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double svmax = sv.size() > 0 ? sv(0) : 0.0;
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > rank_tol * svmax) ++r;
    out.rank = r;
    out.basis = svd.matrixU().leftCols(r);
    out.sigma = sv.head(r);

    // F0 has the exact left inverse diag(1/sqrt ev) V^T D^{-1}. Composing it with
    // the rotation W avoids the small components of U, which lose digits when the
    // diagonal of Q spans many orders of magnitude.
    Matrix inv = Matrix::Zero(static_cast<Eigen::Index>(keep.size()), n);
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const double s = 1.0 / std::sqrt(ev(keep[c]));
        for (Eigen::Index a = 0; a < na; ++a)
            inv(static_cast<Eigen::Index>(c), active[a]) = s * es.eigenvectors()(a, keep[c]) / scale(active[a]);
    }
    out.scaled_factor = f0;
    out.scaled_inverse = inv;
    out.rotation = svd.matrixV().leftCols(r);
    return out;
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        fail(ErrorCode::InvalidArgument, "power-law fit needs at least two matched samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0))
            fail(ErrorCode::InvalidArgument, "power-law fit needs positive samples");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    PowerLawFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0) || !(hi > lo) || n < 2)
        fail(ErrorCode::InvalidArgument, "geometric grid needs 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

}  // namespace hjbs
