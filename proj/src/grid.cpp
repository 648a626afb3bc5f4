#include "hjbs/grid.hpp"

#include <algorithm>
#include <cmath>

#include "hjbs/error.hpp"

namespace hjbs {

GridFunction::GridFunction(std::vector<GridAxis> axes, std::size_t components)
    : axes_(std::move(axes)), components_(components) {
    if (axes_.empty() || axes_.size() > 6) fail(ErrorCode::InvalidArgument, "grid needs 1 to 6 axes");
    if (components_ == 0) fail(ErrorCode::InvalidArgument, "grid needs at least one component");
    size_ = 1;
    for (const auto& a : axes_) {
        if (a.nodes < 2 || !(a.hi > a.lo)) fail(ErrorCode::InvalidArgument, "grid axis needs lo < hi and >= 2 nodes");
        size_ *= a.nodes;
    }
    values_.assign(size_ * components_, 0.0);
}

GridFunction GridFunction::tabulate(std::vector<GridAxis> axes, std::size_t components,
                                    const std::function<Vector(const Vector&)>& f) {
    GridFunction g(std::move(axes), components);
    for (std::size_t i = 0; i < g.size_; ++i) {
        const Vector v = f(g.node_point(i));
        if (v.size() != static_cast<Eigen::Index>(components))
            fail(ErrorCode::DimensionMismatch, "tabulated function returned the wrong length");
        for (std::size_t c = 0; c < components; ++c) g.at(i, c) = v(static_cast<Eigen::Index>(c));
    }
    return g;
}

GridFunction GridFunction::tabulate_scalar(std::vector<GridAxis> axes,
                                           const std::function<double(const Vector&)>& f) {
    GridFunction g(std::move(axes), 1);
    for (std::size_t i = 0; i < g.size_; ++i) g.at(i) = f(g.node_point(i));
    return g;
}

std::vector<std::size_t> GridFunction::node_index(std::size_t flat) const {
    std::vector<std::size_t> idx(axes_.size());
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        idx[d] = flat % axes_[d].nodes;
        flat /= axes_[d].nodes;
    }
    return idx;
}

Vector GridFunction::node_point(std::size_t flat) const {
    Vector z(static_cast<Eigen::Index>(axes_.size()));
    const auto idx = node_index(flat);
    for (std::size_t d = 0; d < axes_.size(); ++d) z(static_cast<Eigen::Index>(d)) = axes_[d].node(idx[d]);
    return z;
}

bool GridFunction::is_interior(std::size_t flat) const {
    const auto idx = node_index(flat);
    for (std::size_t d = 0; d < axes_.size(); ++d)
        if (idx[d] == 0 || idx[d] + 1 == axes_[d].nodes) return false;
    return true;
}

template <class Sink>
void GridFunction::interpolate(const Vector& z, Sink&& sink) const {
    const std::size_t nd = axes_.size();
    if (z.size() != static_cast<Eigen::Index>(nd)) fail(ErrorCode::DimensionMismatch, "point has wrong dimension");
    std::size_t base[6];
    double frac[6];
    std::size_t stride[6];
    std::size_t s = 1;
    for (std::size_t d = 0; d < nd; ++d) {
        const GridAxis& a = axes_[d];
        const double x = std::clamp(z(static_cast<Eigen::Index>(d)), a.lo, a.hi);
        double u = (x - a.lo) / a.step();
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= a.nodes - 1) i = a.nodes - 2;
        base[d] = i;
        frac[d] = u - static_cast<double>(i);
        stride[d] = s;
        s *= a.nodes;
    }
    const std::size_t corners = std::size_t{1} << nd;
    for (std::size_t c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t d = 0; d < nd; ++d) {
            const bool up = (c >> d) & 1U;
            w *= up ? frac[d] : 1.0 - frac[d];
            flat += (base[d] + (up ? 1 : 0)) * stride[d];
        }
        if (w != 0.0) sink(flat, w);
    }
}

double GridFunction::eval(const Vector& z, std::size_t comp) const {
    double out = 0.0;
    interpolate(z, [&](std::size_t flat, double w) { out += w * at(flat, comp); });
    return out;
}

Vector GridFunction::eval_vector(const Vector& z) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(components_));
    interpolate(z, [&](std::size_t flat, double w) {
        for (std::size_t c = 0; c < components_; ++c) out(static_cast<Eigen::Index>(c)) += w * at(flat, c);
    });
    return out;
}

double GridFunction::sup_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size_; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < components_; ++c) s += at(i, c) * at(i, c);
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

bool GridFunction::same_layout(const GridFunction& other) const {
    if (components_ != other.components_ || axes_.size() != other.axes_.size()) return false;
    for (std::size_t d = 0; d < axes_.size(); ++d)
        if (axes_[d].lo != other.axes_[d].lo || axes_[d].hi != other.axes_[d].hi ||
            axes_[d].nodes != other.axes_[d].nodes)
            return false;
    return true;
}

double GridFunction::sup_distance(const GridFunction& other) const {
    if (!same_layout(other)) fail(ErrorCode::DimensionMismatch, "grid layouts differ");
    double m = 0.0;
    for (std::size_t i = 0; i < size_; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < components_; ++c) {
            const double d = at(i, c) - other.at(i, c);
            s += d * d;
        }
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

namespace {

// Interpolating coefficients along one line with c_0 = f_0 and c_{N-1} = f_{N-1},
// which is the natural end condition for the cubic B-spline basis.
void prefilter_line(double* v, std::size_t n, std::size_t stride, std::vector<double>& diag,
                    std::vector<double>& rhs) {
    if (n < 3) return;
    const std::size_t m = n - 2;
    diag.assign(m, 4.0);
    rhs.resize(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = 6.0 * v[(i + 1) * stride];
    rhs[0] -= v[0];
    rhs[m - 1] -= v[(n - 1) * stride];
    for (std::size_t i = 1; i < m; ++i) {
        const double f = 1.0 / diag[i - 1];
        diag[i] -= f;
        rhs[i] -= f * rhs[i - 1];
    }
    rhs[m - 1] /= diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] = (rhs[i] - rhs[i + 1]) / diag[i];
    for (std::size_t i = 0; i < m; ++i) v[(i + 1) * stride] = rhs[i];
}

}  // namespace

SplineFunction::SplineFunction(const GridFunction& g) : axes_(g.axes()), components_(g.components()) {
    const std::size_t nd = axes_.size();
    // Work array in the extended layout: component fastest, then axis 0, 1, ...
    ext_stride_.assign(nd, 0);
    std::size_t s = components_;
    for (std::size_t d = 0; d < nd; ++d) {
        ext_stride_[d] = s;
        s *= axes_[d].nodes + 2;
    }
    coeffs_.assign(s, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.node_index(i);
        std::size_t off = 0;
        for (std::size_t d = 0; d < nd; ++d) off += (idx[d] + 1) * ext_stride_[d];
        for (std::size_t c = 0; c < components_; ++c) coeffs_[off + c] = g.at(i, c);
    }
    std::vector<double> diag, rhs;
    // Axis by axis: solve the interior system, then set the ghosts by
    // c_{-1} = 2 c_0 - c_1 and c_N = 2 c_{N-1} - c_{N-2}.
    for (std::size_t d = 0; d < nd; ++d) {
        const std::size_t n = axes_[d].nodes;
        const std::size_t st = ext_stride_[d];
        const std::size_t lines = s / (n + 2);
        for (std::size_t l = 0; l < lines; ++l) {
            // Decompose l into the offset of a line start (index 0 along axis d).
            const std::size_t below = l % st;
            const std::size_t above = l / st;
            const std::size_t start = below + above * st * (n + 2);
            double* v = coeffs_.data() + start + st;
            prefilter_line(v, n, st, diag, rhs);
            v[-static_cast<std::ptrdiff_t>(st)] = 2.0 * v[0] - v[st];
            v[n * st] = 2.0 * v[(n - 1) * st] - v[(n - 2) * st];
        }
    }
}

template <class Sink>
void SplineFunction::stencil(const Vector& z, Sink&& sink) const {
    const std::size_t nd = axes_.size();
    if (z.size() != static_cast<Eigen::Index>(nd)) fail(ErrorCode::DimensionMismatch, "point has wrong dimension");
    double w[6][4];
    std::size_t base = 0;
    for (std::size_t d = 0; d < nd; ++d) {
        const GridAxis& a = axes_[d];
        const double x = std::clamp(z(static_cast<Eigen::Index>(d)), a.lo, a.hi);
        const double u = (x - a.lo) / a.step();
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= a.nodes - 1) i = a.nodes - 2;
        const double t = u - static_cast<double>(i);
        const double t2 = t * t, t3 = t2 * t;
        w[d][0] = (1.0 - t) * (1.0 - t) * (1.0 - t) / 6.0;
        w[d][1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
        w[d][2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
        w[d][3] = t3 / 6.0;
        // Extended index of node i - 1 is i.
        base += i * ext_stride_[d];
    }
    std::size_t count = 1;
    for (std::size_t d = 0; d < nd; ++d) count *= 4;
    for (std::size_t c = 0; c < count; ++c) {
        double wt = 1.0;
        std::size_t off = base;
        std::size_t r = c;
        for (std::size_t d = 0; d < nd; ++d) {
            const std::size_t k = r % 4;
            r /= 4;
            wt *= w[d][k];
            off += k * ext_stride_[d];
        }
        sink(off, wt);
    }
}

double SplineFunction::eval(const Vector& z, std::size_t comp) const {
    double out = 0.0;
    stencil(z, [&](std::size_t off, double wt) { out += wt * coeffs_[off + comp]; });
    return out;
}

Vector SplineFunction::eval_vector(const Vector& z) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(components_));
    stencil(z, [&](std::size_t off, double wt) {
        for (std::size_t c = 0; c < components_; ++c) out(static_cast<Eigen::Index>(c)) += wt * coeffs_[off + c];
    });
    return out;
}

}  // namespace hjbs
