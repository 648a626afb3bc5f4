#pragma once

#include <functional>
#include <vector>

#include "hjbs/types.hpp"

namespace hjbs {

struct GridAxis {
    double lo = -1.0;
    double hi = 1.0;
    std::size_t nodes = 2;

    double step() const { return (hi - lo) / static_cast<double>(nodes - 1); }
    double node(std::size_t i) const { return lo + step() * static_cast<double>(i); }
};

/// Tabulated function of the projected coordinates, scalar or vector valued,
/// evaluated by multilinear interpolation and clamped outside the box.
/// SplineFunction gives the smooth interpolant used by the solver.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(std::vector<GridAxis> axes, std::size_t components = 1);

    static GridFunction tabulate(std::vector<GridAxis> axes, std::size_t components,
                                 const std::function<Vector(const Vector&)>& f);
    static GridFunction tabulate_scalar(std::vector<GridAxis> axes,
                                        const std::function<double(const Vector&)>& f);

    std::size_t dims() const { return axes_.size(); }
    std::size_t components() const { return components_; }
    std::size_t size() const { return size_; }
    const std::vector<GridAxis>& axes() const { return axes_; }

    /// Coordinates of the node with the given flat index (axis 0 fastest).
    Vector node_point(std::size_t flat) const;
    std::vector<std::size_t> node_index(std::size_t flat) const;
    bool is_interior(std::size_t flat) const;

    double& at(std::size_t flat, std::size_t comp = 0) { return values_[flat * components_ + comp]; }
    double at(std::size_t flat, std::size_t comp = 0) const { return values_[flat * components_ + comp]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double eval(const Vector& z, std::size_t comp = 0) const;
    Vector eval_vector(const Vector& z) const;

    double sup_norm() const;
    /// Largest pointwise Euclidean distance between node vectors.
    double sup_distance(const GridFunction& other) const;
    bool same_layout(const GridFunction& other) const;

private:
    template <class Sink>
    void interpolate(const Vector& z, Sink&& sink) const;

    std::vector<GridAxis> axes_;
    std::size_t components_ = 1;
    std::size_t size_ = 0;
    std::vector<double> values_;
};

/// Natural cubic B-spline interpolant of a GridFunction (C^2, exact at the
/// nodes, clamped outside the box). Immutable once built.
class SplineFunction {
public:
    SplineFunction() = default;
    explicit SplineFunction(const GridFunction& g);

    bool empty() const { return axes_.empty(); }
    std::size_t dims() const { return axes_.size(); }
    std::size_t components() const { return components_; }

    double eval(const Vector& z, std::size_t comp = 0) const;
    Vector eval_vector(const Vector& z) const;

private:
    template <class Sink>
    void stencil(const Vector& z, Sink&& sink) const;

    std::vector<GridAxis> axes_;
    std::size_t components_ = 1;
    std::vector<std::size_t> ext_stride_;
    std::vector<double> coeffs_;  ///< nodes + 2 per axis, ghosts at both ends
};

}  // namespace hjbs
