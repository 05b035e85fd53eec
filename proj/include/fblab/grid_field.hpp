#pragma once

#include "fblab/errors.hpp"
#include "fblab/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace fblab {

/// A vector-valued function sampled on a uniform Cartesian grid in R^n.
///
/// Nodes are stored in row-major order (the last axis varies fastest), one
/// row of `values()` per node with m columns.
template <typename Scalar>
class GridField {
 public:
  using PointType = PointT<Scalar>;
  using VectorType = VectorT<Scalar>;
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  GridField() = default;

  GridField(const PointType& origin, Scalar spacing, const NodeIndex& dims, int m)
      : origin_(origin), spacing_(spacing), dims_(dims), m_(m) {
    const int n = static_cast<int>(origin.size());
    if (n < 1 || n > kMaxDim) throw InputError("grid dimension must be 1..3");
    if (!(spacing > Scalar(0))) throw InputError("grid spacing must be positive");
    if (m < 1) throw InputError("field must have at least one component");
    for (int d = n; d < kMaxDim; ++d) dims_[d] = 1;
    for (int d = 0; d < n; ++d) {
      if (dims_[d] < 2) throw InputError("grid needs at least two nodes per axis");
    }
    strides_[kMaxDim - 1] = 1;
    for (int d = kMaxDim - 2; d >= 0; --d) strides_[d] = strides_[d + 1] * dims_[d + 1];
    values_ = Values::Zero(num_nodes(), m);
  }

  int dim() const { return static_cast<int>(origin_.size()); }
  int components() const { return m_; }
  Scalar spacing() const { return spacing_; }
  const PointType& origin() const { return origin_; }
  const NodeIndex& dims() const { return dims_; }
  Index stride(int axis) const { return strides_[axis]; }
  Index num_nodes() const {
    return static_cast<Index>(dims_[0]) * dims_[1] * dims_[2];
  }

  PointType lower() const { return origin_; }
  PointType upper() const {
    PointType p = origin_;
    for (int d = 0; d < dim(); ++d) p[d] += spacing_ * Scalar(dims_[d] - 1);
    return p;
  }

  Index index(const NodeIndex& node) const {
    return node[0] * strides_[0] + node[1] * strides_[1] + node[2] * strides_[2];
  }

  NodeIndex node(Index i) const {
    NodeIndex out{0, 0, 0};
    for (int d = 0; d < kMaxDim; ++d) {
      out[d] = static_cast<int>(i / strides_[d]);
      i -= out[d] * strides_[d];
    }
    return out;
  }

  PointType position(const NodeIndex& node) const {
    PointType p = origin_;
    for (int d = 0; d < dim(); ++d) p[d] += spacing_ * Scalar(node[d]);
    return p;
  }
  PointType position(Index i) const { return position(node(i)); }

  bool on_boundary(Index i) const {
    const NodeIndex k = node(i);
    for (int d = 0; d < dim(); ++d) {
      if (k[d] == 0 || k[d] == dims_[d] - 1) return true;
    }
    return false;
  }

  /// True when x lies in the closed grid box, up to `slack` in each coordinate.
  bool contains(const PointType& x, Scalar slack = Scalar(0)) const {
    const PointType hi = upper();
    for (int d = 0; d < dim(); ++d) {
      if (x[d] < origin_[d] - slack || x[d] > hi[d] + slack) return false;
    }
    return true;
  }

  Values& values() { return values_; }
  const Values& values() const { return values_; }

  VectorType value(Index i) const { return values_.row(i).transpose(); }
  void set_value(Index i, const VectorType& v) { values_.row(i) = v.transpose(); }

  /// Field with identical geometry, `m` components, all zero.
  GridField like(int m) const { return GridField(origin_, spacing_, dims_, m); }

  bool same_geometry(const GridField& other) const {
    if (dim() != other.dim() || dims_ != other.dims_) return false;
    const Scalar tol = Scalar(1e-12) * std::max(Scalar(1), std::abs(spacing_));
    if (std::abs(spacing_ - other.spacing_) > tol) return false;
    return (origin_ - other.origin_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  PointType origin_;
  Scalar spacing_ = Scalar(1);
  NodeIndex dims_{1, 1, 1};
  std::array<Index, kMaxDim> strides_{0, 0, 0};
  int m_ = 1;
  Values values_;
};

using Field = GridField<double>;

/// Grid with `resolution` nodes per axis on [lo, hi]^n.
template <typename Scalar = double>
GridField<Scalar> box_grid(int n, Scalar lo, Scalar hi, int resolution, int m = 1) {
  PointT<Scalar> origin = PointT<Scalar>::Constant(n, lo);
  const Scalar h = (hi - lo) / Scalar(resolution - 1);
  return GridField<Scalar>(origin, h, NodeIndex{resolution, resolution, resolution}, m);
}

/// Grid for fields on the unit ball: `resolution` nodes across [-1, 1] plus
/// two extra layers on every side, so that difference stencils at the unit
/// sphere stay centered.
template <typename Scalar = double>
GridField<Scalar> unit_ball_grid(int n, int resolution, int m = 1) {
  const Scalar h = Scalar(2) / Scalar(resolution - 1);
  PointT<Scalar> origin = PointT<Scalar>::Constant(n, Scalar(-1) - Scalar(2) * h);
  const int nodes = resolution + 4;
  return GridField<Scalar>(origin, h, NodeIndex{nodes, nodes, nodes}, m);
}

/// Samples fn(x) -> m-vector at every node of `geometry`.
template <typename Scalar, typename Fn>
GridField<Scalar> sample(const GridField<Scalar>& geometry, int m, Fn&& fn) {
  GridField<Scalar> out = geometry.like(m);
  for (Index i = 0; i < out.num_nodes(); ++i) {
    out.values().row(i) = VectorT<Scalar>(fn(out.position(i))).transpose();
  }
  return out;
}

/// Scalar node field fn(i) over the nodes of `geometry`.
template <typename Scalar, typename Fn>
GridField<Scalar> node_map(const GridField<Scalar>& geometry, Fn&& fn) {
  GridField<Scalar> out = geometry.like(1);
  for (Index i = 0; i < out.num_nodes(); ++i) out.values()(i, 0) = fn(i);
  return out;
}

/// max over nodes of |u(x)|.
template <typename Scalar>
Scalar max_norm(const GridField<Scalar>& u) {
  if (u.num_nodes() == 0) return Scalar(0);
  return u.values().rowwise().norm().maxCoeff();
}

template <typename Scalar>
bool all_finite(const GridField<Scalar>& u) {
  return u.values().allFinite();
}

namespace detail {

/// Interpolation weights along one axis: Lagrange through the six nodes
/// surrounding s (quintic), shifted inward near the ends; cubic on axes with
/// four or five nodes and linear below that. `s` is in grid units and is
/// clamped to the axis.
template <typename Scalar>
struct AxisStencil {
  static constexpr int kMaxPoints = 6;
  int start = 0;
  int count = 1;
  Scalar w[kMaxPoints] = {Scalar(1)};
};

template <typename Scalar>
AxisStencil<Scalar> axis_stencil(Scalar s, int nodes) {
  AxisStencil<Scalar> st;
  if (nodes <= 1) return st;
  s = std::clamp(s, Scalar(0), Scalar(nodes - 1));
  int cell = static_cast<int>(std::floor(s));
  cell = std::clamp(cell, 0, nodes - 2);
  const int p = nodes >= 6 ? 6 : (nodes >= 4 ? 4 : 2);
  st.start = std::clamp(cell - p / 2 + 1, 0, nodes - p);
  st.count = p;
  for (int k = 0; k < p; ++k) {
    Scalar w(1);
    const Scalar xk = Scalar(st.start + k);
    for (int j = 0; j < p; ++j) {
      if (j == k) continue;
      w *= (s - Scalar(st.start + j)) / (xk - Scalar(st.start + j));
    }
    st.w[k] = w;
  }
  return st;
}

/// Calls fn(node_index, weight) for the tensor interpolation stencil at x.
template <typename Scalar, typename Fn>
void for_each_stencil_node(const GridField<Scalar>& grid, const PointT<Scalar>& x, Fn&& fn) {
  const int n = grid.dim();
  AxisStencil<Scalar> st[kMaxDim];
  for (int d = 0; d < kMaxDim; ++d) {
    if (d < n) {
      st[d] = axis_stencil((x[d] - grid.origin()[d]) / grid.spacing(), grid.dims()[d]);
    }
  }
  for (int a = 0; a < st[0].count; ++a) {
    for (int b = 0; b < st[1].count; ++b) {
      for (int c = 0; c < st[2].count; ++c) {
        const Scalar w = st[0].w[a] * st[1].w[b] * st[2].w[c];
        const NodeIndex k{st[0].start + a, st[1].start + b, st[2].start + c};
        fn(grid.index(k), w);
      }
    }
  }
}

}  // namespace detail

/// Piecewise-quintic tensor interpolation of u at x. Points outside the grid
/// box are clamped onto it.
template <typename Scalar>
VectorT<Scalar> interpolate(const GridField<Scalar>& u, const PointT<Scalar>& x) {
  VectorT<Scalar> out = VectorT<Scalar>::Zero(u.components());
  detail::for_each_stencil_node(u, x, [&](Index i, Scalar w) {
    out += w * u.values().row(i).transpose();
  });
  return out;
}

/// Interpolation of one component.
template <typename Scalar>
Scalar interpolate_component(const GridField<Scalar>& u, const PointT<Scalar>& x, int comp) {
  Scalar out(0);
  detail::for_each_stencil_node(u, x, [&](Index i, Scalar w) { out += w * u.values()(i, comp); });
  return out;
}

/// Nodal Jacobian (m x n) by centered differences: fourth order where the
/// five-point stencil fits, second order next to the boundary, second-order
/// one-sided on the boundary itself.
template <typename Scalar>
JacobianT<Scalar> node_jacobian(const GridField<Scalar>& u, Index i) {
  const int n = u.dim();
  const int m = u.components();
  const NodeIndex k = u.node(i);
  const Scalar h = u.spacing();
  JacobianT<Scalar> jac(m, n);
  const auto& vals = u.values();
  for (int d = 0; d < n; ++d) {
    const Index s = u.stride(d);
    const int kd = k[d];
    const int nd = u.dims()[d];
    if (kd >= 2 && kd + 2 <= nd - 1) {
      jac.col(d) = (-vals.row(i + 2 * s) + Scalar(8) * vals.row(i + s) -
                    Scalar(8) * vals.row(i - s) + vals.row(i - 2 * s))
                       .transpose() /
                   (Scalar(12) * h);
    } else if (kd >= 1 && kd + 1 <= nd - 1) {
      jac.col(d) = (vals.row(i + s) - vals.row(i - s)).transpose() / (Scalar(2) * h);
    } else if (nd >= 3 && kd == 0) {
      jac.col(d) = (-Scalar(3) * vals.row(i) + Scalar(4) * vals.row(i + s) - vals.row(i + 2 * s))
                       .transpose() /
                   (Scalar(2) * h);
    } else if (nd >= 3) {
      jac.col(d) = (Scalar(3) * vals.row(i) - Scalar(4) * vals.row(i - s) + vals.row(i - 2 * s))
                       .transpose() /
                   (Scalar(2) * h);
    } else {
      jac.col(d) = (vals.row(kd == 0 ? i + s : i) - vals.row(kd == 0 ? i : i - s)).transpose() / h;
    }
  }
  return jac;
}

/// All nodal Jacobians packed as a field with m*n components (component
/// c*n + d holds d u_c / d x_d).
template <typename Scalar>
GridField<Scalar> jacobian_field(const GridField<Scalar>& u) {
  const int n = u.dim();
  const int m = u.components();
  GridField<Scalar> out = u.like(m * n);
  for (Index i = 0; i < u.num_nodes(); ++i) {
    const JacobianT<Scalar> jac = node_jacobian(u, i);
    for (int c = 0; c < m; ++c) {
      for (int d = 0; d < n; ++d) out.values()(i, c * n + d) = jac(c, d);
    }
  }
  return out;
}

/// Unpacks an interpolated row of a jacobian_field into an m x n matrix.
template <typename Scalar>
JacobianT<Scalar> unpack_jacobian(const VectorT<Scalar>& packed, int m, int n) {
  JacobianT<Scalar> jac(m, n);
  for (int c = 0; c < m; ++c) {
    for (int d = 0; d < n; ++d) jac(c, d) = packed[c * n + d];
  }
  return jac;
}

/// Point evaluation of a field and its gradient: tensor interpolation of the
/// nodal values and of the nodal fourth-order Jacobians.
template <typename Scalar>
class FieldSamplerT {
 public:
  explicit FieldSamplerT(const GridField<Scalar>& u) : u_(&u), jac_(jacobian_field(u)) {}

  const GridField<Scalar>& field() const { return *u_; }

  VectorT<Scalar> value(const PointT<Scalar>& x) const { return interpolate(*u_, x); }

  JacobianT<Scalar> jacobian(const PointT<Scalar>& x) const {
    return unpack_jacobian(interpolate(jac_, x), u_->components(), u_->dim());
  }

  /// Value and Jacobian sharing one stencil evaluation.
  void evaluate(const PointT<Scalar>& x, VectorT<Scalar>& value, JacobianT<Scalar>& jac) const {
    const int m = u_->components();
    const int n = u_->dim();
    value.setZero(m);
    VectorT<Scalar> packed = VectorT<Scalar>::Zero(m * n);
    detail::for_each_stencil_node(*u_, x, [&](Index i, Scalar w) {
      value += w * u_->values().row(i).transpose();
      packed += w * jac_.values().row(i).transpose();
    });
    jac = unpack_jacobian(packed, m, n);
  }

 private:
  const GridField<Scalar>* u_;
  GridField<Scalar> jac_;
};

using FieldSampler = FieldSamplerT<double>;

/// Second-order 5-point (n=2) / 7-point (n=3) Laplacian at an interior node.
template <typename Scalar>
VectorT<Scalar> node_laplacian(const GridField<Scalar>& u, Index i) {
  const int n = u.dim();
  const Scalar h2 = u.spacing() * u.spacing();
  VectorT<Scalar> out = Scalar(-2 * n) * u.value(i);
  for (int d = 0; d < n; ++d) {
    const Index s = u.stride(d);
    out += (u.values().row(i + s) + u.values().row(i - s)).transpose();
  }
  return out / h2;
}

}  // namespace fblab
