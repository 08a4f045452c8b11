#pragma once

// Multi-channel C^2 cubic B-spline quasi-interpolant on the lattice.
// Coefficients are c = Q_x Q_y f with Q f_k = (-f_{k-1} + 8 f_k - f_{k+1}) / 6,
// which reproduces cubics and is fourth-order accurate.

#include <array>
#include <cmath>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/lattice.hpp"

namespace geoflow {

template <int C>
class SplineTable {
 public:
  SplineTable() = default;

  /// channels[c][node] must be valid on every node with band <= 3.
  SplineTable(const Lattice& lattice, const std::array<const std::vector<double>*, C>& channels)
      : n_(lattice.per_side()), c0_(lattice.center_index()), h_(lattice.spacing()) {
    coef_.assign(static_cast<std::size_t>(n_) * n_ * C, 0.0);
    std::vector<double> tmp(static_cast<std::size_t>(n_) * n_ * C, 0.0);
    auto ok = [&](int idx, int max_band) {
      const int b = lattice.band(idx);
      return b >= 0 && b <= max_band;
    };
    // Pass along x on nodes whose row neighbours are known, then along y.
    for (int j = 0; j < n_; ++j) {
      for (int i = 1; i + 1 < n_; ++i) {
        const int idx = lattice.index(i, j);
        if (!ok(idx, 3) || !ok(idx - 1, 3) || !ok(idx + 1, 3)) continue;
        for (int c = 0; c < C; ++c) {
          const auto& f = *channels[c];
          tmp[idx * C + c] = (-f[idx - 1] + 8.0 * f[idx] - f[idx + 1]) / 6.0;
        }
      }
    }
    for (int j = 1; j + 1 < n_; ++j) {
      for (int i = 0; i < n_; ++i) {
        const int idx = lattice.index(i, j);
        if (!ok(idx, 2)) continue;
        const int dn = idx - n_, up = idx + n_;
        for (int c = 0; c < C; ++c) {
          coef_[idx * C + c] = (-tmp[dn * C + c] + 8.0 * tmp[idx * C + c] - tmp[up * C + c]) / 6.0;
        }
      }
    }
  }

  bool empty() const { return coef_.empty(); }

  /// Values of all channels at z. z should lie in the closed octagon.
  std::array<double, C> value(Complex z) const {
    double wx[4], wy[4];
    int i0, j0;
    locate(z.real(), i0, wx, nullptr);
    locate(z.imag(), j0, wy, nullptr);
    std::array<double, C> out{};
    for (int b = 0; b < 4; ++b) {
      const double* row = &coef_[(static_cast<std::size_t>(j0 + b) * n_ + i0) * C];
      for (int a = 0; a < 4; ++a) {
        const double w = wx[a] * wy[b];
        for (int c = 0; c < C; ++c) out[c] += w * row[a * C + c];
      }
    }
    return out;
  }

  /// Value and Euclidean gradient of channel `ch`.
  void value_gradient(Complex z, int ch, double& f, double& fx, double& fy) const {
    double wx[4], wy[4], dx[4], dy[4];
    int i0, j0;
    locate(z.real(), i0, wx, dx);
    locate(z.imag(), j0, wy, dy);
    f = fx = fy = 0.0;
    for (int b = 0; b < 4; ++b) {
      const double* row = &coef_[(static_cast<std::size_t>(j0 + b) * n_ + i0) * C];
      for (int a = 0; a < 4; ++a) {
        const double v = row[a * C + ch];
        f += wx[a] * wy[b] * v;
        fx += dx[a] * wy[b] * v;
        fy += wx[a] * dy[b] * v;
      }
    }
  }

 private:
  // First of the four contributing nodes, and the basis weights.
  void locate(double x, int& first, double* w, double* dw) const {
    const double t = x / h_ + c0_;
    int k = static_cast<int>(std::floor(t));
    if (k < 1 || k + 2 >= n_) throw OutOfRange("spline evaluation outside the lattice");
    const double u = t - k;
    const double u2 = u * u, u3 = u2 * u;
    const double v = 1.0 - u;
    w[0] = v * v * v / 6.0;
    w[1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
    w[2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
    w[3] = u3 / 6.0;
    if (dw) {
      dw[0] = -0.5 * v * v / h_;
      dw[1] = (1.5 * u2 - 2.0 * u) / h_;
      dw[2] = (-1.5 * u2 + u + 0.5) / h_;
      dw[3] = 0.5 * u2 / h_;
    }
    first = k - 1;
  }

  int n_ = 0;
  int c0_ = 0;
  double h_ = 0.0;
  std::vector<double> coef_;
};

}  // namespace geoflow
