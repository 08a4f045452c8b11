#include "geoflow/lattice.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "geoflow/errors.hpp"

namespace geoflow {

namespace {

double area_density(Complex z) {
  const double s = 1.0 - std::norm(z);
  return 4.0 / (s * s);
}

// Positive inside the octagon; a lower bound for the distance to the walls
// from inside, and for the distance to the octagon from outside.
double signed_wall_distance(const SurfaceAtlas& atlas, Complex z) {
  double s = 1e300;
  for (int k = 0; k < 8; ++k) s = std::min(s, std::abs(z - atlas.wall_centers[k]) - atlas.wall_radii[k]);
  return s;
}

constexpr std::array<double, 4> kGaussX{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                         0.8611363115940526};
constexpr std::array<double, 4> kGaussW{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                         0.3478548451374538};
constexpr int kSubsamples = 64;

}  // namespace

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

Lattice::Lattice(SurfaceAtlas atlas, double grid_spacing, double margin)
    : atlas_(std::move(atlas)), h_(grid_spacing), margin_(margin) {
  if (!(h_ > 0.0) || h_ > 0.1) throw ConfigError("grid_spacing must lie in (0, 0.1]");
  if (!(margin_ > 0.0)) throw ConfigError("margin must be positive");
  c_ = static_cast<int>(std::ceil((atlas_.vertex_radius + margin_) / h_));
  n_ = 2 * c_ + 1;
  if (c_ * h_ < atlas_.vertex_radius + (kGhostBand + 1) * h_) {
    throw ConfigError("margin too small for the ghost band at this grid spacing");
  }
  classify();
  build_weights();
  build_stencils();
}

void Lattice::classify() {
  kind_.assign(size(), NodeKind::Unused);
  band_.assign(size(), -1);
  for (int idx = 0; idx < static_cast<int>(size()); ++idx) {
    const Complex z = node(idx);
    if (std::abs(z) < atlas_.vertex_radius + h_ && atlas_.contains(z)) {
      kind_[idx] = NodeKind::Interior;
      band_[idx] = 0;
      interior_.push_back(idx);
    }
  }
  for (int idx : interior_) {
    const int i = col(idx), j = row(idx);
    for (int dj = -kGhostBand; dj <= kGhostBand; ++dj) {
      for (int di = -kGhostBand; di <= kGhostBand; ++di) {
        const int ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= n_ || jj >= n_) continue;
        const int k = index(ii, jj);
        if (kind_[k] == NodeKind::Interior) continue;
        const int b = std::max(std::abs(di), std::abs(dj));
        if (band_[k] < 0 || b < band_[k]) band_[k] = static_cast<std::int8_t>(b);
      }
    }
  }
  ghosts_by_band_.assign(kGhostBand + 1, {});
  for (int b = 1; b <= kGhostBand; ++b) {
    for (int idx = 0; idx < static_cast<int>(size()); ++idx) {
      if (band_[idx] == b) {
        if (std::abs(node(idx)) >= 1.0 - 1e-9) throw ConfigError("ghost band reaches the unit circle");
        kind_[idx] = NodeKind::Ghost;
        ghosts_by_band_[b].push_back(idx);
      }
    }
  }
  // ghosts_by_band_[b] holds every ghost with band <= b.
  for (int b = 2; b <= kGhostBand; ++b) {
    auto merged = ghosts_by_band_[b - 1];
    merged.insert(merged.end(), ghosts_by_band_[b].begin(), ghosts_by_band_[b].end());
    ghosts_by_band_[b] = std::move(merged);
  }
}

void Lattice::build_weights() {
  weights_.assign(size(), 0.0);
  const double half = 0.5 * h_;
  const double reach = half * std::sqrt(2.0) + 1e-12;
  for (int idx = 0; idx < static_cast<int>(size()); ++idx) {
    if (band_[idx] < 0 || band_[idx] > 2) continue;
    const Complex z = node(idx);
    const double s = signed_wall_distance(atlas_, z);
    if (s < -reach) continue;
    double w = 0.0;
    if (s > reach) {
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          const Complex p = z + Complex(half * kGaussX[a], half * kGaussX[b]);
          w += kGaussW[a] * kGaussW[b] * area_density(p);
        }
      }
      w *= half * half;
    } else {
      const double sub = h_ / kSubsamples;
      for (int a = 0; a < kSubsamples; ++a) {
        for (int b = 0; b < kSubsamples; ++b) {
          const Complex p = z + Complex(-half + (a + 0.5) * sub, -half + (b + 0.5) * sub);
          if (atlas_.contains(p, 0.0)) w += area_density(p);
        }
      }
      w *= sub * sub;
    }
    if (w > 0.0) {
      if (band_[idx] < 0) throw ConstructionError("octagon cell without a filled node");
      weights_[idx] = w;
      weighted_.push_back(idx);
    }
  }
  std::vector<double> ws;
  ws.reserve(weighted_.size());
  for (int idx : weighted_) ws.push_back(weights_[idx]);
  reference_area_ = pairwise_sum(ws);
}

void Lattice::build_stencils() {
  struct Sample {
    int src;
    Complex p;
  };
  const auto& tiles = atlas_.tile_neighbors;
  std::vector<MobiusMap> tile_inv;
  for (const auto& t : tiles) tile_inv.push_back(t.inverse());

  for (int target : ghosts_by_band_[kGhostBand]) {
    const Complex w = reduce_complex(atlas_, node(target)).point.value();
    bool done = false;
    for (double radius_cells : {2.5, 3.5, 4.5}) {
      const double rs = radius_cells * h_;
      std::vector<Sample> samples;
      for (std::size_t t = 0; t < tiles.size(); ++t) {
        const Complex q = tile_inv[t].apply(w);
        const double scale = std::abs(tile_inv[t].derivative(w));
        const double rq = 1.5 * rs * scale + h_;
        if (atlas_.wall_violation(q) > rq) continue;
        const int i0 = std::max(0, static_cast<int>(std::floor((q.real() - rq) / h_)) + c_);
        const int i1 = std::min(n_ - 1, static_cast<int>(std::ceil((q.real() + rq) / h_)) + c_);
        const int j0 = std::max(0, static_cast<int>(std::floor((q.imag() - rq) / h_)) + c_);
        const int j1 = std::min(n_ - 1, static_cast<int>(std::ceil((q.imag() + rq) / h_)) + c_);
        for (int j = j0; j <= j1; ++j) {
          for (int i = i0; i <= i1; ++i) {
            const int src = index(i, j);
            if (kind_[src] != NodeKind::Interior) continue;
            const Complex p = tiles[t].apply(node(src));
            if (std::abs(p - w) >= rs) continue;
            bool dup = false;
            for (const auto& s : samples) {
              if (std::abs(s.p - p) < 1e-11) {
                dup = true;
                break;
              }
            }
            if (!dup) samples.push_back({src, p});
          }
        }
      }
      if (samples.size() < 14) continue;

      const int m = static_cast<int>(samples.size());
      Eigen::MatrixXd a(m, 10);
      Eigen::VectorXd om(m);
      for (int k = 0; k < m; ++k) {
        const Complex d = (samples[k].p - w) / h_;
        const double x = d.real(), y = d.imag();
        a.row(k) << 1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y;
        const double r = std::abs(samples[k].p - w) / rs;
        om(k) = (1.0 - r * r) * (1.0 - r * r) + 1e-3;
      }
      const Eigen::MatrixXd normal = a.transpose() * om.asDiagonal() * a;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(normal, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      if (sv(sv.size() - 1) < 1e-8 * sv(0)) continue;
      Eigen::VectorXd e0 = Eigen::VectorXd::Zero(10);
      e0(0) = 1.0;
      const Eigen::VectorXd y = svd.solve(e0);
      const Eigen::VectorXd coef = om.asDiagonal() * (a * y);

      Stencil st{target, static_cast<int>(stencil_src_.size()), 0};
      for (int k = 0; k < m; ++k) {
        stencil_src_.push_back(samples[k].src);
        stencil_coef_.push_back(coef(k));
      }
      st.end = static_cast<int>(stencil_src_.size());
      stencils_.push_back(st);
      done = true;
      break;
    }
    if (!done) {
      throw ConstructionError("could not build a ghost stencil at node " + std::to_string(target));
    }
  }
}

void Lattice::fill_ghosts(std::vector<double>& values, int max_band) const {
  if (values.size() != size()) throw DomainError("lattice value array has the wrong size");
  max_band = std::clamp(max_band, 1, kGhostBand);
  const std::size_t count = ghosts_by_band_[max_band].size();
  for (std::size_t g = 0; g < count; ++g) {
    const Stencil& st = stencils_[g];
    double v = 0.0;
    for (int k = st.begin; k < st.end; ++k) v += stencil_coef_[k] * values[stencil_src_[k]];
    values[st.target] = v;
  }
}

double Lattice::weighted_sum(const std::vector<double>& f) const {
  std::vector<double> terms(weighted_.size());
  for (std::size_t k = 0; k < weighted_.size(); ++k) terms[k] = weights_[weighted_[k]] * f[weighted_[k]];
  return pairwise_sum(terms);
}

std::shared_ptr<const Lattice> make_lattice(double grid_spacing, double margin) {
  return std::make_shared<const Lattice>(bolza_atlas(), grid_spacing, margin);
}

}  // namespace geoflow
