// Linear-diffusion image compression: for an image u and mask weights c in
// [0,1]^N, the reconstruction solves A(c) x = diag(c) u with
// A(c) = diag(c) + (diag(c) - I) Lap, and
// psi(c) = 1/2 ||x(c) - u||^2 + mu ||c||_1 (+ box indicator).
#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trssn/prox.hpp"
#include "trssn/types.hpp"

namespace trssn {

// 5-point Laplacian on an h x w grid with homogeneous Neumann boundary:
// Lap_ii = -(number of neighbours), Lap_ij = 1 for grid neighbours, so
// Lap * const = 0 and A(all-ones) = I exactly.
inline SpMat build_laplacian(int h, int w) {
  if (h < 1 || w < 1) throw std::invalid_argument("laplacian: empty grid");
  std::vector<Eigen::Triplet<double>> trips;
  auto id = [w](int r, int c) { return r * w + c; };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      int deg = 0;
      auto link = [&](int rr, int cc) {
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) return;
        trips.emplace_back(id(r, c), id(rr, cc), 1.0);
        ++deg;
      };
      link(r - 1, c);
      link(r + 1, c);
      link(r, c - 1);
      link(r, c + 1);
      trips.emplace_back(id(r, c), id(r, c), double(-deg));
    }
  SpMat Lap(h * w, h * w);
  Lap.setFromTriplets(trips.begin(), trips.end());
  return Lap;
}

struct CompressionProblem {
  Vec u;
  int h = 0, w = 0;
  SpMat Lap;
  SpMat IpL;  // I + Lap
  BoxL1Prox reg;
  double L0 = 0.1;  // starting estimate; the driver refreshes it adaptively

  static CompressionProblem create(Vec u, int h, int w, double mu) {
    if (u.size() != Index(h) * Index(w))
      throw std::invalid_argument("compression: image size mismatch");
    CompressionProblem p;
    p.u = std::move(u);
    p.h = h;
    p.w = w;
    p.Lap = build_laplacian(h, w);
    SpMat eye(p.Lap.rows(), p.Lap.cols());
    eye.setIdentity();
    p.IpL = eye + p.Lap;
    p.reg.mu = mu;
    return p;
  }

  Index dim() const { return u.size(); }
  double lipschitz() const { return L0; }
  const BoxL1Prox& prox() const { return reg; }

  SpMat system_matrix(const Vec& c) const {
    return SpMat(c.asDiagonal() * IpL) - Lap;
  }

  double value(const Vec& c) const {
    Vec x = reconstruction(c);
    return 0.5 * (x - u).squaredNorm();
  }

  std::pair<double, Vec> value_grad(const Vec& c) const {
    Vec x = reconstruction(c);
    Vec r = x - u;
    Vec y = solve_adjoint(r);
    Vec grad = (u - x - Lap * x).cwiseProduct(y);
    return {0.5 * r.squaredNorm(), std::move(grad)};
  }

  Vec reconstruction(const Vec& c) const {
    refresh(c);
    return solve(c.cwiseProduct(u));
  }

 private:
  struct Cache {
    Vec c;
    Eigen::SparseLU<SpMat> lu;
    SpMat A, At;
    bool direct = false;
  };
  mutable std::unique_ptr<Cache> cache_;

  void refresh(const Vec& c) const {
    double cmax = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
    if (cmax < 1e-12)
      throw std::invalid_argument("compression: mask numerically zero (||c||_inf = " +
                                  std::to_string(cmax) + ")");
    if (cache_ && cache_->c.size() == c.size() && cache_->c == c) return;
    auto fresh = std::make_unique<Cache>();
    fresh->A = system_matrix(c);
    fresh->lu.compute(fresh->A);
    fresh->direct = fresh->lu.info() == Eigen::Success;
    if (!fresh->direct) fresh->At = SpMat(fresh->A.transpose());
    fresh->c = c;
    cache_ = std::move(fresh);
  }

  Vec solve(const Vec& rhs) const {
    Vec x;
    if (cache_->direct) {
      x = cache_->lu.solve(rhs);
    } else {
      Eigen::BiCGSTAB<SpMat> it(cache_->A);
      it.setTolerance(1e-10);
      x = it.solve(rhs);
      if (it.info() != Eigen::Success)
        throw std::runtime_error("compression: linear solve failed");
    }
    if (!x.allFinite()) throw std::runtime_error("compression: linear solve failed");
    return x;
  }

  Vec solve_adjoint(const Vec& rhs) const {
    Vec x;
    if (cache_->direct) {
      x = cache_->lu.adjoint().solve(rhs);
    } else {
      Eigen::BiCGSTAB<SpMat> it(cache_->At);
      it.setTolerance(1e-10);
      x = it.solve(rhs);
      if (it.info() != Eigen::Success)
        throw std::runtime_error("compression: adjoint solve failed");
    }
    if (!x.allFinite()) throw std::runtime_error("compression: adjoint solve failed");
    return x;
  }
};

}  // namespace trssn
