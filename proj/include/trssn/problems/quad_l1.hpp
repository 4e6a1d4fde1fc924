// Synthetic quadratic plus l1 test problem
//   min_x 0.5 x'Qx - b'x + mu ||x||_1,  Q SPD.
// With diagonal Q the minimizer is available in closed form, which makes the
// instance suitable as ground truth for solver tests.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>

#include "trssn/prox.hpp"
#include "trssn/types.hpp"

namespace trssn {

struct SyntheticQuadL1 {
  Mat Q;
  Vec b;
  L1Prox reg;
  double L = 0.0;

  static SyntheticQuadL1 create(Mat Q, Vec b, double mu) {
    SyntheticQuadL1 p;
    p.Q = std::move(Q);
    p.b = std::move(b);
    p.reg.mu = mu;
    Eigen::SelfAdjointEigenSolver<Mat> es(p.Q);
    p.L = es.eigenvalues().maxCoeff();
    return p;
  }

  Index dim() const { return b.size(); }
  double lipschitz() const { return L; }
  const L1Prox& prox() const { return reg; }

  double value(const Vec& x) const { return 0.5 * x.dot(Q * x) - b.dot(x); }

  std::pair<double, Vec> value_grad(const Vec& x) const {
    Vec Qx = Q * x;
    return {0.5 * x.dot(Qx) - b.dot(x), Qx - b};
  }

  void hess_vp(const Vec&, const Vec& v, Vec& out) const { out = Q * v; }

  // psi(x_plus) - psi(x) without forming either psi: every term is of the
  // order of the step, so sub-ulp-of-psi improvements stay resolvable.
  double value_decrement(const Vec& x, const Vec& x_plus, const Vec& dx) const {
    double dquad = dx.dot(Q * x - b) + 0.5 * dx.dot(Q * dx);
    double dreg = reg.mu * (x_plus.cwiseAbs() - x.cwiseAbs()).sum();
    return dquad + dreg;
  }

  // x*_i = shrink(b_i/Q_ii, mu/Q_ii); diagonal Q only.
  Vec solution() const {
    Index n = b.size();
    Mat offdiag = Q - Mat(Q.diagonal().asDiagonal());
    if (offdiag.cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument("closed-form solution requires diagonal Q");
    Vec x(n);
    for (Index i = 0; i < n; ++i)
      x(i) = soft_threshold(b(i) / Q(i, i), reg.mu / Q(i, i));
    return x;
  }
};

inline SyntheticQuadL1 make_random_quad_l1(std::uint64_t seed, Index n, double mu,
                                           bool diagonal = true) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ud(0.5, 3.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec d(n), b(n);
  for (Index i = 0; i < n; ++i) d(i) = ud(gen);
  for (Index i = 0; i < n; ++i) b(i) = 2.0 * nd(gen);
  Mat Q = d.asDiagonal();
  if (!diagonal) {
    Mat G(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) G(i, j) = nd(gen);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat V = qr.householderQ();
    Q = V * d.asDiagonal() * V.transpose();
    Q = 0.5 * (Q + Q.transpose());
  }
  return SyntheticQuadL1::create(std::move(Q), std::move(b), mu);
}

}  // namespace trssn
