// Sparse logistic regression: psi(x) = (1/N) sum_i log(1 + exp(-b_i <a_i, x>))
// + mu ||x||_1 with rows a_i of A and labels b_i in {-1, +1}.
#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "trssn/prox.hpp"
#include "trssn/types.hpp"

namespace trssn {

namespace detail {

inline double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

inline double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace detail

// Largest eigenvalue of A^T A by power iteration (relative change <= 1e-6,
// at most 500 iterations), padded by a 1.01 safety factor.
inline double estimate_opnorm(const SpMat& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  std::mt19937_64 gen(0x243f6a8885a308d3ull);
  std::normal_distribution<double> dist;
  Vec v(A.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = dist(gen);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec w = A.transpose() * (A * v);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    double lam_new = v.dot(w);
    v = w / nw;
    if (std::abs(lam_new - lam) <= 1e-6 * std::abs(lam_new)) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  return 1.01 * lam;
}

// Conventional choice mu = 0.01 ||A^T b||_inf / N for datasets without a
// prescribed regularization weight.
inline double default_l1_weight(const SpMat& A, const Vec& b) {
  if (A.rows() == 0) throw std::invalid_argument("default_l1_weight: empty data");
  Vec atb = A.transpose() * b;
  return 0.01 * atb.lpNorm<Eigen::Infinity>() / double(A.rows());
}

struct LogisticProblem {
  SpMat A;
  Vec b;
  L1Prox reg;
  double L = 0.0;

  static LogisticProblem create(SpMat A, Vec b, double mu) {
    if (A.rows() != b.size())
      throw std::invalid_argument("logistic: sample/label count mismatch");
    for (Index i = 0; i < b.size(); ++i)
      if (b(i) != 1.0 && b(i) != -1.0)
        throw std::invalid_argument("logistic: labels must be -1 or +1");
    LogisticProblem p;
    p.A = std::move(A);
    p.b = std::move(b);
    p.reg.mu = mu;
    p.L = estimate_opnorm(p.A) / (4.0 * double(p.A.rows()));
    return p;
  }

  Index dim() const { return A.cols(); }
  double lipschitz() const { return L; }
  const L1Prox& prox() const { return reg; }

  double value(const Vec& x) const {
    Vec t = b.cwiseProduct(A * x);
    double s = 0.0;
    for (Index i = 0; i < t.size(); ++i) s += detail::softplus(-t(i));
    return s / double(t.size());
  }

  std::pair<double, Vec> value_grad(const Vec& x) const {
    Vec t = b.cwiseProduct(A * x);
    double s = 0.0;
    Vec w(t.size());
    for (Index i = 0; i < t.size(); ++i) {
      s += detail::softplus(-t(i));
      w(i) = b(i) * detail::sigmoid(-t(i));
    }
    double invn = 1.0 / double(t.size());
    return {s * invn, -invn * (A.transpose() * w)};
  }

  void hess_vp(const Vec& x, const Vec& v, Vec& out) const {
    Vec t = b.cwiseProduct(A * x);
    Vec av = A * v;
    for (Index i = 0; i < t.size(); ++i)
      av(i) *= detail::sigmoid(t(i)) * detail::sigmoid(-t(i));
    out = A.transpose() * av / double(t.size());
  }

  // psi(x_plus) - psi(x) in difference form: per sample
  // softplus(v+w) - softplus(v) = log1p(sigmoid(v) expm1(w)), which stays
  // accurate when the change is far below one ulp of the loss itself.
  double value_decrement(const Vec& x, const Vec& x_plus, const Vec& dx) const {
    Vec t = b.cwiseProduct(A * x);
    Vec d = b.cwiseProduct(A * dx);
    double s = 0.0;
    for (Index i = 0; i < t.size(); ++i) {
      double v = -t(i);
      double w = -d(i);
      double q = detail::sigmoid(v) * std::expm1(w);
      if (std::isfinite(q) && q > -1.0)
        s += std::log1p(q);
      else
        s += detail::softplus(v + w) - detail::softplus(v);
    }
    double dreg = reg.mu * (x_plus.cwiseAbs() - x.cwiseAbs()).sum();
    return s / double(t.size()) + dreg;
  }
};

}  // namespace trssn
