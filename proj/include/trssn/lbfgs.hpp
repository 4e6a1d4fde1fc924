// Limited-memory BFGS in compact form together with the update skipping rule,
// plus the exact-Hessian curvature model used where second derivatives are
// available. Both models expose the same surface to the solver:
//   apply(v)            -> B*v
//   set_point(x)        evaluation point (exact model only)
//   on_accept(d, y, k)  curvature information from an accepted step
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "trssn/types.hpp"

namespace trssn {

// A pair (d, y) is admitted only when d != 0 and d'y >= min{xi, xi_k*||d||^2};
// xi_k = 1/ln(k+2) decays slowly enough that xi_k*ln(k) stays bounded away
// from zero.
struct SkipPolicy {
  double xi = 1e-8;
  double xi_k(long k) const { return 1.0 / std::log(double(k) + 2.0); }
  bool admits(const Vec& d, const Vec& y, long k) const {
    double dn2 = d.squaredNorm();
    if (dn2 == 0.0) return false;
    return d.dot(y) >= std::min(xi, xi_k(k) * dn2);
  }
};

class CompactLbfgs {
 public:
  CompactLbfgs(Index n, int memory) : n_(n), m_(memory) {}

  Index dim() const { return n_; }
  int memory() const { return m_; }
  int pairs() const { return int(S_.size()); }
  double gamma() const { return gamma_; }
  SkipPolicy& skip_policy() { return skip_; }
  const SkipPolicy& skip_policy() const { return skip_; }

  // Admit or skip the pair; returns true when the model changed.
  bool update(const Vec& d, const Vec& y, long k) {
    if (!skip_.admits(d, y, k)) return false;
    S_.push_back(d);
    Y_.push_back(y);
    if (int(S_.size()) > m_) {
      S_.erase(S_.begin());
      Y_.erase(Y_.begin());
    }
    gamma_ = y.squaredNorm() / d.dot(y);
    rebuild();
    return true;
  }

  // B*v = gamma*v - [S Y] * W^{-1} * [S'v; Y'v]
  Vec apply(const Vec& v) const {
    if (!factored_) return gamma_ * v;
    Vec t = SY_.transpose() * v;
    Vec w = lu_.solve(t);
    return gamma_ * v - SY_ * w;
  }

  // solver hooks
  void set_point(const Vec&) {}
  void on_accept(const Vec& d, const Vec& y, long k) { update(d, y, k); }

 private:
  // Assemble the 2j x 2j middle matrix W = [S'S/g  L/g; L'/g  -D] from the
  // stored pairs and factorize it. A numerically singular W sheds the oldest
  // pair and retries; with no pairs left, apply() degrades to gamma*I.
  void rebuild() {
    factored_ = false;
    while (!S_.empty()) {
      int j = int(S_.size());
      Mat S(n_, j), Y(n_, j);
      for (int c = 0; c < j; ++c) {
        S.col(c) = S_[c];
        Y.col(c) = Y_[c];
      }
      Mat STY = S.transpose() * Y;
      Mat W(2 * j, 2 * j);
      W.topLeftCorner(j, j) = (S.transpose() * S) / gamma_;
      Mat L = STY.template triangularView<Eigen::StrictlyLower>();
      W.topRightCorner(j, j) = L / gamma_;
      W.bottomLeftCorner(j, j) = L.transpose() / gamma_;
      W.bottomRightCorner(j, j) = -Mat(STY.diagonal().asDiagonal());
      lu_.compute(W);
      double maxp = lu_.maxPivot();
      double minp = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
      if (std::isfinite(maxp) && maxp > 0.0 && minp > 1e-14 * maxp) {
        SY_.resize(n_, 2 * j);
        SY_.leftCols(j) = S;
        SY_.rightCols(j) = Y;
        factored_ = true;
        return;
      }
      S_.erase(S_.begin());
      Y_.erase(Y_.begin());
    }
  }

  Index n_;
  int m_;
  SkipPolicy skip_;
  std::vector<Vec> S_, Y_;  // oldest first
  double gamma_ = 1.0;
  Mat SY_;
  Eigen::FullPivLU<Mat> lu_;
  bool factored_ = false;
};

template <class P>
concept HasHessian = requires(const P p, const Vec& x, const Vec& v, Vec& out) {
  p.hess_vp(x, v, out);
};

template <HasHessian P>
Vec exact_hessian_vp(const P& p, const Vec& x, const Vec& v) {
  Vec out;
  p.hess_vp(x, v, out);
  return out;
}

template <HasHessian P>
struct ExactHessianModel {
  const P* problem = nullptr;
  Vec x;

  explicit ExactHessianModel(const P& prob) : problem(&prob) {}

  Vec apply(const Vec& v) const {
    Vec out;
    problem->hess_vp(x, v, out);
    return out;
  }
  void set_point(const Vec& xk) { x = xk; }
  void on_accept(const Vec&, const Vec&, long) {}
};

}  // namespace trssn
