// Proximity operators for the built-in nonsmooth terms, their generalized
// derivatives, Moreau envelopes, and the normal-map / natural-residual
// calculus shared by the solver and the benchmarks.
//
// Throughout, the scaling matrix is a positive multiple of the identity,
// Lambda = lambda*I with lambda > 0. A prox oracle provides
//   phi(x)                 value of the nonsmooth term (+inf outside its domain)
//   prox(z, lambda)        prox_{phi}^{lambda I}(z)
//   gderiv(z, lambda)      diagonal (0/1 entries) of a generalized derivative
//                          D(z) of the prox at z
//   preimage(x0, lambda)   per-coordinate interval [lo_i, hi_i] such that
//                          prox(z) = x0 exactly when lo <= z <= hi
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "trssn/types.hpp"

namespace trssn {

inline double soft_threshold(double z, double t) {
  double m = std::abs(z) - t;
  return m > 0 ? (z > 0 ? m : -m) : 0.0;
}

inline Vec prox_l1(const Vec& z, double mu, double lambda) {
  double t = mu / lambda;
  return z.unaryExpr([t](double v) { return soft_threshold(v, t); });
}

// d_i = 0 iff |z_i| <= mu/lambda (ties resolve to the flat branch).
inline Vec gderiv_l1(const Vec& z, double mu, double lambda) {
  double t = mu / lambda;
  return z.unaryExpr([t](double v) { return std::abs(v) <= t ? 0.0 : 1.0; });
}

inline Vec prox_box_l1(const Vec& z, double mu, double lambda) {
  double t = mu / lambda;
  return z.unaryExpr([t](double v) {
    return std::min(1.0, std::max(0.0, soft_threshold(v, t)));
  });
}

// d_i = 0 iff z_i <= mu/lambda or z_i >= mu/lambda + 1.
inline Vec gderiv_box_l1(const Vec& z, double mu, double lambda) {
  double t = mu / lambda;
  return z.unaryExpr(
      [t](double v) { return (v <= t || v >= t + 1.0) ? 0.0 : 1.0; });
}

// phi = mu*||x||_1
struct L1Prox {
  double mu = 0.0;

  double phi(const Vec& x) const { return mu * x.lpNorm<1>(); }
  Vec prox(const Vec& z, double lambda) const { return prox_l1(z, mu, lambda); }
  Vec gderiv(const Vec& z, double lambda) const {
    return gderiv_l1(z, mu, lambda);
  }
  void preimage(const Vec& x0, double lambda, Vec& lo, Vec& hi) const {
    double t = mu / lambda;
    lo.resize(x0.size());
    hi.resize(x0.size());
    for (Index i = 0; i < x0.size(); ++i) {
      if (x0[i] > 0) {
        lo[i] = hi[i] = x0[i] + t;
      } else if (x0[i] < 0) {
        lo[i] = hi[i] = x0[i] - t;
      } else {
        lo[i] = -t;
        hi[i] = t;
      }
    }
  }
};

// phi = mu*||x||_1 + indicator of [0,1]^n
struct BoxL1Prox {
  double mu = 0.0;

  double phi(const Vec& x) const {
    for (Index i = 0; i < x.size(); ++i)
      if (x[i] < 0.0 || x[i] > 1.0)
        return std::numeric_limits<double>::infinity();
    return mu * x.lpNorm<1>();
  }
  Vec prox(const Vec& z, double lambda) const {
    return prox_box_l1(z, mu, lambda);
  }
  Vec gderiv(const Vec& z, double lambda) const {
    return gderiv_box_l1(z, mu, lambda);
  }
  void preimage(const Vec& x0, double lambda, Vec& lo, Vec& hi) const {
    double t = mu / lambda;
    double inf = std::numeric_limits<double>::infinity();
    lo.resize(x0.size());
    hi.resize(x0.size());
    for (Index i = 0; i < x0.size(); ++i) {
      if (x0[i] <= 0.0) {
        lo[i] = -inf;
        hi[i] = t;
      } else if (x0[i] >= 1.0) {
        lo[i] = 1.0 + t;
        hi[i] = inf;
      } else {
        lo[i] = hi[i] = x0[i] + t;
      }
    }
  }
};

template <class P>
concept ProxOracle = requires(const P p, const Vec& v, double lambda) {
  { p.phi(v) } -> std::convertible_to<double>;
  { p.prox(v, lambda) } -> std::convertible_to<Vec>;
  { p.gderiv(v, lambda) } -> std::convertible_to<Vec>;
};

template <class P>
concept SeparableProxOracle =
    ProxOracle<P> && requires(const P p, const Vec& x, double lambda, Vec& lo,
                              Vec& hi) { p.preimage(x, lambda, lo, hi); };

// F_nor(z) = grad f(prox z) + lambda*(z - prox z), the natural residual
// F_nat(prox z) = prox z - prox(z - F_nor(z)/lambda), and the criticality
// measure chi(z) = ||F_nor(z)|| / sqrt(lambda).
struct Residuals {
  Vec f_nor;
  Vec f_nat;
  double chi = 0.0;
};

template <ProxOracle P>
Residuals residuals(const Vec& z, const Vec& x, const Vec& grad, const P& p,
                    double lambda) {
  Residuals r;
  r.f_nor = grad + lambda * (z - x);
  r.f_nat = x - p.prox(z - r.f_nor / lambda, lambda);
  r.chi = r.f_nor.norm() / std::sqrt(lambda);
  return r;
}

template <ProxOracle P, class GradFn>
Residuals normal_map(const Vec& z, GradFn&& grad_f, const P& p, double lambda) {
  Vec x = p.prox(z, lambda);
  Vec g = grad_f(x);
  return residuals(z, x, g, p, lambda);
}

// z0 = argmin_{prox(z) = x0} ||F_nor(z)||, i.e. the projection of
// x0 - grad0/lambda onto the preimage box of x0.
template <SeparableProxOracle P>
Vec initial_z(const Vec& x0, const Vec& grad0, const P& p, double lambda) {
  Vec lo, hi;
  p.preimage(x0, lambda, lo, hi);
  Vec target = x0 - grad0 / lambda;
  Vec z(x0.size());
  for (Index i = 0; i < x0.size(); ++i)
    z[i] = std::min(hi[i], std::max(lo[i], target[i]));
  return z;
}

// Moreau envelope env(z) = min_y phi(y) + (lambda/2)||z - y||^2 and its
// gradient lambda*(z - prox z).
template <ProxOracle P>
double envelope_value(const Vec& z, const P& p, double lambda) {
  Vec x = p.prox(z, lambda);
  return p.phi(x) + 0.5 * lambda * (z - x).squaredNorm();
}

template <ProxOracle P>
Vec envelope_grad(const Vec& z, const P& p, double lambda) {
  return lambda * (z - p.prox(z, lambda));
}

}  // namespace trssn
