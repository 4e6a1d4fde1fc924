// First-order comparison methods: FISTA with constant step 1/L, and a
// BB-step proximal gradient with a Zhang-Hager nonmonotone line search
// (SpaRSA style). Both report the fixed-point residual of the 1/L
// proximal-gradient map as their stationarity measure.
#pragma once

#include <chrono>
#include <cmath>

#include "trssn/driver.hpp"
#include "trssn/prox.hpp"
#include "trssn/types.hpp"

namespace trssn {

struct BaselineParams {
  double tol = 1e-10;
  long max_iters = 1000;
  double time_budget = 0.0;  // seconds; 0 disables the budget
};

struct BaselineStepInfo {
  double psi = 0.0;
  double residual = 0.0;  // fixed-point residual at the point psi refers to
  double step_norm = 0.0;
  double alpha = 0.0;
  int halvings = 0;
};

struct FistaState {
  Vec x, y;
  double t = 1.0;
  double L = 0.0;
};

template <class Problem>
void fista_init(FistaState& st, const Problem& prob, const Vec& x0) {
  st.x = x0;
  st.y = x0;
  st.t = 1.0;
  st.L = prob.lipschitz();
}

template <class Problem>
BaselineStepInfo fista_step(FistaState& st, const Problem& prob) {
  const auto& pr = prob.prox();
  double L = st.L;
  Vec g = prob.value_grad(st.y).second;
  Vec x_new = pr.prox(st.y - g / L, L);
  BaselineStepInfo info;
  info.residual = (x_new - st.y).norm();
  info.step_norm = (x_new - st.x).norm();
  info.alpha = 1.0 / L;
  double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * st.t * st.t));
  st.y = x_new + ((st.t - 1.0) / t_new) * (x_new - st.x);
  st.x = std::move(x_new);
  st.t = t_new;
  info.psi = prob.value(st.x) + pr.phi(st.x);
  return info;
}

struct SparsaState {
  Vec x, grad;
  double psi = 0.0;   // objective at x
  double alpha = 0.0; // BB trial step for the next iteration
  double C = 0.0, Q = 1.0;  // Zhang-Hager reference pair
};

template <class Problem>
void sparsa_init(SparsaState& st, const Problem& prob, const Vec& x0) {
  st.x = x0;
  auto fg = prob.value_grad(x0);
  st.grad = std::move(fg.second);
  st.psi = fg.first + prob.prox().phi(x0);
  st.alpha = 1.0 / prob.lipschitz();
  st.C = st.psi;
  st.Q = 1.0;
}

// One BB proximal-gradient step: candidate prox(x - alpha grad) with the l1
// threshold scaled by alpha, accepted under the Zhang-Hager test
// psi+ <= C - sigma/(2 alpha) ||x+ - x||^2, halving alpha on failure.
template <class Problem>
BaselineStepInfo sparsa_step(SparsaState& st, const Problem& prob) {
  constexpr double eta = 0.85, sigma = 1e-4;
  constexpr double alpha_min = 1e-30, alpha_max = 1e30;
  constexpr int max_halvings = 50;

  const auto& pr = prob.prox();
  double L = prob.lipschitz();
  BaselineStepInfo info;
  double a = st.alpha;
  Vec x_new;
  double psi_new = 0.0;
  bool accepted = false;
  for (int hv = 0; hv <= max_halvings; ++hv) {
    x_new = pr.prox(st.x - a * st.grad, 1.0 / a);
    psi_new = prob.value(x_new) + pr.phi(x_new);
    if (psi_new <= st.C - (sigma / (2.0 * a)) * (x_new - st.x).squaredNorm()) {
      accepted = true;
      info.halvings = hv;
      break;
    }
    a *= 0.5;
  }
  if (!accepted) {
    a = 1.0 / L;
    x_new = pr.prox(st.x - a * st.grad, L);
    psi_new = prob.value(x_new) + pr.phi(x_new);
    info.halvings = max_halvings;
  }
  info.alpha = a;

  Vec s = x_new - st.x;
  info.step_norm = s.norm();
  auto fg = prob.value_grad(x_new);
  Vec r = fg.second - st.grad;
  double rr = r.squaredNorm(), rs = r.dot(s);
  double bb = rr / rs;
  st.alpha = std::isfinite(bb) ? std::min(alpha_max, std::max(alpha_min, bb)) : 1.0 / L;

  st.x = std::move(x_new);
  st.grad = std::move(fg.second);
  st.psi = psi_new;
  st.Q = eta * st.Q + 1.0;
  st.C = ((st.Q - 1.0) * st.C + psi_new) / st.Q;

  info.psi = psi_new;
  info.residual = (st.x - pr.prox(st.x - st.grad / L, L)).norm();
  return info;
}

namespace detail {

inline IterationInfo baseline_row(long k, double psi, double residual, double step_norm,
                                  double L, bool initial) {
  IterationInfo ii;
  ii.k = k;
  ii.initial = initial;
  ii.psi = psi;
  ii.f_nat_norm = residual;
  ii.accepted = true;
  ii.L = L;
  ii.step_norm = step_norm;
  return ii;
}

template <class Problem, class State, class Step>
SolveResult baseline_solve(const Problem& prob, const BaselineParams& bp, const Vec& x0,
                           const Observer& obs, State& st, Step step) {
  const auto& pr = prob.prox();
  double L = prob.lipschitz();
  auto t0 = std::chrono::steady_clock::now();

  SolveResult res;
  auto fg = prob.value_grad(x0);
  double psi0 = fg.first + pr.phi(x0);
  double nat0 = (x0 - pr.prox(x0 - fg.second / L, L)).norm();
  if (obs) obs(baseline_row(0, psi0, nat0, 0.0, L, true));

  res.status = SolveStatus::max_iters;
  double psi = psi0, nat = nat0;
  long k = 0;
  if (nat0 <= bp.tol) {
    res.status = SolveStatus::converged;
  } else {
    while (k < bp.max_iters) {
      if (bp.time_budget > 0.0) {
        std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
        if (el.count() > bp.time_budget) {
          res.status = SolveStatus::time_budget;
          break;
        }
      }
      BaselineStepInfo si = step(st, prob);
      ++k;
      psi = si.psi;
      nat = si.residual;
      if (obs) obs(baseline_row(k, psi, nat, si.step_norm, L, false));
      if (nat <= bp.tol) {
        res.status = SolveStatus::converged;
        break;
      }
    }
  }
  res.x = st.x;
  res.z = st.x;
  res.iters = k;
  res.n_success = k;
  res.psi = psi;
  res.f_nat_norm = nat;
  res.L = L;
  return res;
}

}  // namespace detail

template <class Problem>
SolveResult solve_fista(const Problem& prob, const BaselineParams& bp, const Vec& x0,
                        const Observer& obs = {}) {
  FistaState st;
  fista_init(st, prob, x0);
  return detail::baseline_solve(prob, bp, x0, obs, st,
                                [](FistaState& s, const Problem& p) { return fista_step(s, p); });
}

template <class Problem>
SolveResult solve_sparsa(const Problem& prob, const BaselineParams& bp, const Vec& x0,
                         const Observer& obs = {}) {
  SparsaState st;
  sparsa_init(st, prob, x0);
  return detail::baseline_solve(prob, bp, x0, obs, st,
                                [](SparsaState& s, const Problem& p) { return sparsa_step(s, p); });
}

}  // namespace trssn
