// Outer trust-region solver for composite problems psi = f + phi driven by the
// normal map F_nor(z) = grad f(prox z) + lambda (z - prox z). Each iteration
// solves the reduced Newton system inexactly with Steihaug-CG, lifts the
// result to a full-space trial step, and accepts or rejects it with a merit
// function ratio test on H_tau(z) = psi(prox z) + (tau/2)||F_nor(z)||^2/lambda.
#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "trssn/lbfgs.hpp"
#include "trssn/prox.hpp"
#include "trssn/steihaug.hpp"
#include "trssn/types.hpp"

namespace trssn {

// Optional problem oracle: psi(x_plus) - psi(x) evaluated in difference form,
// accurate in absolute terms at the scale of the difference itself rather than
// at the scale of psi.
template <class P>
concept HasValueDecrement = requires(const P& p, const Vec& v) {
  { p.value_decrement(v, v, v) } -> std::convertible_to<double>;
};

struct TrssnParams {
  double delta_min = 1e-2;
  double gamma_shrink = 0.25;
  double gamma_expand = 2.0;
  double eta1 = 1e-6;
  double eta2 = 0.75;
  double c_tau = 0.05;
  double c_nu = 0.05;
  double p = 0.1;
  double alpha = 0.2;
  double c_a = 1e-3;
  double delta0 = 1.0;
  double tol = 1e-10;
  long max_iters = 1000;
  int cg_max_iters = 10;
  double lambda = 0.0;           // <= 0 selects min{L/2, 0.4}
  int lbfgs_memory = 10;
  bool adaptive_lambda = false;  // refresh L (and Lambda = L*I) on bound violations
  bool audit_sentinel = false;   // recompute the full ratio after cheap rejections
  double time_budget = 0.0;      // seconds; 0 disables the budget
};

struct TauNu {
  double tau;
  double nu;
};

// tau = c_tau * 2l^2/(L^2+2l^2); nu = 0.5*min{tau, c_nu*[1 - (tau/2)(L^2/(2l^2)+1)]}.
// The derived pair must satisfy tau*(L^2 + 2l^2) < 2l^2*(1 - nu).
inline TauNu derive_tau_nu(double L, double lambda, double c_tau = 0.05,
                           double c_nu = 0.05) {
  if (!(L > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("derive_tau_nu: L and lambda must be positive");
  double lam2 = 2.0 * lambda * lambda;
  double tau = c_tau * lam2 / (L * L + lam2);
  double bracket = 1.0 - 0.5 * tau * (L * L / lam2 + 1.0);
  double nu = 0.5 * std::min(tau, c_nu * bracket);
  if (!(tau * (L * L + lam2) < lam2 * (1.0 - nu)))
    throw std::logic_error("derive_tau_nu: derived parameters are inconsistent");
  return {tau, nu};
}

inline double merit_value(double psi, double f_nor_sq, double tau, double lambda) {
  return psi + 0.5 * tau * f_nor_sq / lambda;
}

// pred = (tau/2) chi min{1, delta, chi} + (nu_k chi / min{delta, chi}) ||dx||^2_Lambda
inline double predicted_reduction(double tau, double chi, double delta, double nu_k,
                                  double dx_lambda_sq) {
  if (!(chi > 0.0))
    throw std::invalid_argument("predicted_reduction: chi must be positive");
  double pred = 0.5 * tau * chi * std::min(1.0, std::min(delta, chi));
  pred += (nu_k * chi / std::min(delta, chi)) * dx_lambda_sq;
  return pred;
}

// nu_k = min{nu, c_a * max{1, n_S}^{2 alpha} * ||dx||_Lambda^{2 p}}
inline double nu_schedule(long n_success, double dx_lambda_norm, double nu_cap,
                          double c_a = 1e-3, double exp_n = 0.4, double exp_dx = 0.2) {
  double ns = double(std::max<long>(1, n_success));
  return std::min(nu_cap, c_a * std::pow(ns, exp_n) * std::pow(dx_lambda_norm, exp_dx));
}

inline double trust_region_update(double delta, double rho, const TrssnParams& p) {
  if (rho < p.eta1) return p.gamma_shrink * delta;
  if (rho < p.eta2) return std::max(delta, p.delta_min);
  return std::max(p.gamma_expand * delta, p.delta_min);
}

inline double eps_schedule(double f_nor_norm) {
  return std::min(std::pow(f_nor_norm, 2.5), 0.01);
}

// Refresh only when the quadratic upper bound with L_prev fails at the trial
// point; the blind recurrence would double L on every step.
inline double adaptive_lipschitz(double L_prev, double f_new, double f_old,
                                 const Vec& grad_old, const Vec& dx) {
  double nn = dx.squaredNorm();
  if (nn == 0.0) throw std::invalid_argument("adaptive_lipschitz: zero step");
  double slope = grad_old.dot(dx);
  if (f_new <= f_old + slope + 0.5 * L_prev * nn) return L_prev;
  double est2 = 2.0 * (f_new - f_old - slope) / nn;
  return std::max(est2, 2.0 * L_prev);
}

enum class SolveStatus {
  converged,         // chi <= tol
  natural_residual,  // accepted step stalled with ||F_nat|| <= tol
  max_iters,
  time_budget,
  stagnation,  // more than 100 consecutive rejections
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::natural_residual: return "natural_residual";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::time_budget: return "time_budget";
    case SolveStatus::stagnation: return "stagnation";
  }
  return "unknown";
}

struct StepReport {
  double rho = 0.0;  // -1 marks a cheap rejection
  double pred = 0.0;
  double ared = 0.0;
  bool accepted = false;
  CgStatus cg_status = CgStatus::early_exit_small_g;
  int cg_iters = 0;
  double step_norm = 0.0;  // ||s||
  double dx_norm = 0.0;    // ||prox(z+s) - x||
  double nu_k = 0.0;
  bool lambda_refreshed = false;
  double rho_full = std::numeric_limits<double>::quiet_NaN();  // audit mode only
};

struct IterationInfo {
  long k = 0;
  bool initial = false;
  double psi = 0.0;
  double f_nor_norm = 0.0;
  double f_nat_norm = 0.0;
  double chi = 0.0;
  double delta = 0.0;  // radius the step was computed with
  double rho = 0.0;
  bool accepted = false;
  int cg_iters = 0;
  CgStatus cg_status = CgStatus::early_exit_small_g;
  double L = 0.0;
  double nu_k = 0.0;
  double step_norm = 0.0;
  bool lambda_refreshed = false;
};

struct SolveResult {
  Vec x;
  Vec z;
  SolveStatus status = SolveStatus::max_iters;
  long iters = 0;
  long n_success = 0;
  double psi = 0.0;
  double chi = 0.0;
  double f_nor_norm = 0.0;
  double f_nat_norm = 0.0;
  double L = 0.0;
};

using Observer = std::function<void(const IterationInfo&)>;

template <class Problem, class Model>
class TrssnSolver {
 public:
  using Observer = trssn::Observer;

  TrssnSolver(const Problem& problem, Model model, const TrssnParams& params)
      : prob_(&problem), model_(std::move(model)), p_(params) {}

  void init(const Vec& x0) {
    k_ = 0;
    n_success_ = 0;
    rejects_in_row_ = 0;
    L_ = prob_->lipschitz();
    set_lambda(p_.adaptive_lambda ? L_
                                  : (p_.lambda > 0.0 ? p_.lambda : std::min(0.5 * L_, 0.4)));
    auto fg = prob_->value_grad(x0);
    anchor(x0, fg.first, fg.second);
    delta_ = p_.delta0;
  }

  StepReport step() {
    if (!(res_.chi > p_.tol))
      throw std::logic_error("step() called at a converged point");
    StepReport rep;
    const auto& pr = prob_->prox();

    Vec d = pr.gderiv(z_, lambda_);
    auto apply_B = [this](const Vec& v) -> Vec { return model_.apply(v); };
    ReducedSystem sys;
    sys.apply_S = reduced_operator(apply_B, d);
    sys.g = d.cwiseProduct(res_.f_nor);
    sys.delta = delta_;
    sys.eps = eps_schedule(res_.f_nor.norm());
    CgOutcome cg = steihaug_cg(sys, p_.cg_max_iters);
    rep.cg_status = cg.status;
    rep.cg_iters = cg.iters;

    auto M = full_operator(apply_B, d, lambda_);
    Vec s = rescale_to_radius(lift_step(cg.q, res_.f_nor, M, lambda_), delta_, lambda_);
    rep.step_norm = s.norm();
    Vec z_trial = z_ + s;
    Vec x_trial = pr.prox(z_trial, lambda_);
    Vec dx = x_trial - x_;
    rep.dx_norm = dx.norm();

    // The merit comparison is done in difference form when the problem can
    // evaluate psi(x+) - psi(x) directly: near a solution the improvement per
    // step drops below one ulp of psi, so subtracting two O(1) merit values
    // rounds every ared to zero and the run stalls just above tol.
    bool use_dec = false;
    double dpsi = 0.0;
    double slack = 0.5 * tau_ * res_.f_nor.squaredNorm() / lambda_;
    double f_trial = 0.0, psi_trial = 0.0;
    if constexpr (HasValueDecrement<Problem>) {
      if (!p_.adaptive_lambda) {
        use_dec = true;
        dpsi = prob_->value_decrement(x_, x_trial, dx);
        if (!std::isfinite(dpsi))
          throw std::runtime_error("trssn: non-finite objective at trial point");
        psi_trial = psi_ + dpsi;
      }
    }
    if (!use_dec) {
      f_trial = prob_->value(x_trial);
      psi_trial = f_trial + pr.phi(x_trial);
      if (!std::isfinite(psi_trial))
        throw std::runtime_error("trssn: non-finite objective at trial point");
    }

    if (p_.adaptive_lambda && rep.dx_norm > 0.0) {
      double L_new = adaptive_lipschitz(L_, f_trial, f_, grad_, dx);
      if (L_new != L_) {
        L_ = L_new;
        set_lambda(L_);
        anchor(x_, f_, grad_);
        delta_ = p_.gamma_shrink * delta_;
        rep.rho = -1.0;
        rep.lambda_refreshed = true;
        ++rejects_in_row_;
        ++k_;
        return rep;
      }
    }

    // Trial objective already at or above the merit value: reject without
    // touching the gradient oracle.
    bool cheap_reject = use_dec ? (dpsi >= slack) : (psi_trial >= merit_);
    if (cheap_reject) {
      rep.rho = -1.0;
      if (p_.audit_sentinel)
        rep.rho_full = use_dec ? full_ratio_dec(z_trial, x_trial, dpsi, slack, dx)
                               : full_ratio(z_trial, x_trial, psi_trial, dx);
      delta_ = p_.gamma_shrink * delta_;
      ++rejects_in_row_;
      ++k_;
      return rep;
    }

    auto fg = prob_->value_grad(x_trial);
    Residuals res_trial = residuals(z_trial, x_trial, fg.second, pr, lambda_);
    double slack_trial = 0.5 * tau_ * res_trial.f_nor.squaredNorm() / lambda_;
    double ared = use_dec ? (slack - slack_trial) - dpsi
                          : merit_ - merit_value(psi_trial, res_trial.f_nor.squaredNorm(),
                                                 tau_, lambda_);
    if (!std::isfinite(ared))
      throw std::runtime_error("trssn: non-finite merit at trial point");
    double dx_lambda_sq = lambda_ * dx.squaredNorm();
    double nu_k = nu_schedule(n_success_, std::sqrt(dx_lambda_sq), nu_, p_.c_a,
                              2.0 * p_.alpha, 2.0 * p_.p);
    double pred = predicted_reduction(tau_, res_.chi, delta_, nu_k, dx_lambda_sq);
    rep.nu_k = nu_k;
    rep.ared = ared;
    rep.pred = pred;
    rep.rho = ared / pred;
    bool accept = ared >= p_.eta1 * pred;
    rep.accepted = accept;
    if (accept) {
      Vec y = fg.second - grad_;
      z_ = std::move(z_trial);
      x_ = std::move(x_trial);
      f_ = fg.first;
      grad_ = std::move(fg.second);
      psi_ = use_dec ? psi_ + dpsi : psi_trial;
      res_ = std::move(res_trial);
      merit_ -= ared;
      ++n_success_;
      rejects_in_row_ = 0;
      model_.on_accept(dx, y, k_);
      model_.set_point(x_);
      delta_ = (ared >= p_.eta2 * pred) ? std::max(p_.gamma_expand * delta_, p_.delta_min)
                                        : std::max(delta_, p_.delta_min);
    } else {
      delta_ = p_.gamma_shrink * delta_;
      ++rejects_in_row_;
    }
    ++k_;
    return rep;
  }

  SolveResult run(const Vec& x0, const Observer& obs = {}) {
    init(x0);
    auto t0 = std::chrono::steady_clock::now();
    if (obs) obs(info_row(StepReport{}, true));
    SolveStatus status = SolveStatus::max_iters;
    while (true) {
      if (res_.chi <= p_.tol) {
        status = SolveStatus::converged;
        break;
      }
      if (k_ >= p_.max_iters) {
        status = SolveStatus::max_iters;
        break;
      }
      if (p_.time_budget > 0.0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >=
              p_.time_budget) {
        status = SolveStatus::time_budget;
        break;
      }
      double delta_used = delta_;
      StepReport rep = step();
      if (obs) {
        IterationInfo ii = info_row(rep, false);
        ii.delta = delta_used;
        obs(ii);
      }
      if (rep.accepted && rep.dx_norm <= 1e-12 * std::max(1.0, x_.norm()) &&
          res_.f_nat.norm() <= p_.tol) {
        status = SolveStatus::natural_residual;
        break;
      }
      if (rejects_in_row_ > 100) {
        status = SolveStatus::stagnation;
        break;
      }
    }
    SolveResult r;
    r.x = x_;
    r.z = z_;
    r.status = status;
    r.iters = k_;
    r.n_success = n_success_;
    r.psi = psi_;
    r.chi = res_.chi;
    r.f_nor_norm = res_.f_nor.norm();
    r.f_nat_norm = res_.f_nat.norm();
    r.L = L_;
    return r;
  }

  const Vec& x() const { return x_; }
  const Vec& z() const { return z_; }
  const Vec& grad() const { return grad_; }
  const Residuals& residual_pair() const { return res_; }
  double merit() const { return merit_; }
  double psi() const { return psi_; }
  double chi() const { return res_.chi; }
  double delta() const { return delta_; }
  double lambda() const { return lambda_; }
  double tau() const { return tau_; }
  double nu() const { return nu_; }
  double lipschitz() const { return L_; }
  long iteration() const { return k_; }
  long successes() const { return n_success_; }
  const Model& model() const { return model_; }

 private:
  void set_lambda(double lambda) {
    lambda_ = lambda;
    TauNu tn = derive_tau_nu(L_, lambda_, p_.c_tau, p_.c_nu);
    tau_ = tn.tau;
    nu_ = tn.nu;
  }

  // Place z in the preimage of x under prox and refresh every cached quantity.
  void anchor(const Vec& x_hint, double f_hint, const Vec& grad_hint) {
    z_ = initial_z(x_hint, grad_hint, prob_->prox(), lambda_);
    x_ = prob_->prox().prox(z_, lambda_);
    if (x_ == x_hint) {
      f_ = f_hint;
      grad_ = grad_hint;
    } else {
      auto fg = prob_->value_grad(x_);
      f_ = fg.first;
      grad_ = std::move(fg.second);
    }
    psi_ = f_ + prob_->prox().phi(x_);
    res_ = residuals(z_, x_, grad_, prob_->prox(), lambda_);
    merit_ = merit_value(psi_, res_.f_nor.squaredNorm(), tau_, lambda_);
    model_.set_point(x_);
  }

  double full_ratio(const Vec& z_trial, const Vec& x_trial, double psi_trial,
                    const Vec& dx) const {
    auto fg = prob_->value_grad(x_trial);
    Residuals rt = residuals(z_trial, x_trial, fg.second, prob_->prox(), lambda_);
    double merit_trial = merit_value(psi_trial, rt.f_nor.squaredNorm(), tau_, lambda_);
    double ared = merit_ - merit_trial;
    double dls = lambda_ * dx.squaredNorm();
    double nu_k = nu_schedule(n_success_, std::sqrt(dls), nu_, p_.c_a, 2.0 * p_.alpha,
                              2.0 * p_.p);
    double pred = predicted_reduction(tau_, res_.chi, delta_, nu_k, dls);
    return ared / pred;
  }

  double full_ratio_dec(const Vec& z_trial, const Vec& x_trial, double dpsi, double slack,
                        const Vec& dx) const {
    auto fg = prob_->value_grad(x_trial);
    Residuals rt = residuals(z_trial, x_trial, fg.second, prob_->prox(), lambda_);
    double slack_trial = 0.5 * tau_ * rt.f_nor.squaredNorm() / lambda_;
    double ared = (slack - slack_trial) - dpsi;
    double dls = lambda_ * dx.squaredNorm();
    double nu_k = nu_schedule(n_success_, std::sqrt(dls), nu_, p_.c_a, 2.0 * p_.alpha,
                              2.0 * p_.p);
    double pred = predicted_reduction(tau_, res_.chi, delta_, nu_k, dls);
    return ared / pred;
  }

  IterationInfo info_row(const StepReport& rep, bool initial) const {
    IterationInfo ii;
    ii.k = k_;
    ii.initial = initial;
    ii.psi = psi_;
    ii.f_nor_norm = res_.f_nor.norm();
    ii.f_nat_norm = res_.f_nat.norm();
    ii.chi = res_.chi;
    ii.delta = delta_;
    ii.rho = initial ? 0.0 : rep.rho;
    ii.accepted = initial ? true : rep.accepted;
    ii.cg_iters = rep.cg_iters;
    ii.cg_status = rep.cg_status;
    ii.L = L_;
    ii.nu_k = rep.nu_k;
    ii.step_norm = rep.step_norm;
    ii.lambda_refreshed = rep.lambda_refreshed;
    return ii;
  }

  const Problem* prob_;
  Model model_;
  TrssnParams p_;
  Vec z_, x_, grad_;
  Residuals res_;
  double f_ = 0.0, psi_ = 0.0, merit_ = 0.0;
  double delta_ = 1.0;
  double lambda_ = 1.0, tau_ = 0.0, nu_ = 0.0, L_ = 0.0;
  long k_ = 0, n_success_ = 0, rejects_in_row_ = 0;
};

template <class Problem>
SolveResult solve_lbfgs(const Problem& prob, const TrssnParams& params, const Vec& x0,
                        const std::function<void(const IterationInfo&)>& obs = {}) {
  TrssnSolver<Problem, CompactLbfgs> solver(
      prob, CompactLbfgs(prob.dim(), params.lbfgs_memory), params);
  return solver.run(x0, obs);
}

template <HasHessian Problem>
SolveResult solve_exact(const Problem& prob, const TrssnParams& params, const Vec& x0,
                        const std::function<void(const IterationInfo&)>& obs = {}) {
  TrssnSolver<Problem, ExactHessianModel<Problem>> solver(
      prob, ExactHessianModel<Problem>(prob), params);
  return solver.run(x0, obs);
}

}  // namespace trssn
