// Minimal library walkthrough: solve a synthetic quadratic + l1 instance
// with the exact-Hessian trust-region solver and compare against the
// closed-form solution.
#include <cstdio>

#include "trssn/driver.hpp"
#include "trssn/problems/quad_l1.hpp"

int main() {
  const long n = 40;
  auto prob = trssn::make_random_quad_l1(17, n, 0.3);

  trssn::TrssnParams params;
  params.tol = 1e-10;

  auto res = trssn::solve_exact(prob, params, trssn::Vec::Zero(n),
                                [](const trssn::IterationInfo& ii) {
                                  if (ii.initial || ii.accepted)
                                    std::printf("k=%3ld  psi=% .12e  chi=%9.3e  delta=%g\n", ii.k,
                                                ii.psi, ii.chi, ii.delta);
                                });

  std::printf("status: %s after %ld iterations\n", trssn::to_string(res.status), res.iters);
  double err = (res.x - prob.solution()).lpNorm<Eigen::Infinity>();
  std::printf("distance to the closed-form solution: %.3e\n", err);
  long nz = long((res.x.array() != 0.0).count());
  std::printf("support: %ld of %ld coordinates\n", nz, n);
  return res.status == trssn::SolveStatus::converged ? 0 : 1;
}
