#pragma once
#include <string>

#include "certitight/liftprob.hpp"

namespace ct {

struct LocalOptions {
  double grad_tol = 1e-6;
  double step_tol = 1e-10;
  int max_iter = 200;
};

struct LocalResult {
  Eigen::VectorXd theta;
  double q_hat = 0;        // cost recomputed at theta
  int iters = 0;
  std::string reason;      // gradient | step | max-iter
  double grad_norm = 0;
};

// Gauss-Newton with Armijo backtracking and Levenberg damping on singular
// normal equations; steps go through the lifting's retraction so rotation
// blocks stay on the manifold.
LocalResult gauss_newton(const Lifting& lifting, const ProblemSetup& setup,
                         const Eigen::VectorXd& theta0,
                         const LocalOptions& opts = {});

}  // namespace ct
