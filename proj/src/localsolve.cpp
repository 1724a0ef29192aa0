#include "certitight/localsolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace ct {

LocalResult gauss_newton(const Lifting& lifting, const ProblemSetup& setup,
                         const Eigen::VectorXd& theta0,
                         const LocalOptions& opts) {
  LocalResult res;
  Eigen::VectorXd theta = theta0;
  double cost = lifting.residuals(setup, theta).squaredNorm();
  res.reason = "max-iter";

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Eigen::VectorXd r = lifting.residuals(setup, theta);
    Eigen::MatrixXd J = lifting.residual_jacobian(setup, theta);
    Eigen::VectorXd jtr = J.transpose() * r;
    res.grad_norm = 2.0 * jtr.norm();
    if (res.grad_norm < opts.grad_tol) {
      res.reason = "gradient";
      break;
    }

    Eigen::MatrixXd H = J.transpose() * J;
    const double scale = std::max(H.diagonal().maxCoeff(), 1.0);

    // Solve the normal equations, escalating Levenberg damping until we get
    // a usable descent direction that also passes the line search.
    double mu = 0.0;
    double alpha = 0.0;
    Eigen::VectorXd step, theta_next;
    bool accepted = false;
    while (mu <= 1e10 * scale) {
      Eigen::MatrixXd Hd = H;
      Hd.diagonal().array() += mu;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
      step = ldlt.solve(-jtr);
      const bool usable = step.allFinite() &&
                          (Hd * step + jtr).norm() <= 1e-8 * (1.0 + jtr.norm()) &&
                          step.dot(jtr) < 0;
      if (usable) {
        // Armijo backtracking on the true cost through the retraction
        const double slope = 2.0 * step.dot(jtr);  // directional derivative
        alpha = 1.0;
        while (alpha >= 1e-12) {
          theta_next = lifting.retract(setup, theta, alpha * step);
          double trial = lifting.residuals(setup, theta_next).squaredNorm();
          if (trial <= cost + 1e-4 * alpha * slope) {
            accepted = true;
            cost = trial;
            break;
          }
          alpha *= 0.5;
        }
        if (accepted) break;
      }
      mu = (mu == 0.0) ? 1e-10 * scale : mu * 100.0;
    }
    if (!accepted) {
      res.reason = "step";
      break;
    }

    theta = theta_next;
    res.iters = iter + 1;
    if ((alpha * step).norm() < opts.step_tol) {
      res.reason = "step";
      break;
    }
  }

  res.theta = theta;
  res.q_hat = lifting.cost(setup, theta);
  return res;
}

}  // namespace ct
