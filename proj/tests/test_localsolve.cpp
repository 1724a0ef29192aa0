#include <cmath>

#include "certitight/localsolve.hpp"
#include "certitight/problems.hpp"
#include "doctest.h"

using namespace ct;

namespace {

// Minimal two-parameter family with a rank-deficient Jacobian: the single
// residual theta1 + theta2 - 1 makes J'J singular, forcing the damped path.
class LineFit final : public Lifting {
 public:
  std::string family() const override { return "linefit"; }
  std::vector<VarTypeDecl> var_types() const override { return {}; }
  int type_count(const std::string&, const ProblemSetup&) const override {
    return 0;
  }
  ProblemSetup generate(int, int, int, double, uint64_t) const override {
    ProblemSetup s;
    s.family = family();
    return s;
  }
  ProblemSetup resample(const ProblemSetup& s, Rng&) const override {
    return s;
  }
  int theta_dim(const ProblemSetup&) const override { return 2; }
  Eigen::VectorXd sample_theta(const ProblemSetup&, Rng& rng) const override {
    Eigen::VectorXd t(2);
    t << rng.uniform(), rng.uniform();
    return t;
  }
  Eigen::VectorXd lift(const ProblemSetup&,
                       const Eigen::VectorXd&) const override {
    throw std::logic_error("not lifted");
  }
  PolyMatrix build_cost(const ProblemSetup&) const override {
    throw std::logic_error("not lifted");
  }
  double cost(const ProblemSetup& s, const Eigen::VectorXd& t) const override {
    return residuals(s, t).squaredNorm();
  }
  Eigen::VectorXd residuals(const ProblemSetup&,
                            const Eigen::VectorXd& t) const override {
    Eigen::VectorXd r(1);
    r[0] = t[0] + t[1] - 1.0;
    return r;
  }
  Eigen::MatrixXd residual_jacobian(const ProblemSetup&,
                                    const Eigen::VectorXd&) const override {
    Eigen::MatrixXd J(1, 2);
    J << 1, 1;
    return J;
  }
  std::vector<Template> known_templates() const override { return {}; }
};

}  // namespace

TEST_CASE("Gauss-Newton reaches the stereo-1D optimum from nearby inits") {
  auto lifting = make_lifting("stereo1d");
  ProblemSetup s = lifting->generate(1, 2, 0, 0.0, 0);
  for (double init : {0.60, 0.63, 0.66}) {
    LocalResult res =
        gauss_newton(*lifting, s, Eigen::VectorXd::Constant(1, init));
    CHECK(res.reason == "gradient");
    CHECK(res.theta[0] == doctest::Approx(0.6038).epsilon(2e-3));
    CHECK(res.q_hat == doctest::Approx(0.06857).epsilon(1e-3));
    CHECK(res.iters < 30);
  }
}

TEST_CASE("Gauss-Newton solves clean instances to the ground truth") {
  auto lifting = make_lifting("stereo1d");
  ProblemSetup s = lifting->generate(1, 4, 0, 0.0, 21);
  LocalResult res = gauss_newton(*lifting, s, s.theta_gt * 1.02);
  CHECK(res.reason == "gradient");
  CHECK(res.theta[0] == doctest::Approx(s.theta_gt[0]).epsilon(1e-8));
  CHECK(res.q_hat < 1e-12);
}

TEST_CASE("damping handles a singular normal matrix") {
  LineFit toy;
  ProblemSetup s = toy.generate(0, 0, 0, 0, 0);
  Eigen::VectorXd t0(2);
  t0 << 4.0, -1.0;
  LocalResult res = gauss_newton(toy, s, t0);
  CHECK(res.reason == "gradient");
  // any point on the line theta1 + theta2 = 1 is optimal
  CHECK(res.theta[0] + res.theta[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.q_hat < 1e-12);
}
