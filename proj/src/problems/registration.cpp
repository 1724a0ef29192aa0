#include <cmath>
#include <stdexcept>

#include "certitight/problems.hpp"
#include "families.hpp"

namespace ct {

namespace {

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d K;
  K << 0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0;
  return K;
}

// Rodrigues formula with the small-angle series, so retraction is exact on
// the rotation group down to machine precision.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  double th = w.norm();
  Eigen::Matrix3d K = hat(w);
  double a, b;
  if (th < 1e-8) {
    a = 1.0 - th * th / 6.0;
    b = 0.5 - th * th / 24.0;
  } else {
    a = std::sin(th) / th;
    b = (1.0 - std::cos(th)) / (th * th);
  }
  return Eigen::Matrix3d::Identity() + a * K + b * (K * K);
}

// x = [h; theta] with theta = [t; vec(C)]; inside theta, t occupies local
// offsets 0..2 and entry (row, col) of C sits at 3 + 3*col + row
int c_idx(int row, int col) { return 4 + 3 * col + row; }

// entry (a, b) of C'C = I h^2; columns of C are contiguous 3-blocks of vec(C)
Eigen::MatrixXd orth_cols_dense(int a, int b) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(13, 13);
  for (int i = 0; i < 3; ++i) {
    D(c_idx(i, a), c_idx(i, b)) += 0.5;
    D(c_idx(i, b), c_idx(i, a)) += 0.5;
  }
  if (a == b) D(0, 0) = -1.0;
  return D;
}

// Pose registration against point (PPR) or line (PLR) primitives: find
// C in SO(3), t in R^3 minimizing sum_i |C p_i + t - y_i|^2_{W_i} with
//   W_i = I            for point targets,
//   W_i = I - v_i v_i' for line targets with unit direction v_i
// (the projector removes the residual component along the line). The
// determinant constraint is dropped for the relaxation, so the lifted
// variable is x = [h; theta], theta = [t; vec(C)], with C only
// orthonormality-constrained; handedness comes back through learned
// constraints. The pose is one variable group: templates act on {h, theta}.
// Declared known are the homogenization and the six entries of C'C = I h^2.
class Registration final : public Lifting {
 public:
  explicit Registration(bool line_mode) : line_(line_mode) {}

  std::string family() const override { return line_ ? "plr" : "ppr"; }

  std::vector<VarTypeDecl> var_types() const override {
    return {{"theta", 12, false}};
  }

  int type_count(const std::string& type, const ProblemSetup& s) const override {
    (void)type;
    (void)s;
    return 1;  // one pose regardless of how many primitives are measured
  }

  ProblemSetup generate(int d, int n, int n_anchors, double noise,
                        uint64_t seed) const override {
    if (d != 3) throw std::invalid_argument("registration is implemented in 3-D");
    if (n < 1) throw std::invalid_argument("registration needs measured points");
    ProblemSetup s;
    s.family = family();
    s.d = 3;
    s.n = n;
    s.n_anchors = n_anchors;  // unused; kept for a uniform CLI surface
    s.noise = noise;
    s.seed = seed;
    Rng rng = Rng::split(seed, 0x99e6);
    fill_data(s, rng);
    return s;
  }

  ProblemSetup resample(const ProblemSetup& s, Rng& rng) const override {
    ProblemSetup out = s;
    fill_data(out, rng);
    return out;
  }

  int theta_dim(const ProblemSetup& s) const override {
    (void)s;
    return 12;
  }

  Eigen::VectorXd sample_theta(const ProblemSetup& s, Rng& rng) const override {
    (void)s;
    // proper rotations only: the sampler walks the feasible set of the
    // original problem, which is what the learned constraints must cut out
    Eigen::VectorXd theta(12);
    theta.head(3) = rng.uniform_vec(3, 0.0, 1.0);
    Eigen::Matrix3d C = rng.rotation(3);
    theta.tail(9) = Eigen::Map<const Eigen::VectorXd>(C.data(), 9);
    return theta;
  }

  Eigen::VectorXd lift(const ProblemSetup& s,
                       const Eigen::VectorXd& theta) const override {
    (void)s;
    Eigen::VectorXd x(13);
    x[0] = 1.0;
    x.tail(12) = theta;
    return x;
  }

  PolyMatrix build_cost(const ProblemSetup& s) const override {
    // residual row block per primitive: C p_i + t - y_i = M_i x with
    // M_i = [-y_i  I  p_i' (x) I], so Q = sum_i M_i' W_i M_i
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(13, 13);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 13);
    for (int i = 0; i < s.n; ++i) {
      const Eigen::VectorXd& p = s.anchors[size_t(i)];
      M.col(0) = -s.measurements[size_t(i)];
      M.block(0, 1, 3, 3) = Eigen::Matrix3d::Identity();
      for (int j = 0; j < 3; ++j)
        M.block(0, 4 + 3 * j, 3, 3) = p[j] * Eigen::Matrix3d::Identity();
      local += M.transpose() * weight(s, i) * M;
    }
    PolyMatrix Q(layout(s));
    Q.add_block("h", "h", local.block(0, 0, 1, 1));
    Q.add_block("h", "theta", local.block(0, 1, 1, 12));
    Q.add_block("theta", "theta", local.block(1, 1, 12, 12));
    return Q;
  }

  double cost(const ProblemSetup& s, const Eigen::VectorXd& theta) const override {
    return residuals(s, theta).squaredNorm();
  }

  Eigen::VectorXd residuals(const ProblemSetup& s,
                            const Eigen::VectorXd& theta) const override {
    // W_i is a projector (or the identity), so pre-weighted rows keep
    // |r|^2 equal to the weighted cost
    Eigen::Map<const Eigen::Matrix3d> C(theta.data() + 3);
    Eigen::Vector3d t = theta.head(3);
    Eigen::VectorXd r(3 * s.n);
    for (int i = 0; i < s.n; ++i)
      r.segment(3 * i, 3) =
          weight(s, i) *
          (C * s.anchors[size_t(i)] + t - s.measurements[size_t(i)]);
    return r;
  }

  Eigen::MatrixXd residual_jacobian(const ProblemSetup& s,
                                    const Eigen::VectorXd& theta) const override {
    // step coordinates [dt; xi] with C <- C exp(hat(xi)):
    // d/dxi (C exp(hat(xi)) p) at 0 is -C hat(p)
    Eigen::Map<const Eigen::Matrix3d> C(theta.data() + 3);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3 * s.n, 6);
    for (int i = 0; i < s.n; ++i) {
      Eigen::Matrix3d W = weight(s, i);
      J.block(3 * i, 0, 3, 3) = W;
      J.block(3 * i, 3, 3, 3) = -W * C * hat(s.anchors[size_t(i)]);
    }
    return J;
  }

  int step_dim(const ProblemSetup& s) const override {
    (void)s;
    return 6;
  }

  Eigen::VectorXd retract(const ProblemSetup& s, const Eigen::VectorXd& theta,
                          const Eigen::VectorXd& step) const override {
    (void)s;
    Eigen::Map<const Eigen::Matrix3d> C(theta.data() + 3);
    Eigen::Matrix3d Cn = C * exp_so3(step.tail(3));
    Eigen::VectorXd out(12);
    out.head(3) = theta.head(3) + step.head(3);
    out.tail(9) = Eigen::Map<const Eigen::VectorXd>(Cn.data(), 9);
    return out;
  }

  std::vector<Template> known_templates() const override {
    std::vector<Template> out;
    Template a0;
    a0.set.variables = {"h"};
    a0.set.param_keys = {"1"};
    a0.mataug = Eigen::MatrixXd::Ones(1, 1);
    out.push_back(a0);
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        Template t;
        t.set.variables = {"h", "theta"};
        t.set.param_keys = {"1"};
        t.mataug = vech(orth_cols_dense(a, b));
        out.push_back(t);
      }
    return out;
  }

  bool append_knowns_when_learning() const override { return true; }

  std::vector<PolyMatrix> analytic_constraints(const ProblemSetup& s) const override {
    // the hand-derived tightening set: homogenization, both orthonormality
    // directions, and the nine handedness equations col_i x col_j = col_k
    // (cyclic); 22 matrices, one of which is linearly dependent because the
    // diagonal sums of C'C and CC' are both |C|_F^2
    std::vector<PolyMatrix> out;
    LayoutPtr L = layout(s);

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(13, 13);
    D(0, 0) = 1.0;
    out.push_back(PolyMatrix::from_dense(L, D));

    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b)
        out.push_back(PolyMatrix::from_dense(L, orth_cols_dense(a, b)));
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        D.setZero();
        for (int k = 0; k < 3; ++k) {
          D(c_idx(a, k), c_idx(b, k)) += 0.5;
          D(c_idx(b, k), c_idx(a, k)) += 0.5;
        }
        if (a == b) D(0, 0) = -1.0;
        out.push_back(PolyMatrix::from_dense(L, D));
      }
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        D.setZero();
        int j = (i + 1) % 3, l = (i + 2) % 3;
        int p1 = c_idx((k + 1) % 3, i), q1 = c_idx((k + 2) % 3, j);
        int p2 = c_idx((k + 2) % 3, i), q2 = c_idx((k + 1) % 3, j);
        D(p1, q1) += 0.5;
        D(q1, p1) += 0.5;
        D(p2, q2) -= 0.5;
        D(q2, p2) -= 0.5;
        D(0, c_idx(k, l)) -= 0.5;
        D(c_idx(k, l), 0) -= 0.5;
        out.push_back(PolyMatrix::from_dense(L, D));
      }
    return out;
  }

 private:
  Eigen::Matrix3d weight(const ProblemSetup& s, int i) const {
    if (!line_) return Eigen::Matrix3d::Identity();
    const Eigen::VectorXd& v = s.extra[size_t(i)];
    return Eigen::Matrix3d::Identity() - v * v.transpose();
  }

  void fill_data(ProblemSetup& s, Rng& rng) const {
    // object model points in the unit cube; pose with translation in the
    // unit cube and a Haar-uniform proper rotation; measurement noise
    // perturbs the measured points, targets stay exact primitives
    s.anchors.clear();
    s.extra.clear();
    s.measurements.clear();
    std::vector<Eigen::VectorXd> p_true;
    for (int i = 0; i < s.n; ++i) p_true.push_back(rng.uniform_vec(3, 0.0, 1.0));
    Eigen::Matrix3d C = rng.rotation(3);
    Eigen::Vector3d t = rng.uniform_vec(3, 0.0, 1.0);
    s.theta_gt.resize(12);
    s.theta_gt.head(3) = t;
    s.theta_gt.tail(9) = Eigen::Map<const Eigen::VectorXd>(C.data(), 9);
    for (int i = 0; i < s.n; ++i) {
      Eigen::Vector3d w = C * p_true[size_t(i)] + t;
      Eigen::VectorXd y = w;
      if (line_) {
        Eigen::Vector3d v = rng.normal_vec(3).normalized();
        s.extra.push_back(v);
        y = w + rng.uniform(-1.0, 1.0) * v;  // any point on the line will do
      }
      s.anchors.push_back(p_true[size_t(i)] + s.noise * rng.normal_vec(3));
      s.measurements.push_back(y);
    }
  }

  bool line_;
};

}  // namespace

std::unique_ptr<Lifting> make_registration(bool line_mode) {
  return std::make_unique<Registration>(line_mode);
}

}  // namespace ct
