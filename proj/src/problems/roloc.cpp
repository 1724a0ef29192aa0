#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "certitight/problems.hpp"
#include "families.hpp"

namespace ct {

namespace {

// Range-only localization: N positions theta_n in R^d, N_m fixed anchors m_k,
// squared-range residuals r_nk = d_nk^2 - |m_k - theta_n|^2 over the complete
// measurement graph. Expanding the square shows the residual is linear in the
// lifted vector once either substitution is introduced:
//   z mode: z_n = |theta_n|^2                       (one scalar per position)
//   y mode: y_n = vech(theta_n theta_n')            (all quadratic monomials,
//                                                    sqrt(2) off the diagonal)
// Only the homogenization is declared known; the substitution-defining
// constraints are left for the learner to discover, matching the reference
// experiments.
class RangeOnly final : public Lifting {
 public:
  RangeOnly(bool y_mode, int d) : y_(y_mode), d_(d), q_(y_mode ? d * (d + 1) / 2 : 1) {
    if (d < 1) throw std::invalid_argument("range-only localization needs d >= 1");
  }

  std::string family() const override { return y_ ? "roloc-y" : "roloc-z"; }

  std::vector<VarTypeDecl> var_types() const override {
    return {{"theta", d_, true}, {y_ ? "y" : "z", q_, true}};
  }

  int type_count(const std::string& type, const ProblemSetup& s) const override {
    (void)type;
    return s.n;  // one position state and one substitution per time step
  }

  ProblemSetup generate(int d, int n, int n_anchors, double noise,
                        uint64_t seed) const override {
    if (d != d_)
      throw std::invalid_argument("range-only lifting was built for d=" +
                                  std::to_string(d_));
    if (n_anchors < 1) throw std::invalid_argument("range-only needs anchors");
    ProblemSetup s;
    s.family = family();
    s.d = d_;
    s.n = n;
    s.n_anchors = n_anchors;
    s.noise = noise;
    s.seed = seed;
    // both substitution modes share the geometry stream: same seed, same data
    Rng rng = Rng::split(seed, 0x4010c);
    fill_data(s, rng);
    return s;
  }

  ProblemSetup resample(const ProblemSetup& s, Rng& rng) const override {
    ProblemSetup out = s;
    fill_data(out, rng);
    return out;
  }

  int theta_dim(const ProblemSetup& s) const override { return d_ * s.n; }

  Eigen::VectorXd sample_theta(const ProblemSetup& s, Rng& rng) const override {
    Eigen::VectorXd lo, hi;
    bbox(s, lo, hi);
    Eigen::VectorXd theta(d_ * s.n);
    for (int nn = 0; nn < s.n; ++nn)
      for (int i = 0; i < d_; ++i)
        theta[nn * d_ + i] = rng.uniform(lo[i], hi[i]);
    return theta;
  }

  Eigen::VectorXd lift(const ProblemSetup& s,
                       const Eigen::VectorXd& theta) const override {
    Eigen::VectorXd x(1 + s.n * (d_ + q_));
    x[0] = 1.0;
    x.segment(1, s.n * d_) = theta;
    const long off = 1 + s.n * d_;
    for (int nn = 0; nn < s.n; ++nn) {
      auto th = theta.segment(nn * d_, d_);
      if (y_)
        x.segment(off + nn * q_, q_) = vech(th * th.transpose());
      else
        x[off + nn] = th.squaredNorm();
    }
    return x;
  }

  PolyMatrix build_cost(const ProblemSetup& s) const override {
    PolyMatrix Q(layout(s));
    // per-edge residual in lifted coordinates, over [h; theta_n; sub_n]:
    //   r_nk = (d_nk^2 - |m_k|^2) h + 2 m_k' theta_n - |theta_n|^2
    // with the last term read off the substitution block.
    const int nb = 1 + d_ + q_;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(nb);
    if (y_) {
      for (int i = 0; i < d_; ++i) a[1 + d_ + int(vech_index(i, i, d_))] = -1.0;
    } else {
      a[1 + d_] = -1.0;
    }
    for (int nn = 0; nn < s.n; ++nn) {
      Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nb, nb);
      for (int k = 0; k < s.n_anchors; ++k) {
        const Eigen::VectorXd& m = s.anchors[size_t(k)];
        double dd = s.measurements[size_t(nn)][k];
        a[0] = dd * dd - m.squaredNorm();
        a.segment(1, d_) = 2.0 * m;
        local += a * a.transpose();
      }
      std::string tn = "theta_" + std::to_string(nn + 1);
      std::string sn = (y_ ? "y_" : "z_") + std::to_string(nn + 1);
      Q.add_block("h", "h", local.block(0, 0, 1, 1));
      Q.add_block("h", tn, local.block(0, 1, 1, d_));
      Q.add_block("h", sn, local.block(0, 1 + d_, 1, q_));
      Q.add_block(tn, tn, local.block(1, 1, d_, d_));
      Q.add_block(tn, sn, local.block(1, 1 + d_, d_, q_));
      Q.add_block(sn, sn, local.block(1 + d_, 1 + d_, q_, q_));
    }
    return Q;
  }

  double cost(const ProblemSetup& s, const Eigen::VectorXd& theta) const override {
    return residuals(s, theta).squaredNorm();
  }

  Eigen::VectorXd residuals(const ProblemSetup& s,
                            const Eigen::VectorXd& theta) const override {
    Eigen::VectorXd r(s.n * s.n_anchors);
    for (int nn = 0; nn < s.n; ++nn) {
      auto th = theta.segment(nn * d_, d_);
      for (int k = 0; k < s.n_anchors; ++k) {
        double dd = s.measurements[size_t(nn)][k];
        r[nn * s.n_anchors + k] = dd * dd - (s.anchors[size_t(k)] - th).squaredNorm();
      }
    }
    return r;
  }

  Eigen::MatrixXd residual_jacobian(const ProblemSetup& s,
                                    const Eigen::VectorXd& theta) const override {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(s.n * s.n_anchors, d_ * s.n);
    for (int nn = 0; nn < s.n; ++nn) {
      auto th = theta.segment(nn * d_, d_);
      for (int k = 0; k < s.n_anchors; ++k)
        J.block(nn * s.n_anchors + k, nn * d_, 1, d_) =
            2.0 * (s.anchors[size_t(k)] - th).transpose();
    }
    return J;
  }

  std::vector<Template> known_templates() const override {
    Template a0;
    a0.set.variables = {"h"};
    a0.set.param_keys = {"1"};
    a0.mataug = Eigen::MatrixXd::Ones(1, 1);
    return {a0};
  }

 private:
  void bbox(const ProblemSetup& s, Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
    if (s.anchors.empty()) throw std::invalid_argument("setup has no anchors");
    lo = s.anchors[0];
    hi = s.anchors[0];
    for (const auto& m : s.anchors) {
      lo = lo.cwiseMin(m);
      hi = hi.cwiseMax(m);
    }
  }

  void fill_data(ProblemSetup& s, Rng& rng) const {
    s.anchors.clear();
    for (int k = 0; k < s.n_anchors; ++k) {
      Eigen::VectorXd m(d_);
      for (int i = 0; i < d_; ++i) m[i] = rng.uniform();
      s.anchors.push_back(m);
    }
    Eigen::VectorXd lo, hi;
    bbox(s, lo, hi);
    s.theta_gt.resize(d_ * s.n);
    for (int nn = 0; nn < s.n; ++nn)
      for (int i = 0; i < d_; ++i)
        s.theta_gt[nn * d_ + i] = rng.uniform(lo[i], hi[i]);
    // complete measurement graph: one vector of N_m ranges per position,
    // Gaussian noise on the range itself (clamped: distances are nonnegative)
    s.measurements.clear();
    for (int nn = 0; nn < s.n; ++nn) {
      Eigen::VectorXd dist(s.n_anchors);
      auto th = s.theta_gt.segment(nn * d_, d_);
      for (int k = 0; k < s.n_anchors; ++k)
        dist[k] = std::max(
            0.0, (s.anchors[size_t(k)] - th).norm() + s.noise * rng.normal());
      s.measurements.push_back(dist);
    }
  }

  bool y_;
  int d_;
  int q_;  // substitution block size per position
};

}  // namespace

std::unique_ptr<Lifting> make_roloc(bool y_mode, int d) {
  return std::make_unique<RangeOnly>(y_mode, d);
}

}  // namespace ct
