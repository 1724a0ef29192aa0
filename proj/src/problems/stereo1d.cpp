#include <cmath>

#include "certitight/problems.hpp"
#include "families.hpp"

namespace ct {

namespace {

// One-dimensional camera localization: minimize sum (u_i - 1/(theta - m_i))^2
// over the scalar position theta, lifted with z_i = 1/(theta - m_i).
class Stereo1D final : public Lifting {
 public:
  std::string family() const override { return "stereo1d"; }

  std::vector<VarTypeDecl> var_types() const override {
    return {{"theta", 1, false}, {"z", 1, true}};
  }

  int type_count(const std::string& type, const ProblemSetup& s) const override {
    return type == "z" ? s.n : 1;
  }

  ProblemSetup generate(int d, int n, int n_anchors, double noise,
                        uint64_t seed) const override {
    (void)d;
    (void)n_anchors;
    if (n == 2 && seed == 0) return stereo1d_fixture();
    ProblemSetup s;
    s.family = family();
    s.d = 1;
    s.n = n;
    s.noise = noise;
    s.seed = seed;
    Rng rng = Rng::split(seed, 0x5731d);
    fill_data(s, rng);
    return s;
  }

  ProblemSetup resample(const ProblemSetup& s, Rng& rng) const override {
    ProblemSetup out = s;
    fill_data(out, rng);
    return out;
  }

  int theta_dim(const ProblemSetup&) const override { return 1; }

  Eigen::VectorXd sample_theta(const ProblemSetup& s, Rng& rng) const override {
    double lo = s.anchors[0][0], hi = lo;
    for (const auto& m : s.anchors) {
      lo = std::min(lo, m[0]);
      hi = std::max(hi, m[0]);
    }
    Eigen::VectorXd theta(1);
    theta[0] = rng.uniform(lo, hi);
    return theta;
  }

  Eigen::VectorXd lift(const ProblemSetup& s,
                       const Eigen::VectorXd& theta) const override {
    Eigen::VectorXd x(2 + s.n);
    x[0] = 1.0;
    x[1] = theta[0];
    for (int i = 0; i < s.n; ++i) {
      double gap = theta[0] - s.anchors[size_t(i)][0];
      if (std::abs(gap) < 1e-6) throw SingularLift("theta at landmark pole");
      x[2 + i] = 1.0 / gap;
    }
    return x;
  }

  PolyMatrix build_cost(const ProblemSetup& s) const override {
    PolyMatrix Q(layout(s));
    double uu = 0;
    for (int i = 0; i < s.n; ++i) {
      double u = s.measurements[size_t(i)][0];
      uu += u * u;
      std::string zi = "z_" + std::to_string(i + 1);
      Q.set_entry("h", 0, zi, 0, -u);
      Q.set_entry(zi, 0, zi, 0, 1.0);
    }
    Q.set_entry("h", 0, "h", 0, uu);
    return Q;
  }

  double cost(const ProblemSetup& s, const Eigen::VectorXd& theta) const override {
    return residuals(s, theta).squaredNorm();
  }

  Eigen::VectorXd residuals(const ProblemSetup& s,
                            const Eigen::VectorXd& theta) const override {
    Eigen::VectorXd r(s.n);
    for (int i = 0; i < s.n; ++i)
      r[i] = s.measurements[size_t(i)][0] -
             1.0 / (theta[0] - s.anchors[size_t(i)][0]);
    return r;
  }

  Eigen::MatrixXd residual_jacobian(const ProblemSetup& s,
                                    const Eigen::VectorXd& theta) const override {
    Eigen::MatrixXd J(s.n, 1);
    for (int i = 0; i < s.n; ++i) {
      double gap = theta[0] - s.anchors[size_t(i)][0];
      J(i, 0) = 1.0 / (gap * gap);
    }
    return J;
  }

  std::vector<Template> known_templates() const override {
    std::vector<Template> out;
    // homogenization
    Template a0;
    a0.set.variables = {"h"};
    a0.set.param_keys = {"1"};
    a0.mataug = Eigen::MatrixXd::Ones(1, 1);
    out.push_back(std::move(a0));
    // substitution z (theta - m) = 1, i.e. 2 theta z - 2 m z - 2 h^2 = 0
    Template sub;
    sub.set.variables = {"h", "theta", "z_1"};
    sub.set.param_keys = {"1", "m1"};
    const double s2 = std::sqrt(2.0);
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(6, 2);
    // vech order of [h, theta, z]: hh, h.th, hz, th.th, th.z, zz
    mat(0, 0) = -2.0;       // h^2 under key 1
    mat(4, 0) = s2;         // theta z under key 1
    mat(2, 1) = -s2;        // h z under key m1
    sub.mataug = mat;
    out.push_back(std::move(sub));
    return out;
  }

  std::vector<std::string> instance_param_keys(const std::string& type,
                                               int index) const override {
    if (type == "z") return {"m" + std::to_string(index)};
    return {};
  }

  ParamVector params(const ProblemSetup& s) const override {
    ParamVector p;
    p.keys.push_back("1");
    for (int i = 0; i < s.n; ++i) p.keys.push_back("m" + std::to_string(i + 1));
    p.values.resize(1 + s.n);
    p.values[0] = 1.0;
    for (int i = 0; i < s.n; ++i) p.values[1 + i] = s.anchors[size_t(i)][0];
    return p;
  }

  std::vector<PolyMatrix> analytic_constraints(const ProblemSetup& s) const override {
    // pairwise z_i - z_j = (m_i - m_j) z_i z_j
    std::vector<PolyMatrix> out;
    LayoutPtr lay = layout(s);
    for (int i = 0; i < s.n; ++i)
      for (int j = i + 1; j < s.n; ++j) {
        PolyMatrix A(lay);
        std::string zi = "z_" + std::to_string(i + 1);
        std::string zj = "z_" + std::to_string(j + 1);
        A.set_entry("h", 0, zi, 0, 1.0);
        A.set_entry("h", 0, zj, 0, -1.0);
        A.set_entry(zi, 0, zj, 0,
                    s.anchors[size_t(j)][0] - s.anchors[size_t(i)][0]);
        out.push_back(std::move(A));
      }
    return out;
  }

 private:
  void fill_data(ProblemSetup& s, Rng& rng) const {
    const double guard = 1e-3;
    while (true) {
      s.anchors.clear();
      for (int i = 0; i < s.n; ++i) {
        Eigen::VectorXd m(1);
        m[0] = rng.uniform();
        s.anchors.push_back(m);
      }
      bool ok = true;
      for (int i = 0; ok && i < s.n; ++i)
        for (int j = i + 1; ok && j < s.n; ++j)
          if (std::abs(s.anchors[size_t(i)][0] - s.anchors[size_t(j)][0]) < 0.05)
            ok = false;
      if (!ok) continue;
      double lo = s.anchors[0][0], hi = lo;
      for (const auto& m : s.anchors) {
        lo = std::min(lo, m[0]);
        hi = std::max(hi, m[0]);
      }
      double gt = 0;
      bool found = false;
      for (int attempt = 0; attempt < 64 && !found; ++attempt) {
        gt = rng.uniform(lo, hi);
        found = true;
        for (const auto& m : s.anchors)
          if (std::abs(gt - m[0]) < guard) found = false;
      }
      if (!found) continue;
      s.theta_gt = Eigen::VectorXd::Constant(1, gt);
      s.measurements.clear();
      for (int i = 0; i < s.n; ++i) {
        Eigen::VectorXd u(1);
        u[0] = 1.0 / (gt - s.anchors[size_t(i)][0]) + s.noise * rng.normal();
        s.measurements.push_back(u);
      }
      return;
    }
  }
};

}  // namespace

ProblemSetup stereo1d_fixture() {
  ProblemSetup s;
  s.family = "stereo1d";
  s.d = 1;
  s.n = 2;
  s.noise = 0.0;
  s.seed = 0;
  Eigen::VectorXd m1(1), m2(1), u1(1), u2(1);
  m1 << 0.5488135039273248;
  m2 << 0.7151893663724195;
  u1 << 18.14;
  u2 << -8.71927959820451;
  s.anchors = {m1, m2};
  s.measurements = {u1, u2};
  s.theta_gt = Eigen::VectorXd::Constant(1, 0.6028);
  return s;
}

std::unique_ptr<Lifting> make_stereo1d() { return std::make_unique<Stereo1D>(); }

}  // namespace ct
