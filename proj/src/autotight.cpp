#include "certitight/autotight.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ct {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

double compute_rdg(double q_hat, double d_star) {
  if (std::abs(q_hat) < 1e-12) {
    // q_hat ~ 0 makes the ratio meaningless; grade the absolute gap against
    // 1e-9 instead, rescaled so the usual < 1e-3 test applies unchanged.
    return (q_hat - d_star) * (kCostTightRdg / 1e-9);
  }
  return (q_hat - d_star) / q_hat;
}

double compute_er(const Eigen::VectorXd& eigs_desc) {
  if (eigs_desc.size() == 0 || eigs_desc[0] <= 0)
    throw std::invalid_argument(
        "top eigenvalue must be positive (homogenization forbids X = 0)");
  const double l1 = eigs_desc[0];
  double l2 = eigs_desc.size() > 1 ? eigs_desc[1] : 0.0;
  double er = l1 / std::max(l2, 1e-16 * l1);
  return std::min(er, 1e16);
}

double compute_er(const Eigen::MatrixXd& X) { return compute_er(eig_vals(X)); }

double quantized_fraction(const Eigen::MatrixXd& vectors) {
  static const double book[] = {0.0,
                                1.0,
                                -1.0,
                                0.5,
                                -0.5,
                                std::sqrt(2.0),
                                -std::sqrt(2.0),
                                1.0 / std::sqrt(2.0),
                                -1.0 / std::sqrt(2.0),
                                2.0};
  if (vectors.size() == 0) return 1.0;
  long hit = 0;
  for (long j = 0; j < vectors.cols(); ++j)
    for (long i = 0; i < vectors.rows(); ++i) {
      double v = vectors(i, j);
      for (double b : book)
        if (std::abs(v - b) < 1e-6) {
          ++hit;
          break;
        }
    }
  return double(hit) / double(vectors.size());
}

TightnessReport make_report(const SdpSolution& sol, double q_hat, int n_known,
                            int n_learned, double quant_frac) {
  TightnessReport r;
  r.q_hat = q_hat;
  r.p_star = sol.p_star;
  r.d_star = sol.d_star;
  r.eigs = eig_vals(sol.X);
  r.rdg = compute_rdg(q_hat, sol.d_star);
  r.er = compute_er(r.eigs);
  r.n_known = n_known;
  r.n_learned = n_learned;
  r.cost_tight = r.rdg < kCostTightRdg;
  r.rank_tight = r.er > kRankTightEr;
  r.quantized_fraction = quant_frac;
  r.solver_status = sol.status;
  if (!r.cost_tight)
    r.outcome = "not-tightenable";
  else if (quant_frac >= 1.0)
    r.outcome = "tight-interpretable";
  else
    r.outcome = "tight-needs-templates";
  return r;
}

SdpSolution solve_relaxation(const PolyMatrix& Q,
                             const std::vector<PolyMatrix>& constraints,
                             const conic::SolveOptions& opts) {
  SdpProblem prob;
  prob.Q = Q.dense();
  prob.A.reserve(constraints.size());
  for (const auto& A : constraints) prob.A.push_back(A.dense());
  return solve_primal(prob, opts);
}

namespace {

AutotightResult autotight_once(const Lifting& lifting, const ProblemSetup& setup,
                               const AutotightOptions& opts, Rng& sample_rng) {
  AutotightResult res;
  LayoutPtr layout = lifting.layout(setup);

  // constraint learning on unit-normalized lifted samples
  auto t0 = std::chrono::steady_clock::now();
  std::vector<PolyMatrix> knowns = lifting.known_constraints(setup);
  std::vector<PolyMatrix> appended;
  if (lifting.append_knowns_when_learning())
    appended.assign(knowns.begin() + 1, knowns.end());  // never A_0
  DataMatrix dm =
      build_data_matrix(lifting, setup, appended, opts.oversample, sample_rng);
  auto learned = learn_nullspace(dm, opts.rank_tol);
  auto refined = two_pass_refine(dm, learned.first, opts.rank_tol);
  res.basis = refined.second;
  res.t_learn = seconds_since(t0);

  // candidate from ground truth
  t0 = std::chrono::steady_clock::now();
  res.local = gauss_newton(lifting, setup, setup.theta_gt, opts.local);
  if (!std::isfinite(res.local.q_hat))
    throw std::runtime_error("local solve diverged");
  res.xhat = lifting.lift(setup, res.local.theta);
  res.t_local = seconds_since(t0);

  // relaxation with homogenization + knowns + everything learned
  t0 = std::chrono::steady_clock::now();
  res.sdp_constraints = knowns;
  res.n_always_on = int(knowns.size());
  for (long j = 0; j < res.basis.vectors.cols(); ++j)
    res.sdp_constraints.push_back(
        PolyMatrix::from_dense(layout, vech_inv(res.basis.vectors.col(j))));
  res.sdp = solve_relaxation(lifting.build_cost(setup), res.sdp_constraints,
                             opts.sdp);
  res.t_solve = seconds_since(t0);

  res.report = make_report(res.sdp, res.local.q_hat, int(knowns.size()),
                           int(res.basis.vectors.cols()),
                           quantized_fraction(res.basis.vectors));
  return res;
}

}  // namespace

AutotightResult autotight(const Lifting& lifting, const ProblemSetup& setup,
                          const AutotightOptions& opts) {
  Rng sample_rng = Rng::split(opts.seed, 0x7a11);
  ProblemSetup current = setup;
  Rng retry_rng = Rng::split(opts.seed, 0x7e17);
  for (int attempt = 0;; ++attempt) {
    try {
      return autotight_once(lifting, current, opts, sample_rng);
    } catch (const std::exception&) {
      // degenerate draw (singular lift storm, diverged local solve):
      // re-randomize the setup and try again, within budget
      if (attempt + 1 >= opts.retry_budget) throw;
      current = lifting.resample(setup, retry_rng);
    }
  }
}

}  // namespace ct
