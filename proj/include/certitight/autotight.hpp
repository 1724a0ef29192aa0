#pragma once
#include <string>
#include <vector>

#include "certitight/conic.hpp"
#include "certitight/liftprob.hpp"
#include "certitight/localsolve.hpp"
#include "certitight/nullspace.hpp"

namespace ct {

struct TightnessReport {
  double rdg = 0;
  double er = 1;
  double p_star = 0, d_star = 0, q_hat = 0;
  Eigen::VectorXd eigs;  // spectrum of the SDP optimum, descending
  int n_known = 0, n_learned = 0;
  bool cost_tight = false, rank_tight = false;
  std::string outcome;  // not-tightenable | tight-interpretable | tight-needs-templates
  double quantized_fraction = 0;
  std::string solver_status;
};

// (q_hat - d_star)/q_hat, signed; falls back to the absolute gap against 1e-9
// when |q_hat| < 1e-12. Cost-tight iff < 1e-3.
double compute_rdg(double q_hat, double d_star);

// lambda_1 / max(lambda_2, 1e-16 lambda_1), capped at 1e16; throws if
// lambda_1 <= 0. Rank-tight iff > 1e7.
double compute_er(const Eigen::VectorXd& eigs_desc);
double compute_er(const Eigen::MatrixXd& X);

// Fraction of entries within 1e-6 of {0, ±1, ±1/2, ±sqrt2, ±1/sqrt2, 2} —
// a hint for whether a human could read the constraints off.
double quantized_fraction(const Eigen::MatrixXd& vectors);

inline constexpr double kCostTightRdg = 1e-3;
inline constexpr double kRankTightEr = 1e7;

TightnessReport make_report(const SdpSolution& sol, double q_hat, int n_known,
                            int n_learned, double quant_frac);

struct AutotightOptions {
  double rank_tol = 1e-12;
  double oversample = 0.2;
  uint64_t seed = 1;  // sampling stream; independent of the setup seed
  int retry_budget = 5;
  conic::SolveOptions sdp;
  LocalOptions local;
};

struct AutotightResult {
  ConstraintBasis basis;
  std::vector<PolyMatrix> sdp_constraints;  // homogenization, knowns, learned
  int n_always_on = 1;                      // leading constraints kept out of reduction
  LocalResult local;
  Eigen::VectorXd xhat;  // lifted candidate
  SdpSolution sdp;
  TightnessReport report;
  double t_learn = 0, t_solve = 0, t_local = 0;
};

AutotightResult autotight(const Lifting& lifting, const ProblemSetup& setup,
                          const AutotightOptions& opts = {});

// Solve the relaxation for a given constraint list and grade it.
SdpSolution solve_relaxation(const PolyMatrix& Q,
                             const std::vector<PolyMatrix>& constraints,
                             const conic::SolveOptions& opts = {});

}  // namespace ct
