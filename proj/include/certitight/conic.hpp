#pragma once
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ct {

// Symmetric eigendecomposition (LAPACK dsyevd), eigenvalues descending.
void eig_sym(const Eigen::MatrixXd& M, Eigen::VectorXd& eigs,
             Eigen::MatrixXd& vecs);
Eigen::VectorXd eig_vals(const Eigen::MatrixXd& M);

namespace conic {

// Cone layout for the slack vector s of  min c'u  s.t. A u = b, G u + s = h,
// s in (R_+)^n_lin x PSD(n_psd). PSD blocks are packed in svec form (upper
// triangle, sqrt(2) off-diagonal).
struct ConeSpec {
  int n_lin = 0;
  std::vector<int> psd;
  int dim() const;
};

struct SolveOptions {
  double tol_feas = 1e-9;
  double tol_gap = 1e-8;     // relative duality gap; feasibility runs tighter
  double near_feas = 1e-7;   // classify near-optimal up to here
  double near_gap = 1e-7;
  int max_iter = 100;
  bool refine = true;        // iterative refinement on each KKT solve
};

struct ConelpResult {
  Eigen::VectorXd u;      // decision variables
  Eigen::VectorXd s, z;   // cone slack and its dual (svec-packed PSD parts)
  Eigen::VectorXd y_eq;   // equality multipliers
  std::string status;     // optimal | near-optimal | infeasible | numerical-failure
  double pobj = 0, dobj = 0, gap = 0, res_pri = 0, res_dual = 0;
  int iters = 0;
};

// Primal-dual interior-point method with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step. Dense; sized for blocks <= ~100.
ConelpResult solve_conelp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A_eq,
                          const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& G,
                          const Eigen::VectorXd& h, const ConeSpec& cone,
                          const SolveOptions& opts = {});

}  // namespace conic

// --- SDP-level casts ---------------------------------------------------------

// min <Q,X> s.t. <A[0],X> = 1 (homogenization), <A[i],X> = 0 for i>0, X PSD.
struct SdpProblem {
  Eigen::MatrixXd Q;
  std::vector<Eigen::MatrixXd> A;  // A[0] = homogenization matrix
};

struct SdpSolution {
  Eigen::MatrixXd X;       // primal optimum
  double p_star = 0;
  double d_star = 0;       // from the duals: -rho
  double rho = 0;
  Eigen::VectorXd lambda;  // one per A[i], i >= 1
  std::string status;
  double res_pri = 0, res_dual = 0, gap = 0;
  int iters = 0;
};

SdpSolution solve_primal(const SdpProblem& prob,
                         const conic::SolveOptions& opts = {});

struct Certificate {
  double eps = 0;            // normalized stationarity residual achieved
  double rho = 0;
  Eigen::VectorXd lambda;
  Eigen::VectorXd h_eigs;    // spectrum of H(rho, lambda), descending
  bool certified = false;
  std::string status;
  std::string reason;        // set when uncertified
};

// min eps  s.t.  |(H(rho,lambda) xhat)_j| / (1+||Q||_F) <= eps,  H PSD.
// With bound_full_h the elementwise bound is placed on all of H instead of
// on H*xhat (the stricter literal variant).
Certificate certify(const SdpProblem& prob, const Eigen::VectorXd& xhat,
                    double eps_max = 1e-3, bool bound_full_h = false,
                    const conic::SolveOptions& opts = {});

// min sum of |lambda_i| over the reducible constraints s.t. H PSD, H xhat = 0.
// Always-on constraints (those not listed in reducible) keep free multipliers.
// Solved loosely (the magnitudes only feed an ordering).
Eigen::VectorXd solve_l1_reduction(const SdpProblem& prob,
                                   const Eigen::VectorXd& xhat,
                                   const std::vector<int>& reducible);

}  // namespace ct
