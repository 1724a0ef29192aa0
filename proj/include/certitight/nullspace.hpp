#pragma once
#include <utility>
#include <vector>

#include "certitight/liftprob.hpp"
#include "certitight/polymat.hpp"

namespace ct {

// Economy QR with column pivoting (LAPACK dgeqp3). Columns whose index is
// below forced_prefix are pivoted to the front regardless of norm.
struct PivotedQr {
  Eigen::MatrixXd R;      // min(m,n) x n, upper triangular w.r.t. perm order
  Eigen::VectorXi perm;   // 0-based: factored matrix is A(:, perm)
  int numerical_rank(double rank_tol) const;  // relative to |R(0,0)|
};
PivotedQr pivoted_qr(const Eigen::MatrixXd& A, int forced_prefix = 0);

struct DataMatrix {
  Eigen::MatrixXd Y;  // n x (n_samples + n_known); known columns last
  int n_samples = 0;
  int n_known = 0;
  LayoutPtr layout;
};

// Draw ceil((1+oversample)*n) feasible samples, lift, vech the outer
// products; append the known-constraint columns (never the homogenization
// matrix, which does not annihilate samples).
DataMatrix build_data_matrix(const Lifting& lifting, const ProblemSetup& setup,
                             const std::vector<PolyMatrix>& known,
                             double oversample, Rng& rng);

struct ConstraintBasis {
  Eigen::MatrixXd vectors;    // n x N_n; each column's largest-|entry| is +1
  Eigen::VectorXd residuals;  // per-vector max |a' y| over sample columns
  LayoutPtr layout;
};

std::pair<ConstraintBasis, PivotedQr> learn_nullspace(const DataMatrix& dm,
                                                      double rank_tol);

// If the first-pass residual is above resid_tol, drop the sample column with
// the largest |a' y| and relearn once; throws if still above afterwards.
std::pair<DataMatrix, ConstraintBasis> two_pass_refine(const DataMatrix& dm,
                                                       const ConstraintBasis& basis,
                                                       double rank_tol,
                                                       double resid_tol = 1e-10);

// Indices (ascending) of a maximal linearly independent subset, chosen by
// pivoted QR over the stacked vectors restricted to their union support.
// The first n_priority vectors are kept preferentially (forced pivots).
std::vector<int> independent_subset(const std::vector<SparseVec>& vectors,
                                    double rank_tol = 1e-12, int n_priority = 0);
std::vector<int> independent_subset_dense(const Eigen::MatrixXd& columns,
                                          double rank_tol = 1e-12,
                                          int n_priority = 0);

}  // namespace ct
