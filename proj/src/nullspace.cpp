#include "certitight/nullspace.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ct {

PivotedQr pivoted_qr(const Eigen::MatrixXd& A, int forced_prefix) {
  const lapack_int m = lapack_int(A.rows());
  const lapack_int n = lapack_int(A.cols());
  const lapack_int k = std::min(m, n);
  Eigen::MatrixXd work = A;  // column-major, overwritten with the factors
  std::vector<lapack_int> jpvt(size_t(n), 0);
  for (int j = 0; j < forced_prefix && j < n; ++j) jpvt[size_t(j)] = 1;
  std::vector<double> tau(size_t(std::max<lapack_int>(1, k)));
  lapack_int info = LAPACKE_dgeqp3(LAPACK_COL_MAJOR, m, n, work.data(), m,
                                   jpvt.data(), tau.data());
  if (info != 0)
    throw std::runtime_error("dgeqp3 failed with info=" + std::to_string(info));
  PivotedQr out;
  out.perm.resize(n);
  for (lapack_int j = 0; j < n; ++j) out.perm[j] = int(jpvt[size_t(j)]) - 1;
  out.R = Eigen::MatrixXd::Zero(k, n);
  for (lapack_int j = 0; j < n; ++j)
    for (lapack_int i = 0; i <= std::min<lapack_int>(j, k - 1); ++i)
      out.R(i, j) = work(i, j);
  return out;
}

int PivotedQr::numerical_rank(double rank_tol) const {
  const int k = int(R.rows());
  if (k == 0) return 0;
  const double ref = std::abs(R(0, 0));
  if (ref == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < k; ++i)
    if (std::abs(R(i, i)) > rank_tol * ref) ++r;
  return r;
}

DataMatrix build_data_matrix(const Lifting& lifting, const ProblemSetup& setup,
                             const std::vector<PolyMatrix>& known,
                             double oversample, Rng& rng) {
  if (oversample <= 0)
    throw std::invalid_argument("oversample must be positive");
  LayoutPtr layout = lifting.layout(setup);
  const long n = vech_len(layout->dim());
  const int n_samples = int(std::ceil((1.0 + oversample) * double(n)));

  DataMatrix dm;
  dm.layout = layout;
  dm.n_samples = n_samples;
  dm.n_known = int(known.size());
  dm.Y.resize(n, n_samples + dm.n_known);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd x = lifting.sample_lifted(setup, rng);
    Eigen::VectorXd y = vech(Eigen::MatrixXd(x * x.transpose()));
    // Unit columns: lifted samples can be arbitrarily large near singular
    // configurations (e.g. a position approaching an anchor), and the
    // nullspace is scale invariant anyway.  Equal weights keep the QR
    // well conditioned.
    dm.Y.col(s) = y / y.norm();
  }
  for (int j = 0; j < dm.n_known; ++j) {
    Eigen::VectorXd a = vech(known[size_t(j)].dense());
    double scale = a.cwiseAbs().maxCoeff();
    dm.Y.col(n_samples + j) = a / (scale > 0 ? scale : 1.0);
  }
  return dm;
}

namespace {

// Scale each column so its largest-magnitude entry becomes +1.  Entries
// within a relative 1e-9 of the peak count as tied and the first of them
// decides the sign; otherwise rounding noise between a +1 and a -1 entry
// of equal size would make the output sign arbitrary.
void normalize_columns(Eigen::MatrixXd& V) {
  for (long j = 0; j < V.cols(); ++j) {
    const double best = V.col(j).cwiseAbs().maxCoeff();
    if (best <= 0) continue;
    for (long i = 0; i < V.rows(); ++i) {
      if (std::abs(V(i, j)) >= best * (1.0 - 1e-9)) {
        V.col(j) /= V(i, j);
        break;
      }
    }
  }
}

Eigen::VectorXd basis_residuals(const Eigen::MatrixXd& Y, int n_samples,
                                const Eigen::MatrixXd& basis) {
  Eigen::MatrixXd E =
      basis.transpose() * Y.leftCols(n_samples);  // N_n x N_s
  return E.cwiseAbs().rowwise().maxCoeff();
}

}  // namespace

std::pair<ConstraintBasis, PivotedQr> learn_nullspace(const DataMatrix& dm,
                                                      double rank_tol) {
  const long n = dm.Y.rows();
  if (dm.Y.cols() <= n)
    throw std::invalid_argument("data matrix needs more columns than rows");

  PivotedQr qr = pivoted_qr(dm.Y.transpose());
  int r = qr.numerical_rank(rank_tol);
  // guard the back-substitution against a nearly singular R1 corner
  while (r > 0 && std::abs(qr.R(r - 1, r - 1)) <
                      1e-14 * std::abs(qr.R(0, 0)) * double(n)) {
    --r;
  }
  const int nn = int(n) - r;

  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, nn);
  if (nn > 0) {
    Eigen::MatrixXd R1 = qr.R.topLeftCorner(r, r);
    Eigen::MatrixXd R2 = qr.R.block(0, r, r, nn);
    Eigen::MatrixXd top =
        R1.triangularView<Eigen::Upper>().solve(R2);  // r x nn
    for (int j = 0; j < nn; ++j) {
      for (int i = 0; i < r; ++i) basis(qr.perm[i], j) = top(i, j);
      basis(qr.perm[r + j], j) = -1.0;
    }
    normalize_columns(basis);
  }

  ConstraintBasis cb;
  cb.vectors = basis;
  cb.layout = dm.layout;
  cb.residuals = basis_residuals(dm.Y, dm.n_samples, basis);
  return {cb, qr};
}

std::pair<DataMatrix, ConstraintBasis> two_pass_refine(
    const DataMatrix& dm, const ConstraintBasis& basis, double rank_tol,
    double resid_tol) {
  double worst = basis.residuals.size() ? basis.residuals.maxCoeff() : 0.0;
  if (worst < resid_tol) return {dm, basis};

  // find the sample column with the largest violation across all vectors
  Eigen::MatrixXd E = basis.vectors.transpose() * dm.Y.leftCols(dm.n_samples);
  Eigen::Index drop_idx = 0;
  E.cwiseAbs().colwise().maxCoeff().maxCoeff(&drop_idx);
  const int drop = int(drop_idx);

  DataMatrix refined;
  refined.layout = dm.layout;
  refined.n_samples = dm.n_samples - 1;
  refined.n_known = dm.n_known;
  refined.Y.resize(dm.Y.rows(), dm.Y.cols() - 1);
  refined.Y.leftCols(drop) = dm.Y.leftCols(drop);
  refined.Y.rightCols(dm.Y.cols() - 1 - drop) =
      dm.Y.rightCols(dm.Y.cols() - 1 - drop);

  auto [cb, qr] = learn_nullspace(refined, rank_tol);
  (void)qr;
  double still = cb.residuals.size() ? cb.residuals.maxCoeff() : 0.0;
  if (still >= resid_tol) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "nullspace residual %.3e above tolerance after removing "
                  "sample %d",
                  still, drop);
    throw std::runtime_error(msg);
  }
  return {refined, cb};
}

std::vector<int> independent_subset(const std::vector<SparseVec>& vectors,
                                    double rank_tol, int n_priority) {
  if (vectors.empty()) return {};
  // collect the union support so the QR only sees rows that matter
  std::set<long> support;
  for (const auto& v : vectors)
    for (const auto& e : v.entries) support.insert(e.first);
  std::vector<long> rows(support.begin(), support.end());
  std::map<long, int> row_of;
  for (size_t i = 0; i < rows.size(); ++i) row_of[rows[i]] = int(i);

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(long(rows.size()), long(vectors.size()));
  for (size_t j = 0; j < vectors.size(); ++j)
    for (const auto& e : vectors[j].entries) M(row_of[e.first], long(j)) = e.second;
  return independent_subset_dense(M, rank_tol, n_priority);
}

std::vector<int> independent_subset_dense(const Eigen::MatrixXd& columns,
                                          double rank_tol, int n_priority) {
  if (columns.cols() == 0) return {};
  PivotedQr qr = pivoted_qr(columns, n_priority);
  int r = qr.numerical_rank(rank_tol);
  std::vector<int> keep(qr.perm.data(), qr.perm.data() + r);
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace ct
