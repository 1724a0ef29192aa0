#include "certitight/conic.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ct {

void eig_sym(const Eigen::MatrixXd& M, Eigen::VectorXd& eigs,
             Eigen::MatrixXd& vecs) {
  const int n = int(M.rows());
  vecs = (M + M.transpose()) / 2.0;
  eigs.resize(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, vecs.data(), n,
                            eigs.data());
  if (info != 0) throw std::runtime_error("dsyevd failed");
  // LAPACK returns ascending; flip to descending
  eigs.reverseInPlace();
  vecs = vecs.rowwise().reverse().eval();
}

Eigen::VectorXd eig_vals(const Eigen::MatrixXd& M) {
  const int n = int(M.rows());
  Eigen::MatrixXd work = (M + M.transpose()) / 2.0;
  Eigen::VectorXd eigs(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n,
                            eigs.data());
  if (info != 0) throw std::runtime_error("dsyevd failed");
  eigs.reverseInPlace();
  return eigs;
}

namespace conic {

int ConeSpec::dim() const {
  int d = n_lin;
  for (int n : psd) d += n * (n + 1) / 2;
  return d;
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// svec packing for the cone blocks: row-major upper triangle, sqrt(2) on
// off-diagonal entries so plain dot products equal trace inner products.
void sv_pack(const Eigen::MatrixXd& M, double* out) {
  const int n = int(M.rows());
  long k = 0;
  for (int i = 0; i < n; ++i) {
    out[k++] = M(i, i);
    for (int j = i + 1; j < n; ++j)
      out[k++] = kSqrt2 * 0.5 * (M(i, j) + M(j, i));
  }
}

Eigen::MatrixXd sv_unpack(const double* v, int n) {
  Eigen::MatrixXd M(n, n);
  long k = 0;
  for (int i = 0; i < n; ++i) {
    M(i, i) = v[k++];
    for (int j = i + 1; j < n; ++j) {
      M(i, j) = v[k] / kSqrt2;
      M(j, i) = v[k] / kSqrt2;
      ++k;
    }
  }
  return M;
}

struct Block {
  long off;  // offset into the packed cone vector
  int n;     // matrix dimension
  long len() const { return long(n) * (n + 1) / 2; }
};

std::vector<Block> psd_blocks(const ConeSpec& cone) {
  std::vector<Block> bs;
  long off = cone.n_lin;
  for (int n : cone.psd) {
    bs.push_back({off, n});
    off += long(n) * (n + 1) / 2;
  }
  return bs;
}

// Any square factor F with F F' = M; tries Cholesky, falls back to a
// clamped eigendecomposition for nearly singular iterates.
Eigen::MatrixXd square_factor(const Eigen::MatrixXd& M) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::VectorXd ev;
  Eigen::MatrixXd V;
  eig_sym(M, ev, V);
  double top = std::max(ev.size() ? ev[0] : 1.0, 1e-300);
  Eigen::VectorXd clamped = ev.cwiseMax(1e-14 * top);
  return V * clamped.cwiseSqrt().asDiagonal();
}

// Nesterov-Todd scaling at the current (s, z).
struct Scaling {
  Eigen::VectorXd d;      // linear block: W^2 = diag(d), d = s/z
  Eigen::VectorXd lam_l;  // linear block scaled point sqrt(s z)
  std::vector<Eigen::MatrixXd> R, Rinv, T;  // per PSD block, T = (R R')^-1
  std::vector<Eigen::VectorXd> lam;         // per PSD block NT eigenvalues
};

Scaling compute_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                        const ConeSpec& cone,
                        const std::vector<Block>& blocks) {
  Scaling W;
  W.d = s.head(cone.n_lin).cwiseQuotient(z.head(cone.n_lin));
  W.lam_l = s.head(cone.n_lin).cwiseProduct(z.head(cone.n_lin)).cwiseSqrt();
  for (const Block& b : blocks) {
    Eigen::MatrixXd S = sv_unpack(s.data() + b.off, b.n);
    Eigen::MatrixXd Z = sv_unpack(z.data() + b.off, b.n);
    Eigen::MatrixXd Ls = square_factor(S);
    Eigen::MatrixXd Lz = square_factor(Z);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls,
                                       Eigen::ComputeFullU |
                                           Eigen::ComputeFullV);
    Eigen::VectorXd sig = svd.singularValues().cwiseMax(1e-150);
    Eigen::MatrixXd LzU = Lz * svd.matrixU();
    // R = Lz^-T U sig^1/2, R^-1 = sig^-1/2 U' Lz', (R R')^-1 = LzU sig^-1 LzU'
    Eigen::MatrixXd R = Lz.transpose().partialPivLu().solve(
        svd.matrixU() * sig.cwiseSqrt().asDiagonal());
    W.R.push_back(R);
    W.Rinv.push_back(sig.cwiseSqrt().cwiseInverse().asDiagonal() *
                     svd.matrixU().transpose() * Lz.transpose());
    W.T.push_back(LzU * sig.cwiseInverse().asDiagonal() * LzU.transpose());
    W.lam.push_back(sig);
  }
  return W;
}

enum class WOp { kW, kWt, kWinvT, kWtWinv };

// Apply one of the scaling maps blockwise. kW: svec(R' V R); kWt: svec(R V R');
// kWinvT: svec(R^-1 V R^-T); kWtWinv: svec(T V T) = (W'W)^-1 v.
Eigen::VectorXd apply_w(const Scaling& W, WOp op, const Eigen::VectorXd& v,
                        const ConeSpec& cone,
                        const std::vector<Block>& blocks) {
  Eigen::VectorXd out(v.size());
  switch (op) {
    case WOp::kW:
    case WOp::kWt:
      out.head(cone.n_lin) =
          v.head(cone.n_lin).cwiseProduct(W.d.cwiseSqrt());
      break;
    case WOp::kWinvT:
      out.head(cone.n_lin) =
          v.head(cone.n_lin).cwiseQuotient(W.d.cwiseSqrt());
      break;
    case WOp::kWtWinv:
      out.head(cone.n_lin) = v.head(cone.n_lin).cwiseQuotient(W.d);
      break;
  }
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Block& b = blocks[k];
    Eigen::MatrixXd V = sv_unpack(v.data() + b.off, b.n);
    Eigen::MatrixXd M;
    switch (op) {
      case WOp::kW:
        M = W.R[k].transpose() * V * W.R[k];
        break;
      case WOp::kWt:
        M = W.R[k] * V * W.R[k].transpose();
        break;
      case WOp::kWinvT:
        M = W.Rinv[k] * V * W.Rinv[k].transpose();
        break;
      case WOp::kWtWinv:
        M = W.T[k] * V * W.T[k];
        break;
    }
    sv_pack(M, out.data() + b.off);
  }
  return out;
}

// Solve lam o v = x in the scaled space (Jordan product against the
// diagonal scaled point).
Eigen::VectorXd jordan_solve(const Scaling& W, const Eigen::VectorXd& x,
                             const ConeSpec& cone,
                             const std::vector<Block>& blocks) {
  Eigen::VectorXd out(x.size());
  out.head(cone.n_lin) = x.head(cone.n_lin).cwiseQuotient(W.lam_l);
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Block& b = blocks[k];
    Eigen::MatrixXd X = sv_unpack(x.data() + b.off, b.n);
    const Eigen::VectorXd& lam = W.lam[k];
    for (int i = 0; i < b.n; ++i)
      for (int j = 0; j < b.n; ++j) X(i, j) = 2.0 * X(i, j) / (lam[i] + lam[j]);
    sv_pack(X, out.data() + b.off);
  }
  return out;
}

// Jordan product x o y of two scaled-space vectors.
Eigen::VectorXd jordan_prod(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const ConeSpec& cone,
                            const std::vector<Block>& blocks) {
  Eigen::VectorXd out(x.size());
  out.head(cone.n_lin) =
      x.head(cone.n_lin).cwiseProduct(y.head(cone.n_lin));
  for (const Block& b : blocks) {
    Eigen::MatrixXd X = sv_unpack(x.data() + b.off, b.n);
    Eigen::MatrixXd Y = sv_unpack(y.data() + b.off, b.n);
    Eigen::MatrixXd M = 0.5 * (X * Y + Y * X);
    sv_pack(M, out.data() + b.off);
  }
  return out;
}

// Identity element of the cone algebra.
Eigen::VectorXd cone_identity(const ConeSpec& cone,
                              const std::vector<Block>& blocks, long dim) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e.head(cone.n_lin).setOnes();
  for (const Block& b : blocks)
    sv_pack(Eigen::MatrixXd::Identity(b.n, b.n), e.data() + b.off);
  return e;
}

// Largest step alpha with lam + alpha * dir staying in the cone, where dir
// is given in the scaled space and lam is the current scaled point.
double step_to_boundary(const Scaling& W, const Eigen::VectorXd& dir,
                        const ConeSpec& cone,
                        const std::vector<Block>& blocks) {
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cone.n_lin; ++i)
    if (dir[i] < 0) alpha = std::min(alpha, -W.lam_l[i] / dir[i]);
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Block& b = blocks[k];
    Eigen::MatrixXd D = sv_unpack(dir.data() + b.off, b.n);
    Eigen::VectorXd li = W.lam[k].cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd M = li.asDiagonal() * D * li.asDiagonal();
    double emin = eig_vals(M).minCoeff();
    if (emin < 0) alpha = std::min(alpha, -1.0 / emin);
  }
  return alpha;
}

// Minimum cone eigenvalue of a packed vector (for initial shifts).
double cone_min_eig(const Eigen::VectorXd& v, const ConeSpec& cone,
                    const std::vector<Block>& blocks) {
  double m = std::numeric_limits<double>::infinity();
  if (cone.n_lin) m = v.head(cone.n_lin).minCoeff();
  for (const Block& b : blocks)
    m = std::min(m, eig_vals(sv_unpack(v.data() + b.off, b.n)).minCoeff());
  return m;
}

// Symmetric-indefinite factorization of the reduced KKT matrix
// [ M + dI   A' ; A  -dI ] via LAPACK Bunch-Kaufman.
struct KktFactor {
  Eigen::MatrixXd F;
  std::vector<lapack_int> ipiv;
  int n = 0;
  bool ok = false;

  void factor(const Eigen::MatrixXd& M, const Eigen::MatrixXd& A_eq,
              double delta) {
    const int p = int(M.rows()), m = int(A_eq.rows());
    n = p + m;
    F.setZero(n, n);
    F.topLeftCorner(p, p) = M;
    F.topLeftCorner(p, p).diagonal().array() += delta;
    if (m) {
      F.topRightCorner(p, m) = A_eq.transpose();
      F.bottomLeftCorner(m, p) = A_eq;
      F.bottomRightCorner(m, m).diagonal().setConstant(-delta);
    }
    ipiv.assign(size_t(n), 0);
    ok = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, F.data(), n, ipiv.data()) ==
         0;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = rhs;
    LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, F.data(), n, ipiv.data(),
                   x.data(), n);
    return x;
  }
};

}  // namespace

ConelpResult solve_conelp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A_eq,
                          const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& G,
                          const Eigen::VectorXd& h, const ConeSpec& cone,
                          const SolveOptions& opts) {
  const long p = c.size();
  const long m_eq = A_eq.rows();
  const long nc = cone.dim();
  if (G.rows() != nc || G.cols() != p)
    throw std::invalid_argument("solve_conelp: G shape mismatch");
  if (m_eq && A_eq.cols() != p)
    throw std::invalid_argument("solve_conelp: A_eq shape mismatch");

  const std::vector<Block> blocks = psd_blocks(cone);
  long deg = cone.n_lin;
  for (int nk : cone.psd) deg += nk;
  const Eigen::VectorXd e = cone_identity(cone, blocks, nc);

  ConelpResult res;
  res.status = "numerical-failure";

  // --- initial point: least-norm primal/dual from the W = I KKT system ---
  Eigen::MatrixXd M0 = G.transpose() * G;
  // regularization pinned to the data scale; the scaled Schur diagonal
  // blows up like 1/mu near convergence and must not drag delta with it
  const double delta = 1e-10 * (1.0 + M0.diagonal().cwiseAbs().maxCoeff());
  KktFactor kkt;
  kkt.factor(M0, A_eq, delta);
  if (!kkt.ok) return res;

  Eigen::VectorXd rhs(p + m_eq), sol;
  rhs.head(p) = G.transpose() * h;
  if (m_eq) rhs.tail(m_eq) = b_eq;
  sol = kkt.solve(rhs);
  Eigen::VectorXd u = sol.head(p);
  Eigen::VectorXd y_eq = m_eq ? Eigen::VectorXd(sol.tail(m_eq))
                              : Eigen::VectorXd();
  Eigen::VectorXd s = h - G * u;
  double smin = cone_min_eig(s, cone, blocks);
  if (smin < 1e-8) s += (1.0 - smin) * e;

  rhs.head(p) = -c;
  if (m_eq) rhs.tail(m_eq).setZero();
  sol = kkt.solve(rhs);
  Eigen::VectorXd z = G * sol.head(p);
  double zmin = cone_min_eig(z, cone, blocks);
  if (zmin < 1e-8) z += (1.0 - zmin) * e;

  const double bnorm = m_eq ? b_eq.norm() : 0.0;
  const double hnorm = h.norm();
  const double cnorm = c.norm();

  auto finish = [&](const char* status) {
    res.u = u;
    res.s = s;
    res.z = z;
    res.y_eq = y_eq;
    res.status = status;
    return res;
  };

  // best iterate seen so far, by worst-of-three merit
  struct Best {
    Eigen::VectorXd u, s, z, y_eq;
    double pobj = 0, dobj = 0, gap = 0, res_pri = 0, res_dual = 0;
    double merit = std::numeric_limits<double>::infinity();
  } best;
  double best_sum = std::numeric_limits<double>::infinity();
  int last_improve = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    res.iters = iter;
    // residuals
    Eigen::VectorXd r_u = c + G.transpose() * z;
    if (m_eq) r_u += A_eq.transpose() * y_eq;
    Eigen::VectorXd r_y =
        m_eq ? Eigen::VectorXd(A_eq * u - b_eq) : Eigen::VectorXd();
    Eigen::VectorXd r_z = G * u + s - h;

    const double gap = s.dot(z);
    const double pobj = c.dot(u);
    const double dobj = -(m_eq ? b_eq.dot(y_eq) : 0.0) - h.dot(z);
    res.pobj = pobj;
    res.dobj = dobj;
    res.gap = gap;
    res.res_pri = std::max(m_eq ? r_y.norm() / (1 + bnorm) : 0.0,
                           r_z.norm() / (1 + hnorm));
    res.res_dual = r_u.norm() / (1 + cnorm);
    const double relgap = std::abs(gap) / std::max(1.0, std::abs(pobj));

    const double merit = std::max({res.res_pri, res.res_dual, relgap});
    if (merit < best.merit) {
      best = {u, s, z, y_eq, pobj, dobj, gap, res.res_pri, res.res_dual,
              merit};
    }
    const double msum = res.res_pri + res.res_dual + relgap;
    if (msum < 0.99 * best_sum) {
      best_sum = msum;
      last_improve = iter;
    }

    if (res.res_pri <= opts.tol_feas && res.res_dual <= opts.tol_feas &&
        relgap <= opts.tol_gap)
      return finish("optimal");
    // near the numerical floor, extra iterations only churn; give up once
    // nothing has improved for a while
    if (iter - last_improve > 12) break;

    // scaling at the current iterate
    Scaling W = compute_scaling(s, z, cone, blocks);
    const double mu = gap / double(deg);

    // Schur complement M0 = G' (W'W)^-1 G, then the saddle factorization
    Eigen::MatrixXd WG(nc, p);
    for (long j = 0; j < p; ++j)
      WG.col(j) = apply_w(W, WOp::kWtWinv, G.col(j), cone, blocks);
    M0.noalias() = G.transpose() * WG;
    kkt.factor(M0, A_eq, delta);
    if (!kkt.ok) break;

    // scaled point lambda as a packed vector
    Eigen::VectorXd lam_vec(nc);
    lam_vec.head(cone.n_lin) = W.lam_l;
    for (size_t k = 0; k < blocks.size(); ++k) {
      Eigen::MatrixXd L = W.lam[k].asDiagonal();
      sv_pack(L, lam_vec.data() + blocks[k].off);
    }

    auto solve_direction = [&](const Eigen::VectorXd& d_compl,
                               Eigen::VectorXd& du, Eigen::VectorXd& dy,
                               Eigen::VectorXd& dz, Eigen::VectorXd& ds) {
      Eigen::VectorXd wldc = apply_w(
          W, WOp::kWt, jordan_solve(W, d_compl, cone, blocks), cone, blocks);
      Eigen::VectorXd rz_hat = r_z + wldc;
      Eigen::VectorXd full_rhs(p + m_eq);
      full_rhs.head(p) =
          -r_u - G.transpose() *
                     apply_w(W, WOp::kWtWinv, rz_hat, cone, blocks);
      if (m_eq) full_rhs.tail(m_eq) = -r_y;
      Eigen::VectorXd x = kkt.solve(full_rhs);
      if (opts.refine) {
        // refinement against the unregularized operator
        for (int pass = 0; pass < 2; ++pass) {
          Eigen::VectorXd resid(p + m_eq);
          resid.head(p) = full_rhs.head(p) - M0 * x.head(p);
          if (m_eq) {
            resid.head(p) -= A_eq.transpose() * x.tail(m_eq);
            resid.tail(m_eq) = full_rhs.tail(m_eq) - A_eq * x.head(p);
          }
          x += kkt.solve(resid);
        }
      }
      du = x.head(p);
      dy = m_eq ? Eigen::VectorXd(x.tail(m_eq)) : Eigen::VectorXd();
      // building dz from the cached scaled columns keeps G'dz consistent
      // with the Schur matrix the reduced solve used
      dz = WG * du + apply_w(W, WOp::kWtWinv, rz_hat, cone, blocks);
      ds = -r_z - G * du;
    };

    // predictor (affine) direction
    Eigen::VectorXd d_compl =
        -jordan_prod(lam_vec, lam_vec, cone, blocks);
    Eigen::VectorXd du, dy, dz, ds;
    solve_direction(d_compl, du, dy, dz, ds);

    Eigen::VectorXd dz_sc = apply_w(W, WOp::kW, dz, cone, blocks);
    Eigen::VectorXd ds_sc = apply_w(W, WOp::kWinvT, ds, cone, blocks);
    double a_max = std::min(step_to_boundary(W, ds_sc, cone, blocks),
                            step_to_boundary(W, dz_sc, cone, blocks));
    double a_aff = std::min(1.0, a_max);
    double mu_aff = (lam_vec + a_aff * ds_sc).dot(lam_vec + a_aff * dz_sc) /
                    double(deg);
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // corrector
    d_compl = -jordan_prod(lam_vec, lam_vec, cone, blocks) -
              jordan_prod(ds_sc, dz_sc, cone, blocks) + sigma * mu * e;
    solve_direction(d_compl, du, dy, dz, ds);

    dz_sc = apply_w(W, WOp::kW, dz, cone, blocks);
    ds_sc = apply_w(W, WOp::kWinvT, ds, cone, blocks);
    a_max = std::min(step_to_boundary(W, ds_sc, cone, blocks),
                     step_to_boundary(W, dz_sc, cone, blocks));
    double alpha = std::min(1.0, 0.99 * a_max);
    if (alpha < 1e-13) break;  // stalled

    u += alpha * du;
    if (m_eq) y_eq += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;
    res.iters = iter + 1;
  }

  // primal infeasibility certificate from the last iterate:
  // A'y + G'z ~ 0 with -b'y - h'z > 0
  {
    double viol = -(m_eq ? b_eq.dot(y_eq) : 0.0) - h.dot(z);
    Eigen::VectorXd cert = G.transpose() * z;
    if (m_eq) cert += A_eq.transpose() * y_eq;
    if (viol > 0 && cert.norm() / viol < 1e-6 &&
        best.merit > opts.near_feas)
      return finish("infeasible");
  }

  // otherwise report the best iterate seen
  if (std::isfinite(best.merit)) {
    u = best.u;
    s = best.s;
    z = best.z;
    y_eq = best.y_eq;
    res.pobj = best.pobj;
    res.dobj = best.dobj;
    res.gap = best.gap;
    res.res_pri = best.res_pri;
    res.res_dual = best.res_dual;
  }
  const double relgap = std::abs(res.gap) / std::max(1.0, std::abs(res.pobj));
  if (res.res_pri <= opts.tol_feas && res.res_dual <= opts.tol_feas &&
      relgap <= opts.tol_gap)
    return finish("optimal");
  if (res.res_pri <= opts.near_feas && res.res_dual <= opts.near_feas &&
      relgap <= opts.near_gap)
    return finish("near-optimal");
  return finish("numerical-failure");
}

}  // namespace conic

// --- SDP-level casts ---------------------------------------------------------

namespace {

// G column = -svec(A_i) packed with the conic convention.
Eigen::VectorXd neg_svec(const Eigen::MatrixXd& A) {
  const int n = int(A.rows());
  Eigen::VectorXd v(long(n) * (n + 1) / 2);
  long k = 0;
  for (int i = 0; i < n; ++i) {
    v[k++] = -A(i, i);
    for (int j = i + 1; j < n; ++j)
      v[k++] = -conic::kSqrt2 * 0.5 * (A(i, j) + A(j, i));
  }
  return v;
}

// Cost matrices can dwarf the (peak-normalized) constraint matrices by a few
// orders of magnitude, which wrecks the interior-point residuals.  Every cast
// below solves with Q/qscale and maps the results back to the caller's units.
double q_scale(const Eigen::MatrixXd& Q) {
  return Q.size() ? std::max(1.0, Q.cwiseAbs().maxCoeff()) : 1.0;
}

}  // namespace

SdpSolution solve_primal(const SdpProblem& prob,
                         const conic::SolveOptions& opts) {
  const int n = int(prob.Q.rows());
  const int m = int(prob.A.size()) - 1;  // beyond the homogenization
  if (m < 0) throw std::invalid_argument("solve_primal: missing A[0]");
  const long nsv = long(n) * (n + 1) / 2;

  const double qs = q_scale(prob.Q);

  Eigen::VectorXd c = Eigen::VectorXd::Zero(1 + m);
  c[0] = 1.0;  // minimize rho; the relaxation value is -rho at the optimum
  Eigen::MatrixXd G(nsv, 1 + m);
  for (int i = 0; i <= m; ++i) G.col(i) = neg_svec(prob.A[size_t(i)]);
  Eigen::VectorXd h(nsv);
  {
    Eigen::VectorXd qv = neg_svec(prob.Q / qs);
    h = -qv;
  }
  conic::ConeSpec cone;
  cone.psd = {n};

  conic::ConelpResult r = conic::solve_conelp(
      c, Eigen::MatrixXd(0, 1 + m), Eigen::VectorXd(), G, h, cone, opts);

  // rho and lambda multiply the same constraint matrices in the scaled and
  // the original problem, so they pick up the factor qs; X is the conelp
  // dual variable and is unaffected by scaling the objective.
  SdpSolution out;
  out.status = r.status;
  out.iters = r.iters;
  out.res_pri = r.res_pri;
  out.res_dual = r.res_dual;
  out.gap = r.gap * qs;
  out.rho = r.u.size() ? r.u[0] * qs : 0.0;
  out.lambda =
      r.u.size() ? Eigen::VectorXd(qs * r.u.tail(m)) : Eigen::VectorXd();
  if (r.z.size()) {
    out.X = conic::sv_unpack(r.z.data(), n);
    out.p_star = (prob.Q.cwiseProduct(out.X)).sum();
  }
  out.d_star = -r.pobj * qs;
  return out;
}

Certificate certify(const SdpProblem& prob, const Eigen::VectorXd& xhat,
                    double eps_max, bool bound_full_h,
                    const conic::SolveOptions& opts) {
  const int n = int(prob.Q.rows());
  const int m = int(prob.A.size()) - 1;
  if (xhat.size() != n)
    throw std::invalid_argument("certify: xhat dimension mismatch");
  const long nsv = long(n) * (n + 1) / 2;
  const double s0 = 1.0 + prob.Q.norm();
  // Solve in variables (rho, lambda)/qs so the PSD block stays well scaled;
  // the row scaling qs/s0 keeps eps in the caller's units exactly.
  const double qs = q_scale(prob.Q);

  // stationarity rows: either on H*xhat (n of them) or on every entry of H
  std::vector<Eigen::VectorXd> rows;   // coefficient against (rho, lambda)
  std::vector<double> rhs;             // the -Q part
  if (!bound_full_h) {
    Eigen::MatrixXd AX(n, m + 1);
    for (int i = 0; i <= m; ++i) AX.col(i) = prob.A[size_t(i)] * xhat;
    Eigen::VectorXd qx = prob.Q * xhat;
    for (int j = 0; j < n; ++j) {
      rows.push_back(AX.row(j).transpose() * (qs / s0));
      rhs.push_back(-qx[j] / s0);
    }
  } else {
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) {
        Eigen::VectorXd row(m + 1);
        for (int i = 0; i <= m; ++i) row[i] = prob.A[size_t(i)](k, l);
        rows.push_back(row * (qs / s0));
        rhs.push_back(-prob.Q(k, l) / s0);
      }
  }

  const int nrow = int(rows.size());
  const long n_lin = 2L * nrow;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m + 2);
  c[m + 1] = 1.0;  // minimize eps
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n_lin + nsv, m + 2);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n_lin + nsv);
  for (int j = 0; j < nrow; ++j) {
    G.block(2 * j, 0, 1, m + 1) = rows[size_t(j)].transpose();
    G(2 * j, m + 1) = -1.0;
    h[2 * j] = rhs[size_t(j)];
    G.block(2 * j + 1, 0, 1, m + 1) = -rows[size_t(j)].transpose();
    G(2 * j + 1, m + 1) = -1.0;
    h[2 * j + 1] = -rhs[size_t(j)];
  }
  for (int i = 0; i <= m; ++i)
    G.col(i).tail(nsv) = neg_svec(prob.A[size_t(i)]);
  h.tail(nsv) = -neg_svec(prob.Q / qs);

  conic::ConeSpec cone;
  cone.n_lin = int(n_lin);
  cone.psd = {n};
  conic::ConelpResult r = conic::solve_conelp(
      c, Eigen::MatrixXd(0, m + 2), Eigen::VectorXd(), G, h, cone, opts);

  Certificate cert;
  cert.status = r.status;
  if (r.u.size()) {
    cert.rho = r.u[0] * qs;
    cert.lambda = qs * r.u.segment(1, m);
    cert.eps = r.u[m + 1];
    Eigen::MatrixXd H = conic::sv_unpack(r.s.data() + n_lin, n);
    cert.h_eigs = qs * eig_vals(H);  // spectrum of the unscaled dual matrix
  }
  const bool solved = r.status == "optimal" || r.status == "near-optimal";
  const double min_eig = cert.h_eigs.size() ? cert.h_eigs.minCoeff() : -1.0;
  if (!solved) {
    cert.reason = "solver status: " + r.status;
  } else if (cert.eps > eps_max) {
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "stationarity residual %.3e above the %.1e bound", cert.eps,
                  eps_max);
    cert.reason = buf;
  } else if (min_eig < -1e-8) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "dual matrix eigenvalue %.3e below zero",
                  min_eig);
    cert.reason = buf;
  } else {
    cert.certified = true;
  }
  return cert;
}

Eigen::VectorXd solve_l1_reduction(const SdpProblem& prob,
                                   const Eigen::VectorXd& xhat,
                                   const std::vector<int>& reducible) {
  const int n = int(prob.Q.rows());
  const int m = int(prob.A.size()) - 1;
  if (xhat.size() != n)
    throw std::invalid_argument("solve_l1_reduction: xhat dimension mismatch");
  std::vector<char> is_red(size_t(m), 0);
  for (int i : reducible) {
    if (i < 0 || i >= m)
      throw std::invalid_argument("solve_l1_reduction: reducible index");
    is_red[size_t(i)] = 1;
  }
  const int mr = int(reducible.size());
  const long nsv = long(n) * (n + 1) / 2;
  const double s0 = 1.0 + prob.Q.norm();
  // Solved in lambda/qs; that rescales the whole l1 objective uniformly, so
  // the magnitude ordering the caller wants is untouched.
  const double qs = q_scale(prob.Q);

  // u = (rho, lambda_1..m, t_1..mr); minimize sum t
  const long p = 1 + m + mr;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  c.tail(mr).setOnes();

  // stationarity equalities H xhat = 0 (scaled)
  Eigen::MatrixXd A_eq = Eigen::MatrixXd::Zero(n, p);
  for (int i = 0; i <= m; ++i)
    A_eq.col(i) = (prob.A[size_t(i)] * xhat) / s0;
  Eigen::VectorXd b_eq = -(prob.Q * xhat) / (qs * s0);

  // |lambda_i| <= t_i rows for the reducible constraints, then H PSD
  const long n_lin = 2L * mr;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n_lin + nsv, p);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n_lin + nsv);
  for (int k = 0; k < mr; ++k) {
    const long lam_col = 1 + reducible[size_t(k)];
    const long t_col = 1 + m + k;
    G(2 * k, lam_col) = 1.0;
    G(2 * k, t_col) = -1.0;
    G(2 * k + 1, lam_col) = -1.0;
    G(2 * k + 1, t_col) = -1.0;
  }
  for (int i = 0; i <= m; ++i)
    G.col(i).tail(nsv) = neg_svec(prob.A[size_t(i)]);
  h.tail(nsv) = -neg_svec(prob.Q / qs);

  conic::ConeSpec cone;
  cone.n_lin = int(n_lin);
  cone.psd = {n};
  conic::SolveOptions opts;
  opts.tol_feas = 1e-7;
  opts.tol_gap = 1e-6;
  opts.near_feas = 1e-4;  // the lambdas only feed an ordering
  opts.near_gap = 1e-1;
  conic::ConelpResult r = conic::solve_conelp(c, A_eq, b_eq, G, h, cone, opts);
  if (r.status == "infeasible" || r.status == "numerical-failure")
    throw std::runtime_error("l1 reduction subproblem failed: " + r.status);
  return qs * r.u.segment(1, m);
}

}  // namespace ct