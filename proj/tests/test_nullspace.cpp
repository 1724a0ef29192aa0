#include <cmath>

#include "certitight/nullspace.hpp"
#include "certitight/problems.hpp"
#include "doctest.h"

using namespace ct;

TEST_CASE("pivoted QR reveals rank and orders the diagonal") {
  Rng rng(2);
  Eigen::MatrixXd B(20, 4), C(4, 7);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 4; ++j) B(i, j) = rng.normal();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 7; ++j) C(i, j) = rng.normal();
  Eigen::MatrixXd A = B * C;  // rank 4
  PivotedQr qr = pivoted_qr(A);
  CHECK(qr.numerical_rank(1e-10) == 4);
  for (int i = 1; i < 4; ++i)
    CHECK(std::abs(qr.R(i, i)) <= std::abs(qr.R(i - 1, i - 1)) + 1e-12);
}

TEST_CASE("forced prefix columns are pivoted first") {
  Eigen::MatrixXd A(3, 3);
  A << 1, 0, 100, 0, 1, 0, 0, 0, 0;  // column 2 has the largest norm
  PivotedQr qr = pivoted_qr(A, 2);
  CHECK(qr.perm[0] < 2);
  CHECK(qr.perm[1] < 2);
}

TEST_CASE("stereo-1D fixture: data matrix shape and learned basis") {
  auto lifting = make_lifting("stereo1d");
  ProblemSetup s = stereo1d_fixture();
  Rng rng(7);
  DataMatrix dm = build_data_matrix(*lifting, s, {}, 0.2, rng);
  CHECK(dm.Y.rows() == 10);
  CHECK(dm.Y.cols() == 12);
  CHECK(dm.n_samples == 12);

  auto [basis, qr] = learn_nullspace(dm, 1e-12);
  CHECK(qr.numerical_rank(1e-12) == 7);
  REQUIRE(basis.vectors.cols() == 3);

  // residuals already clean on synthetic data; refine must be a no-op
  auto [dm2, basis2] = two_pass_refine(dm, basis, 1e-12);
  CHECK(dm2.n_samples == 12);
  CHECK(basis2.residuals.maxCoeff() < 1e-10);

  // every learned column normalized so the first near-peak entry is +1
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd col = basis.vectors.col(j);
    double peak = col.cwiseAbs().maxCoeff();
    CHECK(peak == doctest::Approx(1.0));
    for (int i = 0; i < col.size(); ++i)
      if (std::abs(col[i]) >= peak * (1.0 - 1e-9)) {
        CHECK(col[i] == doctest::Approx(1.0));
        break;
      }
  }
}

namespace {

// The three hand-derived redundant matrices of the two-landmark problem,
// in [h, theta, z1, z2] coordinates.
std::vector<Eigen::MatrixXd> fixture_patterns() {
  double m1 = 0.5488135039273248, m2 = 0.7151893663724195;
  double alpha = m2 - m1, beta = m2 / 2, gamma = m2 * (m2 - m1) / 2;
  auto sym = [](Eigen::MatrixXd M) {
    Eigen::MatrixXd S = M + M.transpose();
    for (int i = 0; i < M.rows(); ++i) S(i, i) = M(i, i);
    return S;
  };
  Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(4, 4);
  A1(0, 2) = -alpha;
  A1(1, 2) = -1;
  A1(1, 3) = 1;
  A1(2, 3) = -2 * gamma;
  Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(4, 4);
  A2(0, 2) = 1;
  A2(0, 3) = -1;
  A2(2, 3) = alpha;
  Eigen::MatrixXd A3 = Eigen::MatrixXd::Zero(4, 4);
  A3(0, 0) = 1;
  A3(0, 2) = beta;
  A3(1, 3) = -0.5;
  A3(2, 3) = gamma;
  return {sym(A1), sym(A2), sym(A3)};
}

// Same convention as the learner: first entry within a whisker of the
// peak magnitude becomes +1.
Eigen::MatrixXd peak_normalized(const Eigen::MatrixXd& M) {
  double best = M.cwiseAbs().maxCoeff();
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      if (std::abs(M(i, j)) >= best * (1.0 - 1e-9)) return M / M(i, j);
  return M;
}

}  // namespace

TEST_CASE("stereo-1D learned matrices match the hand-derived patterns") {
  // Which basis of the 3-dim annihilator the QR returns depends on the
  // pivot order and hence on the sample draw; this seed reproduces the
  // interpretable basis (see the sweep in the reproduction test binary).
  auto lifting = make_lifting("stereo1d");
  ProblemSetup s = stereo1d_fixture();
  Rng rng(13);
  DataMatrix dm = build_data_matrix(*lifting, s, {}, 0.2, rng);
  auto [basis, qr] = learn_nullspace(dm, 1e-12);
  (void)qr;
  REQUIRE(basis.vectors.cols() == 3);

  auto expected = fixture_patterns();
  std::vector<bool> used(3, false);
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd L = peak_normalized(vech_inv(basis.vectors.col(j)));
    bool matched = false;
    for (int k = 0; k < 3 && !matched; ++k) {
      if (used[size_t(k)]) continue;
      Eigen::MatrixXd E = peak_normalized(expected[size_t(k)]);
      if ((L - E).cwiseAbs().maxCoeff() < 1e-6) {
        used[size_t(k)] = true;
        matched = true;
      }
    }
    CHECK(matched);
  }
}

TEST_CASE("learned constraints hold on held-out samples") {
  auto lifting = make_lifting("stereo1d");
  ProblemSetup s = stereo1d_fixture();
  Rng rng(9);
  DataMatrix dm = build_data_matrix(*lifting, s, {}, 0.2, rng);
  auto [basis, qr] = learn_nullspace(dm, 1e-12);
  (void)qr;
  Rng fresh(1000);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd x = lifting->sample_lifted(s, fresh);
    Eigen::VectorXd y = vech(Eigen::MatrixXd(x * x.transpose()));
    y /= y.norm();  // kill the arbitrary sample scale before thresholding
    CHECK((basis.vectors.transpose() * y).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("known columns force orthogonality and are tagged last") {
  auto lifting = make_lifting("stereo1d");
  ProblemSetup s = stereo1d_fixture();
  auto known = lifting->known_constraints(s);
  REQUIRE(known.size() == 3);  // homogenization + one substitution per landmark
  // appending the substitutions (not the homogenization, which is no annihilator)
  std::vector<PolyMatrix> subs(known.begin() + 1, known.end());
  Rng rng(5);
  DataMatrix dm = build_data_matrix(*lifting, s, subs, 0.2, rng);
  CHECK(dm.Y.cols() == 14);
  CHECK(dm.n_known == 2);
  auto [basis, qr] = learn_nullspace(dm, 1e-12);
  (void)qr;
  // the two appended columns eat two of the three nullspace directions
  CHECK(basis.vectors.cols() == 1);
  for (int j = 0; j < basis.vectors.cols(); ++j)
    for (int k = 0; k < 2; ++k)
      CHECK(std::abs(basis.vectors.col(j).dot(dm.Y.col(12 + k))) < 1e-10);
}

TEST_CASE("two-pass refine removes an injected bad sample") {
  auto lifting = make_lifting("stereo1d");
  ProblemSetup s = stereo1d_fixture();
  Rng rng(11);
  // Generous oversampling: the violation of a single bad sample then stays
  // concentrated on its own column instead of being absorbed into the fit.
  DataMatrix dm = build_data_matrix(*lifting, s, {}, 4.0, rng);
  REQUIRE(dm.n_samples == 50);
  // A "bad" sample is one whose lift violates the constraints, i.e. it has
  // a component along the annihilator.  Keep it below the (loose) rank cut
  // so the nullspace dimension survives, but far above the residual floor.
  Eigen::VectorXd viol = vech(fixture_patterns()[1]);
  dm.Y.col(4) += 3e-8 * viol / viol.norm();
  auto [basis, qr] = learn_nullspace(dm, 1e-7);
  (void)qr;
  REQUIRE(basis.vectors.cols() == 3);
  CHECK(basis.residuals.maxCoeff() >= 1e-10);
  auto [dm2, basis2] = two_pass_refine(dm, basis, 1e-7);
  CHECK(dm2.n_samples == 49);
  CHECK(basis2.residuals.maxCoeff() < 1e-10);
}

TEST_CASE("independent_subset basics") {
  CHECK(independent_subset({}).empty());

  SparseVec a{{{0, 1.0}, {3, 2.0}}, 6};
  SparseVec b{{{1, 1.0}}, 6};
  SparseVec dup = a;
  auto keep = independent_subset({a, b, dup});
  CHECK(keep == std::vector<int>{0, 1});

  // priority flips which copy of a dependent pair survives
  auto keep2 = independent_subset({dup, b, a}, 1e-12, 1);
  CHECK(keep2 == std::vector<int>{0, 1});
}
