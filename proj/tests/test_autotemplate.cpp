#include <cmath>

#include "certitight/autotemplate.hpp"
#include "certitight/problems.hpp"

#include "doctest.h"

using namespace ct;

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += " ";
    out += n;
  }
  return out;
}

// sine of the largest principal angle between equal-dimension column spans
double span_gap(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  REQUIRE(A.cols() == B.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qa(A);
  Eigen::HouseholderQR<Eigen::MatrixXd> qb(B);
  Eigen::MatrixXd Qa =
      qa.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd Qb =
      qb.householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Qa.transpose() * Qb);
  double cmin = svd.singularValues().minCoeff();
  return std::sqrt(std::max(0.0, 1.0 - cmin * cmin));
}

Eigen::MatrixXd stack_templates(const std::vector<Template>& ts) {
  REQUIRE(!ts.empty());
  Eigen::MatrixXd M(ts[0].mataug.size(), long(ts.size()));
  for (size_t i = 0; i < ts.size(); ++i)
    M.col(long(i)) = Eigen::Map<const Eigen::VectorXd>(ts[i].mataug.data(),
                                                       ts[i].mataug.size());
  return M;
}

}  // namespace

TEST_CASE("variable set sequence orders by size then type mixing") {
  auto l = make_lifting("stereo1d");
  ProblemSetup s = l->generate(1, 3, 0, 1e-3, 0);
  auto seq = variable_set_sequence(*l, s, 4);
  REQUIRE(seq.size() == 6);
  CHECK(join(seq[0].variables) == "h theta");
  CHECK(join(seq[1].variables) == "h z_1");
  CHECK(join(seq[2].variables) == "h theta z_1");
  CHECK(join(seq[3].variables) == "h z_1 z_2");
  CHECK(join(seq[4].variables) == "h theta z_1 z_2");
  CHECK(join(seq[5].variables) == "h z_1 z_2 z_3");
  CHECK(join(seq[1].param_keys) == "1 m1");
  CHECK(join(seq[2].param_keys) == "1 m1");
  CHECK(join(seq[3].param_keys) == "1 m1 m2");

  auto ro = make_lifting("roloc-y");
  ProblemSetup rs = ro->generate(3, 2, 6, 1e-2, 0);
  auto rseq = variable_set_sequence(*ro, rs, 3);
  REQUIRE(rseq.size() == 5);
  CHECK(join(rseq[0].variables) == "h theta_1");
  CHECK(join(rseq[1].variables) == "h y_1");
  CHECK(join(rseq[2].variables) == "h theta_1 y_1");
  CHECK(join(rseq[3].variables) == "h theta_1 theta_2");
  CHECK(join(rseq[4].variables) == "h y_1 y_2");
  for (const auto& set : rseq) CHECK(join(set.param_keys) == "1");
}

TEST_CASE("substitution template learned on its home set") {
  auto l = make_lifting("stereo1d");
  ProblemSetup s = l->generate(1, 2, 0, 1e-3, 3);
  auto seq = variable_set_sequence(*l, s, 3);

  Rng rng = Rng::split(5, 0xA0);
  CHECK(learn_templates(*l, s, seq[0], {}, 1e-12, 0.2, rng).empty());
  CHECK(learn_templates(*l, s, seq[1], {}, 1e-12, 0.2, rng).empty());
  auto subs = learn_templates(*l, s, seq[2], {}, 1e-12, 0.2, rng);
  REQUIRE(subs.size() == 1);

  // collinear with the hand-written substitution template
  Template known = l->known_templates()[1];
  REQUIRE(known.mataug.rows() == subs[0].mataug.rows());
  Eigen::Map<const Eigen::VectorXd> a(subs[0].mataug.data(),
                                      subs[0].mataug.size());
  Eigen::Map<const Eigen::VectorXd> b(known.mataug.data(), known.mataug.size());
  double cosang = std::abs(a.dot(b)) / (a.norm() * b.norm());
  CHECK(cosang == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pair template emerges once the substitution is carried") {
  auto l = make_lifting("stereo1d");
  ProblemSetup s = l->generate(1, 2, 0, 1e-3, 3);
  VariableSet set;
  set.variables = {"h", "theta", "z_1", "z_2"};
  set.param_keys = {"1", "m1", "m2"};

  Rng rng0 = Rng::split(6, 0xA1);
  auto all = learn_templates(*l, s, set, {}, 1e-12, 0.2, rng0);
  CHECK(all.size() == 3);  // two substitutions and the pair relation

  Rng rng = Rng::split(6, 0xA2);
  std::vector<Template> carried = {l->known_templates()[1]};
  auto pair = learn_templates(*l, s, set, carried, 1e-12, 0.2, rng);
  REQUIRE(pair.size() == 1);

  // h z_1 - h z_2 = (m1 - m2) z_1 z_2 up to a global sign. vech layout of
  // {h, theta, z_1, z_2}: hz_1 -> 2, hz_2 -> 3, z_1 z_2 -> 8.
  const Eigen::MatrixXd& M = pair[0].mataug;
  REQUIRE(M.rows() == 10);
  REQUIRE(M.cols() == 3);
  double sgn = M(2, 0) > 0 ? 1.0 : -1.0;
  CHECK(sgn * M(2, 0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sgn * M(3, 0) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(sgn * M(8, 1) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(sgn * M(8, 2) == doctest::Approx(1.0).epsilon(1e-7));
  double named = M.cwiseAbs()(2, 0) + M.cwiseAbs()(3, 0) + M.cwiseAbs()(8, 1) +
                 M.cwiseAbs()(8, 2);
  CHECK(M.cwiseAbs().sum() == doctest::Approx(named).epsilon(1e-7));
}

TEST_CASE("range-only minors then mixed relations") {
  auto l = make_lifting("roloc-y");
  ProblemSetup s = l->generate(3, 2, 6, 1e-2, 7);
  auto seq = variable_set_sequence(*l, s, 3);

  Rng rng = Rng::split(7, 0xB0);
  CHECK(learn_templates(*l, s, seq[0], {}, 1e-12, 0.2, rng).empty());
  auto minors = learn_templates(*l, s, seq[1], {}, 1e-12, 0.2, rng);
  CHECK(minors.size() == 6);
  auto mixed = learn_templates(*l, s, seq[2], minors, 1e-12, 0.2, rng);
  CHECK(mixed.size() == 14);

  // without the carried minors the whole 20-dimensional space reappears
  Rng rng2 = Rng::split(7, 0xB1);
  auto full = learn_templates(*l, s, seq[2], {}, 1e-12, 0.2, rng2);
  CHECK(full.size() == 20);
}

TEST_CASE("autotemplate on range-only terminates at the mixed set") {
  auto l = make_lifting("roloc-y");
  ProblemSetup s = l->generate(3, 3, 10, 1e-2, 0);
  AutotemplateOptions opts;
  opts.seed = 0;
  AutotemplateResult res = autotemplate(*l, s, opts);

  REQUIRE(res.lib.sets.size() == 3);
  CHECK(res.lib.sets[0].templates.empty());
  CHECK(res.lib.sets[1].templates.size() == 6);
  CHECK(res.lib.sets[2].templates.size() == 14);
  CHECK(res.lib.n_templates() == 20);
  CHECK(res.terminal_set == "h theta_1 y_1");
  CHECK(res.report.cost_tight);
  CHECK(res.report.rank_tight);
  CHECK(res.applied.constraints.size() == 61);  // homogenization + 20 per position
  CHECK(res.applied.n_always_on == 1);

  // applied instantiations annihilate fresh feasible samples at a larger size
  ProblemSetup target = l->generate(3, 5, 10, 1e-2, 11);
  AppliedConstraints applied = apply_templates(res.lib, *l, target);
  CHECK(applied.constraints.size() == 101);  // 1 + 20 * 5
  Rng rng = Rng::split(123, 0xC0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd x = l->sample_lifted(target, rng);
    for (size_t j = 1; j < applied.constraints.size(); ++j) {
      double v = std::abs(x.dot(applied.constraints[j].dense() * x));
      worst = std::max(worst, v);
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("autotemplate on stereo-1d stops at the pair set") {
  auto l = make_lifting("stereo1d");
  ProblemSetup s = l->generate(1, 2, 0, 1e-3, 0);
  AutotemplateOptions opts;
  opts.seed = 2;
  AutotemplateResult res = autotemplate(*l, s, opts);

  REQUIRE(res.lib.sets.size() == 4);
  CHECK(res.lib.sets[0].templates.empty());
  CHECK(res.lib.sets[1].templates.empty());
  CHECK(res.lib.sets[2].templates.size() == 1);
  CHECK(res.lib.sets[3].templates.size() == 1);
  CHECK(res.terminal_set == "h z_1 z_2");
  CHECK(res.report.cost_tight);
  CHECK(!res.report.rank_tight);  // two-landmark optimum keeps rank two
  CHECK(res.applied.n_always_on == 3);
  CHECK(res.applied.constraints.size() == 4);
  CHECK(res.local.q_hat == doctest::Approx(0.06857).epsilon(1e-3));
}

TEST_CASE("templates are free of the training data") {
  auto l = make_lifting("stereo1d");
  VariableSet set;
  set.variables = {"h", "theta", "z_1", "z_2"};
  set.param_keys = {"1", "m1", "m2"};
  ProblemSetup s1 = l->generate(1, 2, 0, 1e-3, 21);
  ProblemSetup s2 = l->generate(1, 3, 0, 1e-2, 99);
  Rng r1 = Rng::split(1, 0xD0);
  Rng r2 = Rng::split(2, 0xD1);
  auto t1 = learn_templates(*l, s1, set, {}, 1e-12, 0.2, r1);
  auto t2 = learn_templates(*l, s2, set, {}, 1e-12, 0.2, r2);
  REQUIRE(t1.size() == t2.size());
  CHECK(span_gap(stack_templates(t1), stack_templates(t2)) < 1e-7);

  auto ro = make_lifting("roloc-y");
  VariableSet rset;
  rset.variables = {"h", "theta_1", "y_1"};
  rset.param_keys = {"1"};
  ProblemSetup q1 = ro->generate(3, 2, 6, 1e-2, 21);
  ProblemSetup q2 = ro->generate(3, 3, 10, 5e-3, 99);
  Rng r3 = Rng::split(3, 0xD2);
  Rng r4 = Rng::split(4, 0xD3);
  auto u1 = learn_templates(*ro, q1, rset, {}, 1e-12, 0.2, r3);
  auto u2 = learn_templates(*ro, q2, rset, {}, 1e-12, 0.2, r4);
  REQUIRE(u1.size() == 20);
  REQUIRE(u2.size() == 20);
  CHECK(span_gap(stack_templates(u1), stack_templates(u2)) < 1e-7);
}

TEST_CASE("empty library applies to just the known constraints") {
  auto l = make_lifting("roloc-z");
  ProblemSetup s = l->generate(3, 2, 6, 1e-2, 5);
  TemplateLibrary lib;
  lib.family = "roloc-z";
  AppliedConstraints applied = apply_templates(lib, *l, s);
  CHECK(applied.constraints.size() == 1);
  CHECK(applied.n_always_on == 1);

  TemplateLibrary wrong;
  wrong.family = "stereo1d";
  CHECK_THROWS_AS(apply_templates(wrong, *l, s), std::invalid_argument);
}

TEST_CASE("reduction keeps a cost-tight prefix") {
  auto l = make_lifting("roloc-y");
  ProblemSetup s = l->generate(3, 3, 10, 1e-2, 0);
  AutotemplateOptions opts;
  opts.seed = 0;
  opts.reduce = true;
  AutotemplateResult res = autotemplate(*l, s, opts);
  REQUIRE(res.report.cost_tight);
  REQUIRE(res.lib.has_reduction);

  const auto& red = res.lib.reduction;
  CHECK(red.order.size() == 60);
  CHECK(red.prefix_cost >= 1);
  CHECK(red.prefix_cost <= 30);
  CHECK(red.prefix_rank >= red.prefix_cost);
  CHECK(red.prefix_rank <= 45);

  // soundness: the returned prefix really is cost-tight
  SdpProblem prob;
  prob.Q = l->build_cost(s).dense();
  for (int i = 0; i < res.applied.n_always_on; ++i)
    prob.A.push_back(res.applied.constraints[size_t(i)].dense());
  for (int k = 0; k < red.prefix_cost; ++k)
    prob.A.push_back(
        res.applied.constraints[size_t(red.order[size_t(k)])].dense());
  SdpSolution sol = solve_primal(prob);
  CHECK(compute_rdg(res.local.q_hat, sol.d_star) < kCostTightRdg);

  // and one constraint fewer is not (minimality at the bisection boundary)
  if (red.prefix_cost > 1) {
    SdpProblem less = prob;
    less.A.pop_back();
    SdpSolution weak = solve_primal(less);
    CHECK(compute_rdg(res.local.q_hat, weak.d_star) >= kCostTightRdg);
  }
}

TEST_CASE("direct range-only is rank-tight before any templates") {
  auto l = make_lifting("roloc-z");
  ProblemSetup s = l->generate(3, 2, 8, 1e-2, 4);
  AutotemplateOptions opts;
  opts.seed = 4;
  opts.reduce = true;
  AutotemplateResult res = autotemplate(*l, s, opts);
  REQUIRE(res.report.cost_tight);
  CHECK(res.terminal_set == "h theta_1 z_1");
  CHECK(res.lib.n_templates() == 1);
  CHECK(res.applied.constraints.size() == 3);  // homogenization + one per position

  const auto& red = res.lib.reduction;
  CHECK(red.order.size() == 2);
  // the squared-range cost already pins a rank-one optimizer on its own
  CHECK(red.prefix_rank == 0);
  CHECK(red.prefix_cost >= 1);

  // minimality at the bisection boundary
  SdpProblem prob;
  prob.Q = l->build_cost(s).dense();
  prob.A.push_back(res.applied.constraints[0].dense());
  for (int k = 0; k + 1 < red.prefix_cost; ++k)
    prob.A.push_back(
        res.applied.constraints[size_t(red.order[size_t(k)])].dense());
  SdpSolution below = solve_primal(prob);
  CHECK(compute_rdg(res.local.q_hat, below.d_star) >= kCostTightRdg);
  prob.A.push_back(res.applied.constraints[size_t(
      red.order[size_t(red.prefix_cost - 1)])].dense());
  SdpSolution at = solve_primal(prob);
  CHECK(compute_rdg(res.local.q_hat, at.d_star) < kCostTightRdg);
}

TEST_CASE("autotemplate runs are deterministic") {
  auto l = make_lifting("roloc-y");
  ProblemSetup s = l->generate(3, 2, 8, 1e-2, 9);
  AutotemplateOptions opts;
  opts.seed = 9;
  opts.reduce = true;
  AutotemplateResult a = autotemplate(*l, s, opts);
  AutotemplateResult b = autotemplate(*l, s, opts);
  REQUIRE(a.lib.n_templates() == b.lib.n_templates());
  auto ta = a.lib.all_templates();
  auto tb = b.lib.all_templates();
  for (size_t i = 0; i < ta.size(); ++i)
    CHECK((ta[i].mataug - tb[i].mataug).norm() == 0.0);
  CHECK(a.lib.reduction.order == b.lib.reduction.order);
  CHECK(a.lib.reduction.prefix_cost == b.lib.reduction.prefix_cost);
  CHECK(a.lib.reduction.prefix_rank == b.lib.reduction.prefix_rank);
  CHECK(a.report.rdg == b.report.rdg);
}

TEST_CASE("point-point registration needs no learned templates") {
  auto l = make_lifting("ppr");
  ProblemSetup s = l->generate(3, 3, 0, 1e-2, 1);
  AutotemplateOptions opts;
  opts.seed = 1;
  opts.reduce = true;
  AutotemplateResult res = autotemplate(*l, s, opts);
  REQUIRE(res.report.cost_tight);
  CHECK(res.report.rank_tight);
  CHECK(res.lib.n_templates() == 0);
  CHECK(res.terminal_set == "h t");
  CHECK(res.applied.constraints.size() == 7);  // homogenization + orthonormality
  CHECK(res.lib.reduction.prefix_cost == 0);
  CHECK(res.lib.reduction.prefix_rank == 0);
}

TEST_CASE("point-line registration tightens on the rotation set") {
  auto l = make_lifting("plr");
  ProblemSetup s = l->generate(3, 5, 0, 1e-3, 1);
  AutotemplateOptions opts;
  opts.seed = 1;
  opts.reduce = true;
  AutotemplateResult res = autotemplate(*l, s, opts);
  REQUIRE(res.report.cost_tight);
  CHECK(res.report.rank_tight);
  CHECK(res.terminal_set == "h c");
  REQUIRE(res.lib.sets.size() == 2);
  CHECK(res.lib.sets[0].templates.empty());
  CHECK(res.lib.sets[1].templates.size() == 14);
  CHECK(res.applied.constraints.size() == 21);
  CHECK(res.applied.n_always_on == 7);

  // a couple of redundant constraints carry tightness on their own
  CHECK(res.lib.reduction.prefix_cost <= 2);
  CHECK(res.lib.reduction.prefix_rank >= res.lib.reduction.prefix_cost);
  CHECK(res.lib.reduction.prefix_rank <= 5);

  // handedness is restored at the optimum: the extracted rotation is proper
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(res.sdp.X);
  Eigen::VectorXd x = eig.eigenvectors().col(eig.eigenvalues().size() - 1);
  x /= x[0];
  Eigen::Map<const Eigen::Matrix3d> C(x.data() + 4);
  CHECK(C.determinant() > 0.5);
}
