#pragma once
#include <string>
#include <vector>

#include "certitight/autotight.hpp"
#include "certitight/liftprob.hpp"

namespace ct {

struct TemplateLibrary {
  std::string family;
  std::string version = "1";
  uint64_t seed = 0;
  struct SetEntry {
    VariableSet set;
    std::vector<Template> templates;
  };
  std::vector<SetEntry> sets;
  struct Reduction {
    std::vector<int> order;  // applied-constraint indices at formulation size
    int prefix_cost = -1;
    int prefix_rank = -1;
  } reduction;
  bool has_reduction = false;

  int n_templates() const;
  std::vector<Template> all_templates() const;
};

// Variable groups in learning order: by size, then more-distinct-types first,
// then by declared type order; instances are the canonical first ones of each
// type; per-type multiplicity capped by the setup's instance counts.
std::vector<VariableSet> variable_set_sequence(const Lifting& lifting,
                                               const ProblemSetup& setup,
                                               int max_size);

// Learn the constraints of one variable set with the data factored out.
// Each augmented sample draws a fresh data realization; carried templates
// (knowns and earlier sets' results) enter as known columns so only new
// constraints are returned.
std::vector<Template> learn_templates(const Lifting& lifting,
                                      const ProblemSetup& setup,
                                      const VariableSet& set,
                                      const std::vector<Template>& carried,
                                      double rank_tol, double oversample,
                                      Rng& rng);

struct AppliedConstraints {
  std::vector<PolyMatrix> constraints;  // homogenization, knowns, applied templates
  int n_always_on = 0;
  std::vector<int> source_template;     // per constraint: library template index, -1 for always-on
};

// Instantiate every library template over the setup's variables (sorted index
// tuples per type), prune dependents, keep the always-on knowns first.
AppliedConstraints apply_templates(const TemplateLibrary& lib,
                                   const Lifting& lifting,
                                   const ProblemSetup& setup);

struct ReductionResult {
  std::vector<int> order;  // reducible constraint indices, by decreasing |lambda|
  int prefix_cost = -1;    // smallest bisection-found prefix with RDG < 1e-3
  int prefix_rank = -1;    // same with ER > 1e7; -1 when unreachable
  Eigen::VectorXd lambdas; // aligned with order
};

// L1-guided ordering plus bisection over prefixes. Constraints before
// n_always_on are always kept.
ReductionResult reduce_constraints(const SdpProblem& full, int n_always_on,
                                   const Eigen::VectorXd& xhat, double q_hat,
                                   const conic::SolveOptions& sdp_opts = {});

struct AutotemplateOptions {
  double rank_tol = 1e-12;
  double oversample = 0.2;
  uint64_t seed = 1;
  int max_set_size = 4;
  bool reduce = false;
  bool stop_at_rank_tight = false;  // also require ER > 1e7 before terminating
  int retry_budget = 5;
  conic::SolveOptions sdp;
  LocalOptions local;
};

struct AutotemplateResult {
  TemplateLibrary lib;
  AppliedConstraints applied;
  LocalResult local;
  Eigen::VectorXd xhat;
  SdpSolution sdp;
  TightnessReport report;
  std::string terminal_set;  // joined variable names of the last learned set
  double t_learn = 0, t_apply = 0, t_solve = 0, t_reduce = 0;
};

AutotemplateResult autotemplate(const Lifting& lifting, const ProblemSetup& setup,
                                const AutotemplateOptions& opts = {});

}  // namespace ct
