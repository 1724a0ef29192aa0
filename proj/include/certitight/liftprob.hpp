#pragma once
#include <memory>
#include <string>
#include <vector>

#include "certitight/polymat.hpp"
#include "certitight/rng.hpp"

namespace ct {

// One synthetic problem instance: sizes, data, ground truth. The geometry
// lists are reused across families (anchors = landmarks = model points;
// extra = line directions for point-line registration).
struct ProblemSetup {
  std::string family;
  int d = 1;
  int n = 1;          // positions / landmarks / point count
  int n_anchors = 0;  // anchors (range-only only)
  double noise = 0.0;
  uint64_t seed = 0;
  std::vector<Eigen::VectorXd> anchors;
  std::vector<Eigen::VectorXd> extra;
  std::vector<Eigen::VectorXd> measurements;
  Eigen::VectorXd theta_gt;
};

// Parameter realization: values of the data monomials a template can carry.
// First key is always "1" with value 1.
struct ParamVector {
  std::vector<std::string> keys;
  Eigen::VectorXd values;
  double value_of(const std::string& key) const;
  bool has(const std::string& key) const;
};

struct VarTypeDecl {
  std::string type;   // instance names: "<type>" if singleton else "<type>_1", ...
  int dim;
  bool indexed;       // whether instance count scales with problem size
};

std::string instance_name(const VarTypeDecl& t, int index);

// A variable group templates act on: always contains "h"; params restricted
// to the global "1" plus the keys travelling with each member instance.
struct VariableSet {
  std::vector<std::string> variables;   // "h" first, then instances in layout order
  std::vector<std::string> param_keys;  // "1" first
};

// A constraint with the data factored out: a(p) = mataug * p in the vech
// coordinates of the owning set's sub-layout. Known constraints use the same
// representation so the learner and the applier share one instantiation path.
struct Template {
  VariableSet set;
  Eigen::MatrixXd mataug;  // n_k x K
};

// Everything a problem family supplies to the pipeline.
class Lifting {
 public:
  virtual ~Lifting() = default;

  virtual std::string family() const = 0;
  virtual std::vector<VarTypeDecl> var_types() const = 0;
  virtual int type_count(const std::string& type, const ProblemSetup& s) const = 0;

  // Synthetic data generation (deterministic in the arguments) and
  // re-realization with the same sizes but fresh data (for template learning,
  // where every augmented sample carries its own parameter draw).
  virtual ProblemSetup generate(int d, int n, int n_anchors, double noise,
                                uint64_t seed) const = 0;
  virtual ProblemSetup resample(const ProblemSetup& s, Rng& rng) const = 0;

  virtual int theta_dim(const ProblemSetup& s) const = 0;
  virtual Eigen::VectorXd sample_theta(const ProblemSetup& s, Rng& rng) const = 0;
  // Throws SingularLift when theta is too close to a pole of the lifting.
  virtual Eigen::VectorXd lift(const ProblemSetup& s,
                               const Eigen::VectorXd& theta) const = 0;

  virtual PolyMatrix build_cost(const ProblemSetup& s) const = 0;
  virtual double cost(const ProblemSetup& s, const Eigen::VectorXd& theta) const = 0;

  // Nonlinear-least-squares view for the local solver. The Jacobian is taken
  // with respect to the step coordinates at step = 0 (these differ from theta
  // coordinates only for rotation manifolds).
  virtual Eigen::VectorXd residuals(const ProblemSetup& s,
                                    const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::MatrixXd residual_jacobian(const ProblemSetup& s,
                                            const Eigen::VectorXd& theta) const = 0;
  virtual int step_dim(const ProblemSetup& s) const { return theta_dim(s); }
  virtual Eigen::VectorXd retract(const ProblemSetup& s,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& step) const {
    return theta + step;
  }

  // Known constraints in template form (homogenization first); parameters and
  // the keys travelling with each variable instance.
  virtual std::vector<Template> known_templates() const = 0;
  virtual std::vector<std::string> instance_param_keys(const std::string& type,
                                                       int index) const {
    (void)type;
    (void)index;
    return {};
  }
  virtual ParamVector params(const ProblemSetup& s) const;

  // Whether the learner appends the non-homogenization knowns to the data
  // matrix (so it only finds constraints beyond them). Families whose learned
  // span subsumes the knowns leave this off.
  virtual bool append_knowns_when_learning() const { return false; }

  // Hand-derived constraint sets for cross-validation, full-layout matrices.
  // Families without published sets return {}.
  virtual std::vector<PolyMatrix> analytic_constraints(const ProblemSetup& s) const {
    (void)s;
    return {};
  }

  // ---- derived helpers (non-virtual) ----
  LayoutPtr layout(const ProblemSetup& s) const;
  std::vector<PolyMatrix> known_constraints(const ProblemSetup& s) const;
  // lift with resampling on singular lift (budget of 100 draws)
  Eigen::VectorXd sample_lifted(const ProblemSetup& s, Rng& rng) const;
};

struct SingularLift : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All order-respecting injective assignments of a template's variables onto
// instances of a target "vocabulary" (instance names grouped by type). Each
// assignment maps template variable -> target instance name, preserving h.
// Instances of *different* indexed types sharing an index belong to the same
// entity (position n owns theta_n and its substitution variable), so one
// sorted index tuple drives all indexed types jointly; cross-index pairings
// would produce constraints that fail on feasible points.
std::vector<std::map<std::string, std::string>> enumerate_assignments(
    const Template& t, const Lifting& lifting, const ProblemSetup& target);

// Same, but with the target vocabulary given directly as per-type instance
// counts (the first `count` instances of each type). Used when assigning
// carried templates into a variable set during learning.
std::vector<std::map<std::string, std::string>> enumerate_assignments_avail(
    const Template& t, const Lifting& lifting,
    const std::map<std::string, int>& avail);

// Instantiate one template under one assignment: evaluate with the target's
// parameter values, reconstruct the matrix, embed into the full layout.
PolyMatrix instantiate(const Template& t,
                       const std::map<std::string, std::string>& assign,
                       const Lifting& lifting, const ProblemSetup& target,
                       const ParamVector& params, const LayoutPtr& full);

// Instantiate over all assignments, in template order then assignment order.
std::vector<PolyMatrix> instantiate_all(const Template& t, const Lifting& lifting,
                                        const ProblemSetup& target);

}  // namespace ct
