#include "certitight/autotemplate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "certitight/nullspace.hpp"

namespace ct {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// dimension of one variable by name, without needing a concrete layout
int var_dim(const std::string& name, const std::vector<VarTypeDecl>& types) {
  if (name == "h") return 1;
  for (const auto& t : types) {
    if (!t.indexed && name == t.type) return t.dim;
    if (t.indexed && name.rfind(t.type + "_", 0) == 0) return t.dim;
  }
  throw std::invalid_argument("unknown variable '" + name + "'");
}

LayoutPtr set_sub_layout(const VariableSet& set,
                         const std::vector<VarTypeDecl>& types) {
  std::vector<std::pair<std::string, int>> vars;
  for (const auto& v : set.variables) vars.emplace_back(v, var_dim(v, types));
  return VarLayout::create(std::move(vars));
}

// per-type instance counts inside a variable set (canonical first instances)
std::map<std::string, int> set_avail(const VariableSet& set,
                                     const std::vector<VarTypeDecl>& types) {
  std::map<std::string, int> avail;
  for (const auto& v : set.variables) {
    if (v == "h") continue;
    for (const auto& t : types) {
      if ((!t.indexed && v == t.type) ||
          (t.indexed && v.rfind(t.type + "_", 0) == 0))
        ++avail[t.type];
    }
  }
  return avail;
}

}  // namespace

int TemplateLibrary::n_templates() const {
  int n = 0;
  for (const auto& e : sets) n += int(e.templates.size());
  return n;
}

std::vector<Template> TemplateLibrary::all_templates() const {
  std::vector<Template> out;
  for (const auto& e : sets)
    out.insert(out.end(), e.templates.begin(), e.templates.end());
  return out;
}

std::vector<VariableSet> variable_set_sequence(const Lifting& lifting,
                                               const ProblemSetup& setup,
                                               int max_size) {
  const auto types = lifting.var_types();
  const int T = int(types.size());
  std::vector<int> counts(size_t(T), 0);
  for (int t = 0; t < T; ++t)
    counts[size_t(t)] = lifting.type_count(types[size_t(t)].type, setup);

  std::vector<VariableSet> out;
  for (int size = 2; size <= max_size; ++size) {
    const int k = size - 1;  // variables beyond h
    // type multisets of size k as sorted tuples, capped by instance counts
    std::vector<std::vector<int>> tuples;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int t) {
      if (int(cur.size()) == k) {
        tuples.push_back(cur);
        return;
      }
      if (t == T) return;
      int used = int(std::count(cur.begin(), cur.end(), t));
      if (used < counts[size_t(t)] &&
          (types[size_t(t)].indexed || used < 1)) {
        cur.push_back(t);
        rec(t);
        cur.pop_back();
      }
      rec(t + 1);
    };
    rec(0);
    // mixing variable types uncovers cross-variable constraints soonest, so
    // sets with more distinct types come first; ties follow declaration order
    std::stable_sort(tuples.begin(), tuples.end(),
                     [](const std::vector<int>& a, const std::vector<int>& b) {
                       auto distinct = [](const std::vector<int>& v) {
                         int d = 1;
                         for (size_t i = 1; i < v.size(); ++i)
                           if (v[i] != v[i - 1]) ++d;
                         return d;
                       };
                       int da = distinct(a), db = distinct(b);
                       if (da != db) return da > db;
                       return a < b;
                     });
    for (const auto& tuple : tuples) {
      VariableSet set;
      set.variables.push_back("h");
      set.param_keys.push_back("1");
      for (int t = 0; t < T; ++t) {
        const int mult = int(std::count(tuple.begin(), tuple.end(), t));
        for (int i = 1; i <= mult; ++i) {
          set.variables.push_back(instance_name(types[size_t(t)], i));
          for (const auto& key :
               lifting.instance_param_keys(types[size_t(t)].type, i))
            if (std::find(set.param_keys.begin(), set.param_keys.end(), key) ==
                set.param_keys.end())
              set.param_keys.push_back(key);
        }
      }
      out.push_back(std::move(set));
    }
  }
  return out;
}

std::vector<Template> learn_templates(const Lifting& lifting,
                                      const ProblemSetup& setup,
                                      const VariableSet& set,
                                      const std::vector<Template>& carried,
                                      double rank_tol, double oversample,
                                      Rng& rng) {
  const auto types = lifting.var_types();
  LayoutPtr sub = set_sub_layout(set, types);
  LayoutPtr full = lifting.layout(setup);
  const long n_k = vech_len(sub->dim());
  const long K = long(set.param_keys.size());
  const long rows = n_k * K;

  // carried templates (knowns and earlier sets) assigned into this set give
  // the known columns: the learner then returns only genuinely new relations
  std::vector<Eigen::VectorXd> known_cols;
  const auto avail = set_avail(set, types);
  for (const auto& t : carried) {
    for (const auto& assign : enumerate_assignments_avail(t, lifting, avail)) {
      // parameter keys renamed positionally along with the instances
      std::map<std::string, std::string> key_map;
      key_map["1"] = "1";
      std::vector<std::pair<std::string, int>> renamed_vars;
      for (const auto& v : t.set.variables) {
        renamed_vars.emplace_back(assign.at(v), var_dim(assign.at(v), types));
        if (v == "h") continue;
        // both names are instances of the same type by construction
        auto type_of = [&](const std::string& name) {
          for (const auto& ty : types) {
            if (!ty.indexed && name == ty.type) return std::pair(ty.type, 1);
            if (ty.indexed && name.rfind(ty.type + "_", 0) == 0)
              return std::pair(ty.type,
                               std::stoi(name.substr(ty.type.size() + 1)));
          }
          throw std::invalid_argument("unknown variable '" + name + "'");
        };
        auto [st, si] = type_of(v);
        auto [dt, di] = type_of(assign.at(v));
        auto src_keys = lifting.instance_param_keys(st, si);
        auto dst_keys = lifting.instance_param_keys(dt, di);
        for (size_t j = 0; j < src_keys.size(); ++j)
          key_map[src_keys[j]] = dst_keys[j];
      }
      LayoutPtr renamed = VarLayout::create(std::move(renamed_vars));

      Eigen::VectorXd col = Eigen::VectorXd::Zero(rows);
      for (long j = 0; j < t.mataug.cols(); ++j) {
        const std::string& dst_key = key_map.at(t.set.param_keys[size_t(j)]);
        auto it = std::find(set.param_keys.begin(), set.param_keys.end(),
                            dst_key);
        if (it == set.param_keys.end())
          throw std::logic_error("carried template key '" + dst_key +
                                 "' missing from the target set");
        const long jd = it - set.param_keys.begin();
        PolyMatrix A =
            PolyMatrix::from_dense(renamed, vech_inv(t.mataug.col(j)));
        Eigen::VectorXd emb = vech(A.embedded(sub).dense());
        for (long i = 0; i < n_k; ++i) col[i * K + jd] += emb[i];
      }
      double peak = col.cwiseAbs().maxCoeff();
      known_cols.push_back(col / (peak > 0 ? peak : 1.0));
    }
  }

  // augmented samples: fresh data realization per draw, so anything the
  // nullspace keeps must hold with the data factored out
  const int n_samples = int(std::ceil((1.0 + oversample) * double(rows)));
  DataMatrix dm;
  dm.layout = sub;
  dm.n_samples = n_samples;
  dm.n_known = int(known_cols.size());
  dm.Y.resize(rows, n_samples + dm.n_known);
  for (int s = 0; s < n_samples; ++s) {
    ProblemSetup fresh = lifting.resample(setup, rng);
    ParamVector pv = lifting.params(fresh);
    Eigen::VectorXd p(K);
    for (long j = 0; j < K; ++j) p[j] = pv.value_of(set.param_keys[size_t(j)]);
    Eigen::VectorXd x = lifting.sample_lifted(fresh, rng);
    Eigen::VectorXd xg(sub->dim());
    for (const auto& [name, dim] : sub->vars())
      xg.segment(sub->offset(name), dim) = x.segment(full->offset(name), dim);
    Eigen::VectorXd v = vech(Eigen::MatrixXd(xg * xg.transpose()));
    Eigen::VectorXd zbar(rows);
    for (long i = 0; i < n_k; ++i) zbar.segment(i * K, K) = v[i] * p;
    dm.Y.col(s) = zbar / zbar.norm();
  }
  for (int j = 0; j < dm.n_known; ++j)
    dm.Y.col(n_samples + j) = known_cols[size_t(j)];

  auto learned = learn_nullspace(dm, rank_tol);
  auto refined = two_pass_refine(dm, learned.first, rank_tol);

  std::vector<Template> out;
  for (long c = 0; c < refined.second.vectors.cols(); ++c) {
    Template t;
    t.set = set;
    t.mataug.resize(n_k, K);
    for (long i = 0; i < n_k; ++i)
      for (long j = 0; j < K; ++j)
        t.mataug(i, j) = refined.second.vectors(i * K + j, c);
    out.push_back(std::move(t));
  }
  return out;
}

AppliedConstraints apply_templates(const TemplateLibrary& lib,
                                   const Lifting& lifting,
                                   const ProblemSetup& setup) {
  if (!lib.family.empty() && lib.family != lifting.family())
    throw std::invalid_argument("template library is for family '" +
                                lib.family + "', not '" + lifting.family() +
                                "'");
  AppliedConstraints out;
  std::vector<PolyMatrix> knowns = lifting.known_constraints(setup);
  out.constraints = knowns;
  out.n_always_on = int(knowns.size());
  out.source_template.assign(knowns.size(), -1);

  int ti = 0;
  for (const auto& entry : lib.sets)
    for (const auto& t : entry.templates) {
      for (auto& m : instantiate_all(t, lifting, setup)) {
        out.constraints.push_back(std::move(m));
        out.source_template.push_back(ti);
      }
      ++ti;
    }

  // drop instantiations that are linearly dependent on the accumulated set
  // (knowns win ties; original order is preserved otherwise)
  std::vector<SparseVec> vecs;
  vecs.reserve(out.constraints.size());
  for (const auto& m : out.constraints) vecs.push_back(m.vech_sparse());
  std::vector<int> keep = independent_subset(vecs, 1e-12, out.n_always_on);
  AppliedConstraints pruned;
  pruned.n_always_on = out.n_always_on;
  for (int idx : keep) {
    pruned.constraints.push_back(std::move(out.constraints[size_t(idx)]));
    pruned.source_template.push_back(out.source_template[size_t(idx)]);
  }
  return pruned;
}

namespace {

struct PrefixEval {
  bool cost = false;
  bool rank = false;
};

}  // namespace

ReductionResult reduce_constraints(const SdpProblem& full, int n_always_on,
                                   const Eigen::VectorXd& xhat, double q_hat,
                                   const conic::SolveOptions& sdp_opts) {
  const int m_total = int(full.A.size());
  if (n_always_on < 1 || n_always_on > m_total)
    throw std::invalid_argument("reduce_constraints: bad n_always_on");
  const int m_red = m_total - n_always_on;

  ReductionResult res;

  // the l1 program weighs only the reducible lambdas; indices are relative
  // to A[1..] as solve_l1_reduction counts them
  std::vector<int> reducible;
  for (int i = n_always_on; i < m_total; ++i) reducible.push_back(i - 1);
  Eigen::VectorXd lam;
  if (m_red > 0) lam = solve_l1_reduction(full, xhat, reducible);

  std::vector<int> order(size_t(m_red), 0);
  for (int k = 0; k < m_red; ++k) order[size_t(k)] = n_always_on + k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(lam[a - 1]) > std::abs(lam[b - 1]);
  });
  res.order = order;
  res.lambdas.resize(m_red);
  for (int k = 0; k < m_red; ++k) res.lambdas[k] = lam[order[size_t(k)] - 1];

  // prefix p keeps the always-on block plus the p largest-|lambda| ones
  std::map<int, PrefixEval> cache;
  auto eval = [&](int p) -> PrefixEval {
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    SdpProblem sub;
    sub.Q = full.Q;
    sub.A.assign(full.A.begin(), full.A.begin() + n_always_on);
    for (int k = 0; k < p; ++k) sub.A.push_back(full.A[size_t(order[size_t(k)])]);
    SdpSolution sol = solve_primal(sub, sdp_opts);
    PrefixEval pe;
    if (sol.status == "optimal" || sol.status == "near-optimal") {
      pe.cost = compute_rdg(q_hat, sol.d_star) < kCostTightRdg;
      pe.rank = sol.X.size() > 0 && compute_er(sol.X) > kRankTightEr;
    }
    cache[p] = pe;
    return pe;
  };

  if (!eval(m_red).cost)
    throw std::runtime_error(
        "reduction requires a cost-tight full constraint set");

  // endpoints first, then halving; the passing endpoint is the invariant
  auto bisect = [&](auto pass) -> int {
    if (pass(eval(0))) return 0;
    int lo = 0, hi = m_red;  // lo fails, hi passes
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      if (pass(eval(mid)))
        hi = mid;
      else
        lo = mid;
    }
    return hi;
  };
  res.prefix_cost = bisect([](const PrefixEval& e) { return e.cost; });
  if (eval(m_red).rank)
    res.prefix_rank = bisect([](const PrefixEval& e) { return e.rank; });
  return res;
}

namespace {

AutotemplateResult autotemplate_once(const Lifting& lifting,
                                     const ProblemSetup& setup,
                                     const AutotemplateOptions& opts,
                                     Rng& rng) {
  AutotemplateResult res;
  res.lib.family = lifting.family();
  res.lib.seed = opts.seed;

  // candidate value for the tightness checks
  res.local = gauss_newton(lifting, setup, setup.theta_gt, opts.local);
  if (!std::isfinite(res.local.q_hat))
    throw std::runtime_error("local solve diverged");
  res.xhat = lifting.lift(setup, res.local.theta);
  PolyMatrix Q = lifting.build_cost(setup);

  std::vector<Template> carried;
  if (lifting.append_knowns_when_learning()) {
    auto kt = lifting.known_templates();
    carried.assign(kt.begin() + 1, kt.end());  // never the homogenization
  }

  auto sets = variable_set_sequence(lifting, setup, opts.max_set_size);
  bool evaluated = false;
  bool done = false;
  for (const auto& set : sets) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Template> found = learn_templates(
        lifting, setup, set, carried, opts.rank_tol, opts.oversample, rng);
    res.t_learn += seconds_since(t0);
    carried.insert(carried.end(), found.begin(), found.end());
    res.lib.sets.push_back({set, found});
    res.terminal_set.clear();
    for (const auto& v : set.variables) {
      if (!res.terminal_set.empty()) res.terminal_set += " ";
      res.terminal_set += v;
    }

    if (found.empty() && evaluated) continue;  // nothing new to test

    t0 = std::chrono::steady_clock::now();
    res.applied = apply_templates(res.lib, lifting, setup);
    res.t_apply += seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    SdpProblem prob;
    prob.Q = Q.dense();
    for (const auto& A : res.applied.constraints) prob.A.push_back(A.dense());
    res.sdp = solve_primal(prob, opts.sdp);
    res.t_solve += seconds_since(t0);

    // interpretability grading looks at the learned template entries
    auto all = res.lib.all_templates();
    long total = 0;
    for (const auto& t : all) total += t.mataug.size();
    Eigen::VectorXd entries(total);
    long at = 0;
    for (const auto& t : all) {
      entries.segment(at, t.mataug.size()) =
          Eigen::Map<const Eigen::VectorXd>(t.mataug.data(), t.mataug.size());
      at += t.mataug.size();
    }
    res.report = make_report(
        res.sdp, res.local.q_hat, res.applied.n_always_on,
        int(res.applied.constraints.size()) - res.applied.n_always_on,
        quantized_fraction(Eigen::MatrixXd(entries)));
    evaluated = true;

    if (res.report.cost_tight &&
        (!opts.stop_at_rank_tight || res.report.rank_tight)) {
      done = true;
      break;
    }
  }

  if (!evaluated) {
    // degenerate sequence (max_set_size < 2): grade the knowns-only problem
    res.applied = apply_templates(res.lib, lifting, setup);
    SdpProblem prob;
    prob.Q = Q.dense();
    for (const auto& A : res.applied.constraints) prob.A.push_back(A.dense());
    res.sdp = solve_primal(prob, opts.sdp);
    res.report =
        make_report(res.sdp, res.local.q_hat, res.applied.n_always_on, 0, 1.0);
    done = res.report.cost_tight &&
           (!opts.stop_at_rank_tight || res.report.rank_tight);
  }

  if (opts.reduce && done) {
    auto t0 = std::chrono::steady_clock::now();
    SdpProblem prob;
    prob.Q = Q.dense();
    for (const auto& A : res.applied.constraints) prob.A.push_back(A.dense());
    ReductionResult red = reduce_constraints(
        prob, res.applied.n_always_on, res.xhat, res.local.q_hat, opts.sdp);
    res.lib.reduction.order = red.order;
    res.lib.reduction.prefix_cost = red.prefix_cost;
    res.lib.reduction.prefix_rank = red.prefix_rank;
    res.lib.has_reduction = true;
    res.t_reduce = seconds_since(t0);
  }
  return res;
}

}  // namespace

AutotemplateResult autotemplate(const Lifting& lifting,
                                const ProblemSetup& setup,
                                const AutotemplateOptions& opts) {
  Rng rng = Rng::split(opts.seed, 0x7e31);
  ProblemSetup current = setup;
  Rng retry_rng = Rng::split(opts.seed, 0x7e37);
  for (int attempt = 0;; ++attempt) {
    try {
      return autotemplate_once(lifting, current, opts, rng);
    } catch (const std::exception&) {
      if (attempt + 1 >= opts.retry_budget) throw;
      current = lifting.resample(setup, retry_rng);
    }
  }
}

}  // namespace ct
