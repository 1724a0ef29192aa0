#include "certitight/liftprob.hpp"

#include <algorithm>
#include <functional>

namespace ct {

double ParamVector::value_of(const std::string& key) const {
  for (size_t i = 0; i < keys.size(); ++i)
    if (keys[i] == key) return values[long(i)];
  throw std::out_of_range("no parameter key '" + key + "'");
}

bool ParamVector::has(const std::string& key) const {
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

std::string instance_name(const VarTypeDecl& t, int index) {
  return t.indexed ? t.type + "_" + std::to_string(index) : t.type;
}

ParamVector Lifting::params(const ProblemSetup& s) const {
  (void)s;
  ParamVector p;
  p.keys = {"1"};
  p.values = Eigen::VectorXd::Ones(1);
  return p;
}

LayoutPtr Lifting::layout(const ProblemSetup& s) const {
  std::vector<std::pair<std::string, int>> vars;
  vars.emplace_back("h", 1);
  for (const auto& t : var_types()) {
    int count = type_count(t.type, s);
    for (int i = 1; i <= count; ++i) vars.emplace_back(instance_name(t, i), t.dim);
  }
  return VarLayout::create(std::move(vars));
}

std::vector<PolyMatrix> Lifting::known_constraints(const ProblemSetup& s) const {
  std::vector<PolyMatrix> out;
  for (const auto& t : known_templates()) {
    auto mats = instantiate_all(t, *this, s);
    out.insert(out.end(), mats.begin(), mats.end());
  }
  return out;
}

Eigen::VectorXd Lifting::sample_lifted(const ProblemSetup& s, Rng& rng) const {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::VectorXd theta = sample_theta(s, rng);
    try {
      return lift(s, theta);
    } catch (const SingularLift&) {
      continue;
    }
  }
  throw std::runtime_error("sampler kept hitting singular lifts (100 draws)");
}

namespace {

struct VarRef {
  std::string type;
  int index;  // 1-based; 1 for singleton types
};

// Recover (type, index) for each canonical instance name of the template.
VarRef parse_instance(const std::string& name,
                      const std::vector<VarTypeDecl>& types) {
  for (const auto& t : types) {
    if (!t.indexed) {
      if (name == t.type) return {t.type, 1};
      continue;
    }
    const std::string prefix = t.type + "_";
    if (name.rfind(prefix, 0) == 0)
      return {t.type, std::stoi(name.substr(prefix.size()))};
  }
  throw std::invalid_argument("unknown template variable '" + name + "'");
}

void sorted_subsets(int n, int k, std::vector<std::vector<int>>& out) {
  std::vector<int> pick(k);
  // lexicographic k-subsets of {1..n}
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      out.push_back(pick);
      return;
    }
    for (int v = start; v <= n - (k - depth - 1); ++v) {
      pick[depth] = v;
      rec(v + 1, depth + 1);
    }
  };
  rec(1, 0);
}

}  // namespace

std::vector<std::map<std::string, std::string>> enumerate_assignments_avail(
    const Template& t, const Lifting& lifting,
    const std::map<std::string, int>& avail) {
  const auto types = lifting.var_types();

  // Split the template's variables into singletons (forced onto the type's
  // only instance) and indexed ones, the latter keyed by their slot index.
  // Slots are shared across types: a template touching theta_1 and y_1 uses
  // one slot, so every assignment sends the pair to a single position.
  std::vector<std::string> singletons;
  struct Slotted {
    std::string var;
    const VarTypeDecl* decl;
    int slot;
  };
  std::vector<Slotted> slotted;
  std::vector<int> slots;  // sorted distinct slot indices
  int domain = -1;         // joint index range of the involved indexed types
  for (const auto& v : t.set.variables) {
    if (v == "h") continue;
    VarRef ref = parse_instance(v, types);
    const VarTypeDecl* decl = nullptr;
    for (const auto& ty : types)
      if (ty.type == ref.type) decl = &ty;
    auto have = avail.find(ref.type);
    const int count = have == avail.end() ? 0 : have->second;
    if (!decl->indexed) {
      if (count < 1) return {};
      singletons.push_back(v);
      continue;
    }
    slotted.push_back({v, decl, ref.index});
    if (std::find(slots.begin(), slots.end(), ref.index) == slots.end())
      slots.push_back(ref.index);
    domain = domain < 0 ? count : std::min(domain, count);
  }
  std::sort(slots.begin(), slots.end());
  const int k = int(slots.size());
  if (domain >= 0 && k > domain) return {};

  std::vector<std::vector<int>> picks;
  if (k > 0)
    sorted_subsets(domain, k, picks);
  else
    picks.push_back({});

  std::vector<std::map<std::string, std::string>> out;
  for (const auto& pick : picks) {
    std::map<std::string, std::string> assign;
    assign["h"] = "h";
    for (const auto& v : singletons) assign[v] = v;
    for (const auto& sv : slotted) {
      const int pos = int(
          std::lower_bound(slots.begin(), slots.end(), sv.slot) - slots.begin());
      assign[sv.var] = instance_name(*sv.decl, pick[size_t(pos)]);
    }
    out.push_back(std::move(assign));
  }
  return out;
}

std::vector<std::map<std::string, std::string>> enumerate_assignments(
    const Template& t, const Lifting& lifting, const ProblemSetup& target) {
  std::map<std::string, int> avail;
  for (const auto& ty : lifting.var_types())
    avail[ty.type] = lifting.type_count(ty.type, target);
  return enumerate_assignments_avail(t, lifting, avail);
}

PolyMatrix instantiate(const Template& t,
                       const std::map<std::string, std::string>& assign,
                       const Lifting& lifting, const ProblemSetup& target,
                       const ParamVector& params, const LayoutPtr& full) {
  const auto types = lifting.var_types();

  // parameter keys: rename positionally per variable instance
  std::map<std::string, std::string> key_map;
  key_map["1"] = "1";
  for (const auto& v : t.set.variables) {
    if (v == "h") continue;
    VarRef src = parse_instance(v, types);
    VarRef dst = parse_instance(assign.at(v), types);
    auto src_keys = lifting.instance_param_keys(src.type, src.index);
    auto dst_keys = lifting.instance_param_keys(dst.type, dst.index);
    for (size_t j = 0; j < src_keys.size(); ++j) key_map[src_keys[j]] = dst_keys[j];
  }

  Eigen::VectorXd p(long(t.set.param_keys.size()));
  for (size_t j = 0; j < t.set.param_keys.size(); ++j)
    p[long(j)] = params.value_of(key_map.at(t.set.param_keys[j]));

  Eigen::VectorXd a = t.mataug * p;

  // reconstruct on the renamed sub-layout, then zero-pad
  std::vector<std::pair<std::string, int>> sub_vars;
  for (const auto& v : t.set.variables)
    sub_vars.emplace_back(assign.at(v), full->vdim(assign.at(v)));
  auto sub = VarLayout::create(std::move(sub_vars));
  PolyMatrix M = PolyMatrix::from_dense(sub, vech_inv(a));
  return M.embedded(full);
}

std::vector<PolyMatrix> instantiate_all(const Template& t, const Lifting& lifting,
                                        const ProblemSetup& target) {
  ParamVector params = lifting.params(target);
  LayoutPtr full = lifting.layout(target);
  std::vector<PolyMatrix> out;
  for (const auto& assign : enumerate_assignments(t, lifting, target))
    out.push_back(instantiate(t, assign, lifting, target, params, full));
  return out;
}

}  // namespace ct
