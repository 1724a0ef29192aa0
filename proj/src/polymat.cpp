#include "certitight/polymat.hpp"

#include <algorithm>
#include <cmath>

namespace ct {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

std::shared_ptr<const VarLayout> VarLayout::create(
    std::vector<std::pair<std::string, int>> vars) {
  auto lay = std::make_shared<VarLayout>();
  if (vars.empty() || vars[0].first != "h" || vars[0].second != 1)
    throw std::invalid_argument("layout must start with h (dim 1)");
  lay->vars_ = std::move(vars);
  lay->offsets_.resize(lay->vars_.size());
  int off = 0;
  for (size_t k = 0; k < lay->vars_.size(); ++k) {
    const auto& [name, d] = lay->vars_[k];
    if (d <= 0) throw std::invalid_argument("variable dim must be positive");
    if (!lay->index_.emplace(name, int(k)).second)
      throw std::invalid_argument("duplicate variable name: " + name);
    lay->offsets_[k] = off;
    off += d;
  }
  lay->dim_ = off;
  return lay;
}

int VarLayout::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::out_of_range("no variable named '" + name + "' in layout");
  return it->second;
}

int vech_dim_from_len(long len) {
  // N(N+1)/2 = len
  long N = (long)std::llround((std::sqrt(8.0 * double(len) + 1.0) - 1.0) / 2.0);
  if (N * (N + 1) / 2 != len)
    throw std::invalid_argument("length is not a triangular number");
  return int(N);
}

Eigen::VectorXd vech(const Eigen::MatrixXd& M, double sym_tol) {
  const int N = int(M.rows());
  if (M.cols() != N) throw std::invalid_argument("vech: matrix not square");
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  Eigen::VectorXd v(vech_len(N));
  long k = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      if (std::abs(M(i, j) - M(j, i)) > sym_tol * scale)
        throw std::invalid_argument("vech: matrix not symmetric");
      v[k++] = (i == j) ? M(i, j) : kSqrt2 * 0.5 * (M(i, j) + M(j, i));
    }
  return v;
}

Eigen::MatrixXd vech_inv(const Eigen::VectorXd& v) {
  const int N = vech_dim_from_len(v.size());
  Eigen::MatrixXd M(N, N);
  long k = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      double x = (i == j) ? v[k] : v[k] / kSqrt2;
      M(i, j) = x;
      M(j, i) = x;
      ++k;
    }
  return M;
}

void SparseVec::sort_and_merge() {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<long, double>> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.empty() && out.back().first == e.first)
      out.back().second += e.second;
    else
      out.push_back(e);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const auto& e) { return e.second == 0.0; }),
            out.end());
  entries = std::move(out);
}

double SparseVec::max_abs() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, std::abs(e.second));
  return m;
}

void SparseVec::scale(double a) {
  for (auto& e : entries) e.second *= a;
}

void PolyMatrix::add_block(const std::string& a, const std::string& b,
                           const Eigen::MatrixXd& M) {
  int ia = layout_->index(a), ib = layout_->index(b);
  int da = layout_->vars()[ia].second, db = layout_->vars()[ib].second;
  Eigen::MatrixXd blk = M;
  if (ia > ib) {
    std::swap(ia, ib);
    std::swap(da, db);
    blk = M.transpose().eval();
  }
  if (blk.rows() != da || blk.cols() != db)
    throw std::invalid_argument("block shape mismatch for (" + a + "," + b + ")");
  auto key = std::make_pair(ia, ib);
  auto it = blocks_.find(key);
  if (it == blocks_.end())
    blocks_.emplace(key, blk);
  else
    it->second += blk;
}

void PolyMatrix::set_entry(const std::string& a, int ia, const std::string& b,
                           int ib, double value) {
  int va = layout_->index(a), vb = layout_->index(b);
  int ra = ia, cb = ib;
  if (va > vb) {
    std::swap(va, vb);
    std::swap(ra, cb);
  }
  auto key = std::make_pair(va, vb);
  auto it = blocks_.find(key);
  if (it == blocks_.end()) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(layout_->vars()[va].second,
                                              layout_->vars()[vb].second);
    it = blocks_.emplace(key, std::move(z)).first;
  }
  if (va == vb && ra != cb) {
    it->second(ra, cb) = value;
    it->second(cb, ra) = value;
  } else {
    it->second(ra, cb) = value;
  }
}

void PolyMatrix::add_entry(const std::string& a, int ia, const std::string& b,
                           int ib, double value) {
  int va = layout_->index(a), vb = layout_->index(b);
  int ra = ia, cb = ib;
  if (va > vb) {
    std::swap(va, vb);
    std::swap(ra, cb);
  }
  auto key = std::make_pair(va, vb);
  auto it = blocks_.find(key);
  if (it == blocks_.end()) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(layout_->vars()[va].second,
                                              layout_->vars()[vb].second);
    it = blocks_.emplace(key, std::move(z)).first;
  }
  if (va == vb && ra != cb) {
    it->second(ra, cb) += value;
    it->second(cb, ra) += value;
  } else {
    it->second(ra, cb) += value;
  }
}

Eigen::MatrixXd PolyMatrix::dense() const {
  const int N = layout_->dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  for (const auto& [key, blk] : blocks_) {
    int ro = layout_->offset_of(key.first);
    int co = layout_->offset_of(key.second);
    if (key.first == key.second) {
      Eigen::MatrixXd sym = 0.5 * (blk + blk.transpose());
      M.block(ro, co, sym.rows(), sym.cols()) = sym;
    } else {
      M.block(ro, co, blk.rows(), blk.cols()) = blk;
      M.block(co, ro, blk.cols(), blk.rows()) = blk.transpose();
    }
  }
  return M;
}

SparseVec PolyMatrix::vech_sparse(double drop_tol) const {
  const int N = layout_->dim();
  SparseVec sv;
  sv.n = vech_len(N);
  for (const auto& [key, blk] : blocks_) {
    int ro = layout_->offset_of(key.first);
    int co = layout_->offset_of(key.second);
    Eigen::MatrixXd B = blk;
    if (key.first == key.second) B = 0.5 * (blk + blk.transpose());
    for (int r = 0; r < B.rows(); ++r)
      for (int c = 0; c < B.cols(); ++c) {
        int i = ro + r, j = co + c;
        if (i > j) continue;  // lower half of a diagonal block
        double x = B(r, c);
        if (std::abs(x) <= drop_tol) continue;
        sv.entries.emplace_back(vech_index(i, j, N),
                                (i == j) ? x : kSqrt2 * x);
      }
  }
  sv.sort_and_merge();
  return sv;
}

PolyMatrix PolyMatrix::renamed(const std::map<std::string, std::string>& mapping,
                               const LayoutPtr& target) const {
  // verify injectivity of the mapping over its image
  std::map<std::string, int> image;
  for (const auto& [from, to] : mapping)
    if (++image[to] > 1)
      throw std::invalid_argument("rename mapping not injective at '" + to + "'");
  PolyMatrix out(target);
  for (const auto& [key, blk] : blocks_) {
    std::string a = layout_->name(key.first);
    std::string b = layout_->name(key.second);
    auto ita = mapping.find(a);
    auto itb = mapping.find(b);
    const std::string& na = (ita == mapping.end()) ? a : ita->second;
    const std::string& nb = (itb == mapping.end()) ? b : itb->second;
    if (target->vdim(na) != blk.rows() || target->vdim(nb) != blk.cols())
      throw std::invalid_argument("rename: dim mismatch at (" + na + "," + nb + ")");
    out.add_block(na, nb, blk);
  }
  return out;
}

PolyMatrix PolyMatrix::embedded(const LayoutPtr& target) const {
  for (const auto& [name, d] : layout_->vars()) {
    if (!target->has(name) || target->vdim(name) != d)
      throw std::invalid_argument("embed: target layout lacks '" + name + "'");
  }
  PolyMatrix out(target);
  for (const auto& [key, blk] : blocks_)
    out.add_block(layout_->name(key.first), layout_->name(key.second), blk);
  return out;
}

PolyMatrix PolyMatrix::from_dense(const LayoutPtr& layout,
                                  const Eigen::MatrixXd& M, double drop_tol) {
  if (M.rows() != layout->dim() || M.cols() != layout->dim())
    throw std::invalid_argument("from_dense: size mismatch");
  PolyMatrix out(layout);
  const int nv = layout->nvars();
  for (int a = 0; a < nv; ++a)
    for (int b = a; b < nv; ++b) {
      int ro = layout->offset_of(a), co = layout->offset_of(b);
      int da = layout->vars()[a].second, db = layout->vars()[b].second;
      Eigen::MatrixXd blk = M.block(ro, co, da, db);
      if (blk.cwiseAbs().maxCoeff() > drop_tol)
        out.blocks_.emplace(std::make_pair(a, b), blk);
    }
  return out;
}

std::vector<PolyMatrix::Triplet> PolyMatrix::to_triplets(double drop_tol) const {
  std::vector<Triplet> ts;
  for (const auto& [key, blk] : blocks_) {
    Eigen::MatrixXd B = blk;
    if (key.first == key.second) B = 0.5 * (blk + blk.transpose());
    const std::string& a = layout_->name(key.first);
    const std::string& b = layout_->name(key.second);
    for (int r = 0; r < B.rows(); ++r)
      for (int c = 0; c < B.cols(); ++c) {
        if (key.first == key.second && r > c) continue;
        if (std::abs(B(r, c)) <= drop_tol) continue;
        ts.push_back({a, r, b, c, B(r, c)});
      }
  }
  return ts;
}

PolyMatrix PolyMatrix::from_triplets(const LayoutPtr& layout,
                                     const std::vector<Triplet>& ts) {
  PolyMatrix out(layout);
  for (const auto& t : ts) out.set_entry(t.rv, t.ro, t.cv, t.co, t.value);
  return out;
}

PolyMatrix homogenization_matrix(const LayoutPtr& layout) {
  PolyMatrix A0(layout);
  A0.set_entry("h", 0, "h", 0, 1.0);
  return A0;
}

}  // namespace ct
