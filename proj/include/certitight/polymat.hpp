#pragma once
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ct {

// Ordered list of (variable name, dimension). The homogenization scalar "h"
// is always present, first, with dimension 1; everything downstream leans on
// that invariant (A_0 placement, candidate scaling, template instantiation).
class VarLayout {
 public:
  static std::shared_ptr<const VarLayout> create(
      std::vector<std::pair<std::string, int>> vars);

  int dim() const { return dim_; }
  int nvars() const { return int(vars_.size()); }
  const std::vector<std::pair<std::string, int>>& vars() const { return vars_; }

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  int index(const std::string& name) const;
  int offset(const std::string& name) const { return offsets_[index(name)]; }
  int offset_of(int var_index) const { return offsets_[var_index]; }
  int vdim(const std::string& name) const { return vars_[index(name)].second; }
  const std::string& name(int var_index) const { return vars_[var_index].first; }

  bool same_as(const VarLayout& other) const { return vars_ == other.vars_; }

 private:
  std::vector<std::pair<std::string, int>> vars_;
  std::vector<int> offsets_;
  std::map<std::string, int> index_;
  int dim_ = 0;
};

using LayoutPtr = std::shared_ptr<const VarLayout>;

// --- vech algebra -----------------------------------------------------------
// Upper triangle, row-major: (1,1),(1,2),...,(1,N),(2,2),... Off-diagonal
// entries are scaled by sqrt(2) so that <A,B> = vech(A)'vech(B) exactly.

inline long vech_len(long N) { return N * (N + 1) / 2; }
int vech_dim_from_len(long len);  // inverse triangular number, throws if not

Eigen::VectorXd vech(const Eigen::MatrixXd& M, double sym_tol = 1e-12);
Eigen::MatrixXd vech_inv(const Eigen::VectorXd& v);

// Flat index of (i,j), i<=j, in the vech ordering of an NxN matrix.
inline long vech_index(int i, int j, int N) {
  return (long)i * N - (long)i * (i - 1) / 2 + (j - i);
}

// Sparse vector in vech coordinates; indices strictly increasing.
struct SparseVec {
  std::vector<std::pair<long, double>> entries;
  long n = 0;
  void sort_and_merge();
  double max_abs() const;
  void scale(double a);
};

// --- named-block symmetric sparse matrix ------------------------------------
// Blocks are stored densely per unordered variable pair (they are tiny);
// sparsity lives at block granularity. Only keys (i,j) with i<=j are kept.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  explicit PolyMatrix(LayoutPtr layout) : layout_(std::move(layout)) {}

  const LayoutPtr& layout() const { return layout_; }

  // Accumulate M into block (a,b). For a==b the stored block is symmetrized
  // on materialization; callers may pass either triangle for a!=b (the pair
  // is canonicalized, transposing as needed).
  void add_block(const std::string& a, const std::string& b,
                 const Eigen::MatrixXd& M);
  void set_entry(const std::string& a, int ia, const std::string& b, int ib,
                 double value);  // sets the symmetric entry pair
  void add_entry(const std::string& a, int ia, const std::string& b, int ib,
                 double value);

  bool empty() const { return blocks_.empty(); }
  const std::map<std::pair<int, int>, Eigen::MatrixXd>& blocks() const {
    return blocks_;
  }

  Eigen::MatrixXd dense() const;
  SparseVec vech_sparse(double drop_tol = 0.0) const;

  // Variable renaming: values untouched, keys rewritten. The mapping must be
  // injective; unmapped variables keep their names. Renamed dims must match.
  PolyMatrix renamed(const std::map<std::string, std::string>& mapping,
                     const LayoutPtr& target) const;

  // Zero-padding into a larger layout containing all of this matrix's
  // variables (with equal dims).
  PolyMatrix embedded(const LayoutPtr& target) const;

  static PolyMatrix from_dense(const LayoutPtr& layout,
                               const Eigen::MatrixXd& M,
                               double drop_tol = 0.0);

  // Upper-triangular triplet form used by the template JSON:
  // (row-var, row-offset, col-var, col-offset, value).
  struct Triplet {
    std::string rv;
    int ro;
    std::string cv;
    int co;
    double value;
  };
  std::vector<Triplet> to_triplets(double drop_tol = 0.0) const;
  static PolyMatrix from_triplets(const LayoutPtr& layout,
                                  const std::vector<Triplet>& ts);

 private:
  LayoutPtr layout_;
  std::map<std::pair<int, int>, Eigen::MatrixXd> blocks_;
};

// The homogenization constraint matrix: single 1 at the (h,h) entry.
PolyMatrix homogenization_matrix(const LayoutPtr& layout);

}  // namespace ct
