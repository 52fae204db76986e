#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "gnncert/bounds.hpp"
#include "gnncert/model.hpp"
#include "gnncert/perturbation.hpp"

namespace gnncert {

enum class VarKind {
  Adjacency,       // A_u_v
  Feature,         // x_0_v_f
  Aux,             // y_l_u_v_f = A_{u,v} x_{u,f} feeding layer l
  PreAct,          // xb_l_v_f
  PostAct,         // x_l_v_f
  ReluIndicator,   // s_l_v_f
  Pooled,          // p_f
  DensePre,        // db_k_f
  DensePost,       // d_k_f
  DenseIndicator,  // ds_k_f
};

struct VarRef {
  VarKind kind = VarKind::Adjacency;
  int layer = 0;
  int u = 0;
  int v = 0;
  int f = 0;

  /// Canonical LP-safe identifier.
  std::string name() const;

  static VarRef adjacency(int u, int v) { return {VarKind::Adjacency, 0, u, v, 0}; }
  static VarRef feature(int v, int f) { return {VarKind::Feature, 0, 0, v, f}; }
  static VarRef aux(int l, int u, int v, int f) { return {VarKind::Aux, l, u, v, f}; }
  static VarRef preact(int l, int v, int f) { return {VarKind::PreAct, l, 0, v, f}; }
  static VarRef postact(int l, int v, int f) { return {VarKind::PostAct, l, 0, v, f}; }
  static VarRef relu(int l, int v, int f) { return {VarKind::ReluIndicator, l, 0, v, f}; }
  static VarRef pooled(int f) { return {VarKind::Pooled, 0, 0, 0, f}; }
  static VarRef dense_pre(int k, int f) { return {VarKind::DensePre, k, 0, 0, f}; }
  static VarRef dense_post(int k, int f) { return {VarKind::DensePost, k, 0, 0, f}; }
  static VarRef dense_relu(int k, int f) { return {VarKind::DenseIndicator, k, 0, 0, f}; }
};

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Term {
  double coef = 0.0;
  int var = 0;
};

struct LinearConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
  std::string tag;  // generating family, e.g. "aux_lo", "relu_on", "local"
  int index = 0;    // position within the family

  std::string name() const { return tag + "_" + std::to_string(index); }
};

struct Variable {
  VarRef ref;
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool binary = false;
};

/// minimize objective s.t. constraints, variable bounds, integrality.
class MIPModel {
 public:
  /// Throws InfiniteBound for non-finite bounds; returns the existing index
  /// when the variable is already declared.
  int add_variable(const VarRef& ref, double lo, double hi, bool binary = false);
  void add_constraint(std::vector<Term> terms, Sense sense, double rhs, const std::string& tag);

  int find(const std::string& name) const;
  int index_of(const VarRef& ref) const;

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  std::vector<Term> objective;

  int count_tag(const std::string& tag) const;
  int count_kind(VarKind kind) const;

 private:
  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  std::unordered_map<std::string, int> by_name_;
  std::map<std::string, int> tag_counts_;
};

struct EncodeOptions {
  /// Under P1, one variable per unordered pair instead of two ordered
  /// variables tied by symmetry equalities.
  bool merge_symmetric_pairs = false;
};

/// Big-M encoding of min f_{c*} - f_c over admissible A. Constants come only
/// from `bounds`. Throws UnboundedVariable when `bounds` does not cover the
/// network and InfiniteBound for non-finite entries.
MIPModel encode(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
                const BoundsTable& bounds, const EncodeOptions& options = {});

using Assignment = std::map<std::string, double>;

/// The point obtained by lifting the forward pass at `adjacency` into the
/// variables of `mip` (sigma = 1 iff the preactivation is positive).
Assignment induced_assignment(const MIPModel& mip, const MPNNModel& model, const GraphInstance& instance,
                              const Adjacency& adjacency);

/// Throws MissingVariable when `assignment` skips a declared variable.
bool check_feasible(const MIPModel& mip, const Assignment& assignment, double tol);
double objective_value(const MIPModel& mip, const Assignment& assignment);

/// CPLEX-LP text: Minimize / Subject To / Bounds / Binaries / End.
/// Bounds and binaries are sorted by name, rows by (tag, index).
void write_lp(const MIPModel& mip, std::ostream& out);
void write_lp(const MIPModel& mip, const std::string& path);
std::string to_lp_string(const MIPModel& mip);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_number(double x);

}  // namespace gnncert
