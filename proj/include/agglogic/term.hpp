#pragma once

// Terms of the averaging logic Agg(Mean, LMean, Sup): syntax, the closed
// Lipschitz function registry, parsing/printing, rank and slope calculi, and
// compilation of first-order graph formulas into 0/1-valued terms.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "agglogic/interval.hpp"

namespace agglogic {

// ---------------------------------------------------------------------------
// Function registry

enum class FunctionId {
  kNeg,
  kAdd,
  kSub,
  kScale,
  kShift,
  kMin,
  kMax,
  kAbs,
  kClip,
  kProd2,
  kNot,
  kAnd,
  kOr,
};

/// A registered Lipschitz function. Parameters (scale factor, shift amount,
/// clip bounds) are written as leading real literals in the concrete syntax,
/// e.g. `scale(0.5, val1(u))` or `clip(0, 1, x)`.
struct FunctionRegistryEntry {
  FunctionId id;
  std::string_view name;
  int arity;
  int param_count;
  /// Declared input box used for Lipschitz spot checks.
  Interval input_box;

  double (*apply)(std::span<const double> args, std::span<const double> params);
  /// Sup-norm Lipschitz constant of the function on the given input box.
  double (*slope)(std::span<const double> params, std::span<const Interval> inputs);
  /// Interval image of the given input box.
  Interval (*image)(std::span<const double> params, std::span<const Interval> inputs);
};

std::span<const FunctionRegistryEntry> function_registry();
const FunctionRegistryEntry& function_entry(FunctionId id);
const FunctionRegistryEntry* find_function(std::string_view name);

// ---------------------------------------------------------------------------
// Errors

enum class TermErrorKind {
  kSyntax,
  kUnknownFunction,
  kArityMismatch,
  kUnboundAnchor,
  kUnboundVariable,
  kInvalidTerm,
};

class TermError : public std::runtime_error {
 public:
  TermError(TermErrorKind kind, std::size_t position, const std::string& what)
      : std::runtime_error(what), kind_(kind), position_(position) {}

  [[nodiscard]] TermErrorKind kind() const { return kind_; }
  /// Byte offset into the parsed text (0 for errors not tied to a position).
  [[nodiscard]] std::size_t position() const { return position_; }

 private:
  TermErrorKind kind_;
  std::size_t position_;
};

// ---------------------------------------------------------------------------
// Name-based syntax trees, produced by the parser and the builders below.

enum class TermKind { kConst, kVal, kEdge, kEq, kApply, kMean, kLMean, kSup };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  TermKind kind;
  double value = 0.0;          // kConst
  int feature = 0;             // kVal, 0-based feature index
  std::string var;             // kVal variable, kEdge/kEq first, binder name
  std::string other;           // kEdge/kEq second, kLMean anchor
  FunctionId fn = FunctionId::kNeg;
  std::vector<double> params;  // kApply
  std::vector<ExprPtr> args;   // kApply arguments, aggregator body
  std::size_t position = 0;    // source offset, for diagnostics
};

namespace build {
ExprPtr constant(double c);
/// `feature` is 1-based as in the concrete syntax (`val1(u)`).
ExprPtr val(int feature, std::string var);
ExprPtr edge(std::string a, std::string b);
ExprPtr eq(std::string a, std::string b);
ExprPtr apply(FunctionId fn, std::vector<ExprPtr> args, std::vector<double> params = {});
ExprPtr mean(std::string var, ExprPtr body);
ExprPtr lmean(std::string var, std::string anchor, ExprPtr body);
ExprPtr sup(std::string var, ExprPtr body);
}  // namespace build

// ---------------------------------------------------------------------------
// Resolved terms. Variables are replaced by slots: free variables occupy
// slots 0..k-1 in the order of free_variables(), and every aggregator binds
// the slot equal to the number of variables in scope at that aggregator.
// Slots therefore coincide with root positions during evaluation.

struct TermNode {
  TermKind kind;
  double value = 0.0;
  int feature = 0;
  int a = -1;  // kVal variable, kEdge/kEq first, kLMean anchor
  int b = -1;  // kEdge/kEq second
  FunctionId fn = FunctionId::kNeg;
  std::vector<double> params;
  std::vector<int> children;
  int scope = 0;  // variables in scope at this node
  std::string bound_name;
};

class Term {
 public:
  Term() = default;

  [[nodiscard]] const TermNode& node(int i) const { return data_->nodes[static_cast<std::size_t>(i)]; }
  [[nodiscard]] int root() const { return data_->root; }
  [[nodiscard]] std::size_t size() const { return data_->nodes.size(); }
  [[nodiscard]] const std::vector<std::string>& free_variables() const { return data_->free_vars; }
  [[nodiscard]] int arity() const { return static_cast<int>(data_->free_vars.size()); }
  [[nodiscard]] bool closed() const { return data_->free_vars.empty(); }
  [[nodiscard]] bool empty() const { return data_ == nullptr; }

  /// Largest 1-based feature index referenced (0 when no Val atom occurs).
  [[nodiscard]] int feature_dimension() const;
  [[nodiscard]] bool contains(TermKind kind) const;

  /// Reconstructs the name-based syntax tree (with alpha-renamed binders).
  [[nodiscard]] ExprPtr to_expr() const;

 private:
  struct Data {
    std::vector<TermNode> nodes;
    int root = -1;
    std::vector<std::string> free_vars;
  };
  std::shared_ptr<const Data> data_;

  friend Term make_term(const ExprPtr&, std::optional<std::vector<std::string>>);
};

/// Resolves names into slots and alpha-renames shadowing binders. When
/// `free_vars` is given it fixes the free variables and their order;
/// otherwise free variables are collected in order of first occurrence, and
/// an LMean anchor must be bound, declared, or occur free elsewhere.
Term make_term(const ExprPtr& expr, std::optional<std::vector<std::string>> free_vars = std::nullopt);

Term parse_term(std::string_view text, std::optional<std::vector<std::string>> free_vars = std::nullopt);

std::string to_string(const Term& t);
std::string to_string(const ExprPtr& e);

/// Structural equality of resolved terms (binder names ignored).
bool same_structure(const Term& a, const Term& b);

// ---------------------------------------------------------------------------
// Metrics

struct TermMetrics {
  int rank = 0;
  int srank = 0;
  int mrank = 0;
  int lmrank = 0;
  double slope = 0.0;
  Interval bound;
};

/// Metrics of every node, indexed like Term::node. `feature_box` gives the
/// range of each feature coordinate.
std::vector<TermMetrics> subterm_metrics(const Term& t, std::span<const Interval> feature_box);
TermMetrics metrics(const Term& t, std::span<const Interval> feature_box);

/// max |bound| over all subterms: the constant C of the game parameter
/// eta = epsilon / (4C).
double subterm_magnitude(const Term& t, std::span<const Interval> feature_box);

/// True when the subterm at `node` reads the features of `slot`.
bool reads_features_of(const Term& t, int node, int slot);

/// r_k = (3^k - 1) / 2.
std::size_t core_radius(int k);

// ---------------------------------------------------------------------------
// First-order graph formulas

enum class FOKind { kTrue, kFalse, kEdge, kEq, kNot, kAnd, kOr, kExists, kForall };

struct FOFormula;
using FOPtr = std::shared_ptr<const FOFormula>;

struct FOFormula {
  FOKind kind;
  std::string a;  // atom variables, quantified variable
  std::string b;
  std::vector<FOPtr> args;
};

namespace fo {
FOPtr truth();
FOPtr falsity();
FOPtr edge(std::string a, std::string b);
FOPtr eq(std::string a, std::string b);
FOPtr negate(FOPtr f);
FOPtr conj(FOPtr f, FOPtr g);
FOPtr disj(FOPtr f, FOPtr g);
FOPtr exists(std::string v, FOPtr f);
FOPtr forall(std::string v, FOPtr f);
/// Exists u, v, w forming a triangle.
FOPtr triangle();
}  // namespace fo

std::string to_string(const FOPtr& f);

/// Characteristic term: 1 where the formula holds, 0 otherwise. Exists
/// becomes sup, Forall becomes not(sup not(.)), connectives use the slope-1
/// extensions not = 1 - x, and = min, or = max.
ExprPtr compile_fo_expr(const FOPtr& phi);
Term compile_fo(const FOPtr& phi, std::optional<std::vector<std::string>> free_vars = std::nullopt);

}  // namespace agglogic
