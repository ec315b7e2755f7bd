#include "agglogic/term.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

namespace agglogic {

// ---------------------------------------------------------------------------
// Registry

namespace {

constexpr Interval kDefaultBox{-10.0, 10.0};

double unary_slope_one(std::span<const double>, std::span<const Interval>) { return 1.0; }
double binary_slope_two(std::span<const double>, std::span<const Interval>) { return 2.0; }

Interval min_image(std::span<const double>, std::span<const Interval> in) {
  return {std::min(in[0].lo, in[1].lo), std::min(in[0].hi, in[1].hi)};
}
Interval max_image(std::span<const double>, std::span<const Interval> in) {
  return {std::max(in[0].lo, in[1].lo), std::max(in[0].hi, in[1].hi)};
}
double min_apply(std::span<const double> x, std::span<const double>) { return std::min(x[0], x[1]); }
double max_apply(std::span<const double> x, std::span<const double>) { return std::max(x[0], x[1]); }

Interval prod_image(std::span<const double>, std::span<const Interval> in) {
  const std::array<double, 4> c{in[0].lo * in[1].lo, in[0].lo * in[1].hi, in[0].hi * in[1].lo,
                                in[0].hi * in[1].hi};
  return {*std::min_element(c.begin(), c.end()), *std::max_element(c.begin(), c.end())};
}

const std::array<FunctionRegistryEntry, 13> kRegistry{{
    {FunctionId::kNeg, "neg", 1, 0, kDefaultBox,
     [](std::span<const double> x, std::span<const double>) { return -x[0]; }, unary_slope_one,
     [](std::span<const double>, std::span<const Interval> in) { return Interval{-in[0].hi, -in[0].lo}; }},
    {FunctionId::kAdd, "add", 2, 0, kDefaultBox,
     [](std::span<const double> x, std::span<const double>) { return x[0] + x[1]; }, binary_slope_two,
     [](std::span<const double>, std::span<const Interval> in) {
       return Interval{in[0].lo + in[1].lo, in[0].hi + in[1].hi};
     }},
    {FunctionId::kSub, "sub", 2, 0, kDefaultBox,
     [](std::span<const double> x, std::span<const double>) { return x[0] - x[1]; }, binary_slope_two,
     [](std::span<const double>, std::span<const Interval> in) {
       return Interval{in[0].lo - in[1].hi, in[0].hi - in[1].lo};
     }},
    {FunctionId::kScale, "scale", 1, 1, kDefaultBox,
     [](std::span<const double> x, std::span<const double> p) { return p[0] * x[0]; },
     [](std::span<const double> p, std::span<const Interval>) { return std::fabs(p[0]); },
     [](std::span<const double> p, std::span<const Interval> in) {
       const double a = p[0] * in[0].lo;
       const double b = p[0] * in[0].hi;
       return Interval{std::min(a, b), std::max(a, b)};
     }},
    {FunctionId::kShift, "shift", 1, 1, kDefaultBox,
     [](std::span<const double> x, std::span<const double> p) { return x[0] + p[0]; }, unary_slope_one,
     [](std::span<const double> p, std::span<const Interval> in) {
       return Interval{in[0].lo + p[0], in[0].hi + p[0]};
     }},
    {FunctionId::kMin, "min", 2, 0, kDefaultBox, min_apply, unary_slope_one, min_image},
    {FunctionId::kMax, "max", 2, 0, kDefaultBox, max_apply, unary_slope_one, max_image},
    {FunctionId::kAbs, "abs", 1, 0, kDefaultBox,
     [](std::span<const double> x, std::span<const double>) { return std::fabs(x[0]); }, unary_slope_one,
     [](std::span<const double>, std::span<const Interval> in) {
       if (in[0].lo >= 0) return in[0];
       if (in[0].hi <= 0) return Interval{-in[0].hi, -in[0].lo};
       return Interval{0.0, std::max(-in[0].lo, in[0].hi)};
     }},
    {FunctionId::kClip, "clip", 1, 2, kDefaultBox,
     [](std::span<const double> x, std::span<const double> p) { return std::clamp(x[0], p[0], p[1]); },
     unary_slope_one,
     [](std::span<const double> p, std::span<const Interval> in) {
       return Interval{std::clamp(in[0].lo, p[0], p[1]), std::clamp(in[0].hi, p[0], p[1])};
     }},
    {FunctionId::kProd2, "prod2", 2, 0, kDefaultBox,
     [](std::span<const double> x, std::span<const double>) { return x[0] * x[1]; },
     // |xy - x'y'| <= |x||y - y'| + |y'||x - x'|
     [](std::span<const double>, std::span<const Interval> in) { return in[0].magnitude() + in[1].magnitude(); },
     prod_image},
    {FunctionId::kNot, "not", 1, 0, kDefaultBox,
     [](std::span<const double> x, std::span<const double>) { return 1.0 - x[0]; }, unary_slope_one,
     [](std::span<const double>, std::span<const Interval> in) { return Interval{1.0 - in[0].hi, 1.0 - in[0].lo}; }},
    {FunctionId::kAnd, "and", 2, 0, kDefaultBox, min_apply, unary_slope_one, min_image},
    {FunctionId::kOr, "or", 2, 0, kDefaultBox, max_apply, unary_slope_one, max_image},
}};

}  // namespace

std::span<const FunctionRegistryEntry> function_registry() { return kRegistry; }

const FunctionRegistryEntry& function_entry(FunctionId id) {
  for (const auto& e : kRegistry) {
    if (e.id == id) return e;
  }
  throw std::logic_error("unregistered function id");
}

const FunctionRegistryEntry* find_function(std::string_view name) {
  for (const auto& e : kRegistry) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Builders

namespace build {

namespace {
std::shared_ptr<Expr> node(TermKind k) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  return e;
}
}  // namespace

ExprPtr constant(double c) {
  auto e = node(TermKind::kConst);
  e->value = c;
  return e;
}

ExprPtr val(int feature, std::string var) {
  if (feature < 1) throw TermError(TermErrorKind::kInvalidTerm, 0, "feature index must be >= 1");
  auto e = node(TermKind::kVal);
  e->feature = feature - 1;
  e->var = std::move(var);
  return e;
}

ExprPtr edge(std::string a, std::string b) {
  auto e = node(TermKind::kEdge);
  e->var = std::move(a);
  e->other = std::move(b);
  return e;
}

ExprPtr eq(std::string a, std::string b) {
  auto e = node(TermKind::kEq);
  e->var = std::move(a);
  e->other = std::move(b);
  return e;
}

ExprPtr apply(FunctionId fn, std::vector<ExprPtr> args, std::vector<double> params) {
  auto e = node(TermKind::kApply);
  e->fn = fn;
  e->args = std::move(args);
  e->params = std::move(params);
  return e;
}

ExprPtr mean(std::string var, ExprPtr body) {
  auto e = node(TermKind::kMean);
  e->var = std::move(var);
  e->args = {std::move(body)};
  return e;
}

ExprPtr lmean(std::string var, std::string anchor, ExprPtr body) {
  auto e = node(TermKind::kLMean);
  e->var = std::move(var);
  e->other = std::move(anchor);
  e->args = {std::move(body)};
  return e;
}

ExprPtr sup(std::string var, ExprPtr body) {
  auto e = node(TermKind::kSup);
  e->var = std::move(var);
  e->args = {std::move(body)};
  return e;
}

}  // namespace build

// ---------------------------------------------------------------------------
// Resolution

namespace {


void collect_names(const Expr& e, std::set<std::string>& out) {
  if (!e.var.empty()) out.insert(e.var);
  if (!e.other.empty()) out.insert(e.other);
  for (const auto& a : e.args) collect_names(*a, out);
}

struct FreeScan {
  std::vector<std::string> free;
  std::vector<std::pair<std::string, std::size_t>> anchors;

  void note(const std::string& v, const std::vector<std::string>& bound) {
    if (std::find(bound.begin(), bound.end(), v) != bound.end()) return;
    if (std::find(free.begin(), free.end(), v) == free.end()) free.push_back(v);
  }

  void scan(const Expr& e, std::vector<std::string>& bound) {
    switch (e.kind) {
      case TermKind::kVal:
        note(e.var, bound);
        break;
      case TermKind::kEdge:
      case TermKind::kEq:
        note(e.var, bound);
        note(e.other, bound);
        break;
      case TermKind::kLMean:
        if (std::find(bound.begin(), bound.end(), e.other) == bound.end()) {
          anchors.emplace_back(e.other, e.position);
        }
        [[fallthrough]];
      case TermKind::kMean:
      case TermKind::kSup:
        bound.push_back(e.var);
        scan(*e.args[0], bound);
        bound.pop_back();
        break;
      case TermKind::kApply:
        for (const auto& a : e.args) scan(*a, bound);
        break;
      case TermKind::kConst:
        break;
    }
  }
};

class Resolver {
 public:
  Resolver(std::vector<TermNode>& nodes, std::set<std::string> used) : nodes_(nodes), used_(std::move(used)) {}

  int resolve(const Expr& e, std::vector<std::string>& scope_orig, std::vector<std::string>& scope_names) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(TermNode{});
    TermNode n;
    n.kind = e.kind;
    n.scope = static_cast<int>(scope_orig.size());
    switch (e.kind) {
      case TermKind::kConst:
        n.value = e.value;
        break;
      case TermKind::kVal:
        n.feature = e.feature;
        n.a = lookup(e.var, scope_orig, e.position, TermErrorKind::kUnboundVariable);
        break;
      case TermKind::kEdge:
      case TermKind::kEq:
        n.a = lookup(e.var, scope_orig, e.position, TermErrorKind::kUnboundVariable);
        n.b = lookup(e.other, scope_orig, e.position, TermErrorKind::kUnboundVariable);
        break;
      case TermKind::kApply: {
        const auto& entry = function_entry(e.fn);
        if (static_cast<int>(e.args.size()) != entry.arity) {
          throw TermError(TermErrorKind::kArityMismatch, e.position,
                          std::string(entry.name) + " expects " + std::to_string(entry.arity) + " argument(s), got " +
                              std::to_string(e.args.size()));
        }
        if (static_cast<int>(e.params.size()) != entry.param_count) {
          throw TermError(TermErrorKind::kArityMismatch, e.position,
                          std::string(entry.name) + " expects " + std::to_string(entry.param_count) +
                              " parameter(s)");
        }
        if (e.fn == FunctionId::kClip && e.params[0] > e.params[1]) {
          throw TermError(TermErrorKind::kInvalidTerm, e.position, "clip bounds out of order");
        }
        n.fn = e.fn;
        n.params = e.params;
        for (const auto& a : e.args) n.children.push_back(resolve(*a, scope_orig, scope_names));
        break;
      }
      case TermKind::kMean:
      case TermKind::kLMean:
      case TermKind::kSup: {
        if (e.kind == TermKind::kLMean) {
          n.a = lookup(e.other, scope_orig, e.position, TermErrorKind::kUnboundAnchor);
        }
        std::string name = e.var;
        if (std::find(scope_names.begin(), scope_names.end(), name) != scope_names.end()) name = fresh(name);
        n.bound_name = name;
        scope_orig.push_back(e.var);
        scope_names.push_back(name);
        n.children.push_back(resolve(*e.args[0], scope_orig, scope_names));
        scope_orig.pop_back();
        scope_names.pop_back();
        break;
      }
    }
    nodes_[static_cast<std::size_t>(idx)] = std::move(n);
    return idx;
  }

 private:
  static int lookup(const std::string& v, const std::vector<std::string>& scope, std::size_t pos,
                    TermErrorKind kind) {
    for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i) {
      if (scope[static_cast<std::size_t>(i)] == v) return i;
    }
    throw TermError(kind, pos,
                    (kind == TermErrorKind::kUnboundAnchor ? "unbound anchor variable '" : "unbound variable '") +
                        v + "'");
  }

  std::string fresh(const std::string& base) {
    for (int i = 1;; ++i) {
      std::string candidate = base + std::to_string(i);
      if (used_.insert(candidate).second) return candidate;
    }
  }

  std::vector<TermNode>& nodes_;
  std::set<std::string> used_;
};

}  // namespace

Term make_term(const ExprPtr& expr, std::optional<std::vector<std::string>> free_vars) {
  if (!expr) throw TermError(TermErrorKind::kInvalidTerm, 0, "null expression");
  std::vector<std::string> free;
  if (free_vars) {
    free = *free_vars;
    std::set<std::string> seen(free.begin(), free.end());
    if (seen.size() != free.size()) throw TermError(TermErrorKind::kInvalidTerm, 0, "duplicate free variable");
  } else {
    FreeScan scan;
    std::vector<std::string> bound;
    scan.scan(*expr, bound);
    for (const auto& [anchor, pos] : scan.anchors) {
      if (std::find(scan.free.begin(), scan.free.end(), anchor) == scan.free.end()) {
        throw TermError(TermErrorKind::kUnboundAnchor, pos, "unbound anchor variable '" + anchor + "'");
      }
    }
    free = std::move(scan.free);
  }

  std::set<std::string> used;
  collect_names(*expr, used);
  used.insert(free.begin(), free.end());

  auto data = std::make_shared<Term::Data>();
  Resolver resolver(data->nodes, std::move(used));
  std::vector<std::string> scope_orig = free;
  std::vector<std::string> scope_names = free;
  data->root = resolver.resolve(*expr, scope_orig, scope_names);
  data->free_vars = std::move(free);

  Term t;
  t.data_ = std::move(data);
  return t;
}

int Term::feature_dimension() const {
  int d = 0;
  for (const auto& n : data_->nodes) {
    if (n.kind == TermKind::kVal) d = std::max(d, n.feature + 1);
  }
  return d;
}

bool Term::contains(TermKind kind) const {
  return std::any_of(data_->nodes.begin(), data_->nodes.end(), [&](const TermNode& n) { return n.kind == kind; });
}

ExprPtr Term::to_expr() const {
  std::vector<std::string> names = data_->free_vars;
  std::function<ExprPtr(int)> rec = [&](int i) -> ExprPtr {
    const TermNode& n = node(i);
    auto nm = [&](int slot) { return names[static_cast<std::size_t>(slot)]; };
    switch (n.kind) {
      case TermKind::kConst:
        return build::constant(n.value);
      case TermKind::kVal:
        return build::val(n.feature + 1, nm(n.a));
      case TermKind::kEdge:
        return build::edge(nm(n.a), nm(n.b));
      case TermKind::kEq:
        return build::eq(nm(n.a), nm(n.b));
      case TermKind::kApply: {
        std::vector<ExprPtr> args;
        for (int c : n.children) args.push_back(rec(c));
        return build::apply(n.fn, std::move(args), n.params);
      }
      default: {
        const std::string anchor = n.kind == TermKind::kLMean ? nm(n.a) : std::string();
        names.resize(static_cast<std::size_t>(n.scope));
        names.push_back(n.bound_name);
        ExprPtr body = rec(n.children[0]);
        names.pop_back();
        if (n.kind == TermKind::kMean) return build::mean(n.bound_name, body);
        if (n.kind == TermKind::kSup) return build::sup(n.bound_name, body);
        return build::lmean(n.bound_name, anchor, body);
      }
    }
  };
  return rec(root());
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { kIdent, kNumber, kLParen, kRParen, kComma, kDot, kTilde, kEquals, kEnd };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    const bool signed_number = (c == '-' || c == '+') && i + 1 < s.size() &&
                               (std::isdigit(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '.');
    if (std::isdigit(static_cast<unsigned char>(c)) || signed_number ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      ++i;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E') && i + 1 < s.size() &&
          (std::isdigit(static_cast<unsigned char>(s[i + 1])) ||
           ((s[i + 1] == '-' || s[i + 1] == '+') && i + 2 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[i + 2]))))) {
        i += 2;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      }
      out.push_back({Tok::kNumber, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::kIdent, std::string(s.substr(start, i - start)), start});
      continue;
    }
    Tok k;
    switch (c) {
      case '(': k = Tok::kLParen; break;
      case ')': k = Tok::kRParen; break;
      case ',': k = Tok::kComma; break;
      case '.': k = Tok::kDot; break;
      case '~': k = Tok::kTilde; break;
      case '=': k = Tok::kEquals; break;
      default:
        throw TermError(TermErrorKind::kSyntax, start, std::string("unexpected character '") + c + "'");
    }
    out.push_back({k, std::string(1, c), start});
    ++i;
  }
  out.push_back({Tok::kEnd, "", s.size()});
  return out;
}

bool is_var_name(const std::string& s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); });
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  ExprPtr parse() {
    ExprPtr e = term();
    if (peek().kind != Tok::kEnd) fail(peek(), "trailing input");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw TermError(TermErrorKind::kSyntax, t.pos,
                    msg + " at offset " + std::to_string(t.pos) + (t.text.empty() ? "" : " near '" + t.text + "'"));
  }

  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) fail(peek(), std::string("expected ") + what);
    return next();
  }

  std::string var() {
    const Token& t = peek();
    if (t.kind != Tok::kIdent || !is_var_name(t.text)) fail(t, "expected variable");
    return next().text;
  }

  double number(const Token& t) {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail(t, "malformed number");
    return v;
  }

  ExprPtr term() {
    const Token& t = peek();
    if (t.kind == Tok::kNumber) {
      next();
      auto e = std::const_pointer_cast<Expr>(build::constant(number(t)));
      e->position = t.pos;
      return e;
    }
    if (t.kind != Tok::kIdent) fail(t, "expected term");
    const std::string& w = t.text;
    const std::size_t pos = t.pos;

    if (w == "mean" || w == "sup") {
      next();
      std::string v = var();
      expect(Tok::kDot, "'.'");
      ExprPtr body = term();
      auto e = std::const_pointer_cast<Expr>(w == "mean" ? build::mean(v, body) : build::sup(v, body));
      e->position = pos;
      return e;
    }
    if (w == "lmean") {
      next();
      std::string v = var();
      expect(Tok::kTilde, "'~'");
      std::string anchor = var();
      expect(Tok::kDot, "'.'");
      ExprPtr body = term();
      auto e = std::const_pointer_cast<Expr>(build::lmean(v, anchor, body));
      e->position = pos;
      return e;
    }
    if (w == "E" && peek(1).kind == Tok::kLParen) {
      next();
      next();
      std::string a = var();
      expect(Tok::kComma, "','");
      std::string b = var();
      expect(Tok::kRParen, "')'");
      auto e = std::const_pointer_cast<Expr>(build::edge(a, b));
      e->position = pos;
      return e;
    }
    if (w.size() > 3 && w.compare(0, 3, "val") == 0 &&
        std::all_of(w.begin() + 3, w.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        peek(1).kind == Tok::kLParen) {
      next();
      next();
      const int feature = std::stoi(w.substr(3));
      if (feature < 1) fail(t, "feature index must be >= 1");
      std::string v = var();
      expect(Tok::kRParen, "')'");
      auto e = std::const_pointer_cast<Expr>(build::val(feature, v));
      e->position = pos;
      return e;
    }
    if (peek(1).kind == Tok::kEquals) {
      std::string a = var();
      next();
      std::string b = var();
      auto e = std::const_pointer_cast<Expr>(build::eq(a, b));
      e->position = pos;
      return e;
    }
    if (peek(1).kind == Tok::kLParen) {
      const FunctionRegistryEntry* entry = find_function(w);
      if (entry == nullptr) throw TermError(TermErrorKind::kUnknownFunction, pos, "unknown function '" + w + "'");
      next();
      next();
      std::vector<ExprPtr> items;
      items.push_back(term());
      while (peek().kind == Tok::kComma) {
        next();
        items.push_back(term());
      }
      expect(Tok::kRParen, "')'");
      const auto expected = static_cast<std::size_t>(entry->arity + entry->param_count);
      if (items.size() != expected) {
        throw TermError(TermErrorKind::kArityMismatch, pos,
                        w + " expects " + std::to_string(expected) + " argument(s), got " +
                            std::to_string(items.size()));
      }
      std::vector<double> params;
      for (int i = 0; i < entry->param_count; ++i) {
        const auto& p = items[static_cast<std::size_t>(i)];
        if (p->kind != TermKind::kConst) {
          throw TermError(TermErrorKind::kSyntax, p->position, w + " parameters must be real literals");
        }
        params.push_back(p->value);
      }
      std::vector<ExprPtr> args(items.begin() + entry->param_count, items.end());
      auto e = std::const_pointer_cast<Expr>(build::apply(entry->id, std::move(args), std::move(params)));
      e->position = pos;
      return e;
    }
    fail(t, "expected term");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), ptr);
  return s;
}

void print_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case TermKind::kConst:
      out += format_real(e.value);
      return;
    case TermKind::kVal:
      out += "val" + std::to_string(e.feature + 1) + "(" + e.var + ")";
      return;
    case TermKind::kEdge:
      out += "E(" + e.var + ", " + e.other + ")";
      return;
    case TermKind::kEq:
      out += e.var + " = " + e.other;
      return;
    case TermKind::kApply: {
      out += function_entry(e.fn).name;
      out += "(";
      bool first = true;
      for (double p : e.params) {
        if (!first) out += ", ";
        out += format_real(p);
        first = false;
      }
      for (const auto& a : e.args) {
        if (!first) out += ", ";
        print_expr(*a, out);
        first = false;
      }
      out += ")";
      return;
    }
    case TermKind::kMean:
      out += "mean " + e.var + " . ";
      break;
    case TermKind::kSup:
      out += "sup " + e.var + " . ";
      break;
    case TermKind::kLMean:
      out += "lmean " + e.var + " ~ " + e.other + " . ";
      break;
  }
  print_expr(*e.args[0], out);
}

}  // namespace

Term parse_term(std::string_view text, std::optional<std::vector<std::string>> free_vars) {
  return make_term(Parser(text).parse(), std::move(free_vars));
}

std::string to_string(const ExprPtr& e) {
  std::string out;
  print_expr(*e, out);
  return out;
}

std::string to_string(const Term& t) { return to_string(t.to_expr()); }

bool same_structure(const Term& a, const Term& b) {
  if (a.arity() != b.arity() || a.size() != b.size()) return false;
  std::function<bool(int, int)> eq = [&](int i, int j) {
    const TermNode& x = a.node(i);
    const TermNode& y = b.node(j);
    if (x.kind != y.kind || x.a != y.a || x.b != y.b || x.scope != y.scope) return false;
    if (x.kind == TermKind::kConst && x.value != y.value) return false;
    if (x.kind == TermKind::kVal && x.feature != y.feature) return false;
    if (x.kind == TermKind::kApply && (x.fn != y.fn || x.params != y.params)) return false;
    if (x.children.size() != y.children.size()) return false;
    for (std::size_t c = 0; c < x.children.size(); ++c) {
      if (!eq(x.children[c], y.children[c])) return false;
    }
    return true;
  };
  return eq(a.root(), b.root());
}

// ---------------------------------------------------------------------------
// Metrics

std::vector<TermMetrics> subterm_metrics(const Term& t, std::span<const Interval> feature_box) {
  std::vector<TermMetrics> m(t.size());
  // Children always follow their parent in node order.
  for (int i = static_cast<int>(t.size()) - 1; i >= 0; --i) {
    const TermNode& n = t.node(i);
    TermMetrics& out = m[static_cast<std::size_t>(i)];
    switch (n.kind) {
      case TermKind::kConst:
        out.bound = {n.value, n.value};
        break;
      case TermKind::kVal:
        if (static_cast<std::size_t>(n.feature) >= feature_box.size()) {
          throw TermError(TermErrorKind::kInvalidTerm, 0,
                          "val" + std::to_string(n.feature + 1) + " exceeds the feature dimension");
        }
        out.slope = 1.0;
        out.bound = feature_box[static_cast<std::size_t>(n.feature)];
        break;
      case TermKind::kEdge:
      case TermKind::kEq:
        out.slope = 1.0;
        out.bound = {0.0, 1.0};
        break;
      case TermKind::kApply: {
        const auto& entry = function_entry(n.fn);
        std::vector<Interval> in;
        double child_slope = 0.0;
        for (int c : n.children) {
          const auto& cm = m[static_cast<std::size_t>(c)];
          in.push_back(cm.bound);
          out.rank = std::max(out.rank, cm.rank);
          out.srank = std::max(out.srank, cm.srank);
          out.mrank = std::max(out.mrank, cm.mrank);
          out.lmrank = std::max(out.lmrank, cm.lmrank);
          child_slope = std::max(child_slope, cm.slope);
        }
        out.slope = entry.slope(n.params, in) * child_slope;
        out.bound = entry.image(n.params, in);
        break;
      }
      case TermKind::kMean:
      case TermKind::kLMean:
      case TermKind::kSup: {
        const auto& cm = m[static_cast<std::size_t>(n.children[0])];
        out = cm;
        out.rank = cm.rank + 1;
        if (n.kind == TermKind::kSup) {
          out.srank = cm.srank + 1;
        } else {
          out.mrank = cm.mrank + 1;
          out.slope = cm.slope + 1.0;
        }
        if (n.kind == TermKind::kLMean) {
          out.lmrank = cm.lmrank + 1;
          out.bound = hull(cm.bound, 0.0);
        }
        break;
      }
    }
  }
  return m;
}

TermMetrics metrics(const Term& t, std::span<const Interval> feature_box) {
  return subterm_metrics(t, feature_box)[static_cast<std::size_t>(t.root())];
}

double subterm_magnitude(const Term& t, std::span<const Interval> feature_box) {
  double c = 0.0;
  for (const auto& m : subterm_metrics(t, feature_box)) c = std::max(c, m.bound.magnitude());
  return c;
}

bool reads_features_of(const Term& t, int node, int slot) {
  const TermNode& n = t.node(node);
  if (n.kind == TermKind::kVal) return n.a == slot;
  return std::any_of(n.children.begin(), n.children.end(), [&](int c) { return reads_features_of(t, c, slot); });
}

std::size_t core_radius(int k) {
  std::size_t p = 1;
  for (int i = 0; i < k; ++i) p *= 3;
  return (p - 1) / 2;
}

// ---------------------------------------------------------------------------
// First-order formulas

namespace fo {
namespace {
FOPtr make(FOKind k, std::string a = {}, std::string b = {}, std::vector<FOPtr> args = {}) {
  auto f = std::make_shared<FOFormula>();
  f->kind = k;
  f->a = std::move(a);
  f->b = std::move(b);
  f->args = std::move(args);
  return f;
}
}  // namespace

FOPtr truth() { return make(FOKind::kTrue); }
FOPtr falsity() { return make(FOKind::kFalse); }
FOPtr edge(std::string a, std::string b) { return make(FOKind::kEdge, std::move(a), std::move(b)); }
FOPtr eq(std::string a, std::string b) { return make(FOKind::kEq, std::move(a), std::move(b)); }
FOPtr negate(FOPtr f) { return make(FOKind::kNot, {}, {}, {std::move(f)}); }
FOPtr conj(FOPtr f, FOPtr g) { return make(FOKind::kAnd, {}, {}, {std::move(f), std::move(g)}); }
FOPtr disj(FOPtr f, FOPtr g) { return make(FOKind::kOr, {}, {}, {std::move(f), std::move(g)}); }
FOPtr exists(std::string v, FOPtr f) { return make(FOKind::kExists, std::move(v), {}, {std::move(f)}); }
FOPtr forall(std::string v, FOPtr f) { return make(FOKind::kForall, std::move(v), {}, {std::move(f)}); }

FOPtr triangle() {
  return exists("u", exists("v", exists("w", conj(conj(edge("u", "v"), edge("v", "w")), edge("w", "u")))));
}
}  // namespace fo

std::string to_string(const FOPtr& f) {
  switch (f->kind) {
    case FOKind::kTrue: return "true";
    case FOKind::kFalse: return "false";
    case FOKind::kEdge: return "E(" + f->a + "," + f->b + ")";
    case FOKind::kEq: return f->a + "=" + f->b;
    case FOKind::kNot: return "!" + to_string(f->args[0]);
    case FOKind::kAnd: return "(" + to_string(f->args[0]) + " & " + to_string(f->args[1]) + ")";
    case FOKind::kOr: return "(" + to_string(f->args[0]) + " | " + to_string(f->args[1]) + ")";
    case FOKind::kExists: return "exists " + f->a + ". " + to_string(f->args[0]);
    case FOKind::kForall: return "forall " + f->a + ". " + to_string(f->args[0]);
  }
  return {};
}

ExprPtr compile_fo_expr(const FOPtr& phi) {
  using build::apply;
  switch (phi->kind) {
    case FOKind::kTrue: return build::constant(1.0);
    case FOKind::kFalse: return build::constant(0.0);
    case FOKind::kEdge: return build::edge(phi->a, phi->b);
    case FOKind::kEq: return build::eq(phi->a, phi->b);
    case FOKind::kNot: return apply(FunctionId::kNot, {compile_fo_expr(phi->args[0])});
    case FOKind::kAnd:
      return apply(FunctionId::kAnd, {compile_fo_expr(phi->args[0]), compile_fo_expr(phi->args[1])});
    case FOKind::kOr:
      return apply(FunctionId::kOr, {compile_fo_expr(phi->args[0]), compile_fo_expr(phi->args[1])});
    case FOKind::kExists: return build::sup(phi->a, compile_fo_expr(phi->args[0]));
    case FOKind::kForall:
      return apply(FunctionId::kNot,
                   {build::sup(phi->a, apply(FunctionId::kNot, {compile_fo_expr(phi->args[0])}))});
  }
  return nullptr;
}

Term compile_fo(const FOPtr& phi, std::optional<std::vector<std::string>> free_vars) {
  return make_term(compile_fo_expr(phi), std::move(free_vars));
}

}  // namespace agglogic
