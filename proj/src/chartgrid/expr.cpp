#include "qcurv/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace qc {

namespace {

const std::set<std::string> kFunctions = {"sin", "cos", "exp", "log", "sqrt", "abs"};

bool is_variable_name(const std::string& s) {
  if (s == "eta" || s == "theta" || s == "phi" || s == "pi") return true;
  return s.size() == 2 && s[0] == 'x' && s[1] >= '1' && s[1] <= '6';
}

ExprPtr make(Expr::Op op, std::vector<ExprPtr> args, std::string name = {}, double v = 0.0) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = std::move(args);
  e->name = std::move(name);
  e->value = v;
  return e;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  ExprPtr run() {
    ExprPtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    config_error("ExprSyntax", "at byte " + std::to_string(pos_) + ": " + msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Expr::Op::Add, {lhs, term()});
      else if (accept('-')) lhs = make(Expr::Op::Sub, {lhs, term()});
      else return lhs;
    }
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make(Expr::Op::Mul, {lhs, factor()});
      else if (accept('/')) lhs = make(Expr::Op::Div, {lhs, factor()});
      else return lhs;
    }
  }

  ExprPtr factor() {
    ExprPtr base = unary();
    if (accept('^')) return make(Expr::Op::Pow, {base, factor()});
    return base;
  }

  ExprPtr unary() {
    if (accept('-')) return make(Expr::Op::Neg, {atom()});
    return atom();
  }

  ExprPtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (kFunctions.count(id)) {
        if (!accept('(')) fail("expected '(' after " + id);
        ExprPtr arg = expr();
        if (!accept(')')) fail("expected ')'");
        return make(Expr::Op::Call, {arg}, id);
      }
      if (!is_variable_name(id)) {
        pos_ = start;
        fail("unknown identifier '" + id + "'");
      }
      return make(Expr::Op::Var, {}, id);
    }
    if (accept('(')) {
      ExprPtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  ExprPtr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t k = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, ++k;
      return k;
    };
    std::size_t nd = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) fail("malformed number");
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    return make(Expr::Op::Num, {}, {}, std::strtod(s_.substr(start, pos_ - start).c_str(), nullptr));
  }
};

void print_into(const ExprPtr& e, std::string& out) {
  switch (e->op) {
    case Expr::Op::Num: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", e->value);
      out += buf;
      return;
    }
    case Expr::Op::Var: out += e->name; return;
    case Expr::Op::Neg:
      out += "(-";
      print_into(e->args[0], out);
      out += ")";
      return;
    case Expr::Op::Call:
      out += e->name + "(";
      print_into(e->args[0], out);
      out += ")";
      return;
    default: break;
  }
  const char* sym = e->op == Expr::Op::Add ? "+" : e->op == Expr::Op::Sub ? "-"
                  : e->op == Expr::Op::Mul ? "*" : e->op == Expr::Op::Div ? "/" : "^";
  out += "(";
  print_into(e->args[0], out);
  out += sym;
  print_into(e->args[1], out);
  out += ")";
}

void collect(const ExprPtr& e, std::set<std::string>& vars) {
  if (e->op == Expr::Op::Var && e->name != "pi") vars.insert(e->name);
  for (const auto& a : e->args) collect(a, vars);
}

[[noreturn]] void domain(const std::string& what, Eigen::Index node) {
  config_error("ExprDomain", what + " at node " + std::to_string(node));
}

void check_finite(const Vec& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) domain(std::string("non-finite result of ") + what, i);
}

Vec eval_rec(const ExprPtr& e, std::size_t n, const VarLookup& lookup) {
  const auto N = static_cast<Eigen::Index>(n);
  switch (e->op) {
    case Expr::Op::Num: return Vec::Constant(N, e->value);
    case Expr::Op::Var: {
      if (e->name == "pi") return Vec::Constant(N, std::numbers::pi);
      const Vec* v = lookup(e->name);
      if (!v) config_error("ExprUnknownIdentifier", "identifier '" + e->name + "' is not defined on this grid");
      return *v;
    }
    case Expr::Op::Neg: return -eval_rec(e->args[0], n, lookup);
    case Expr::Op::Call: {
      Vec a = eval_rec(e->args[0], n, lookup);
      const std::string& f = e->name;
      if (f == "sin") return a.array().sin().matrix();
      if (f == "cos") return a.array().cos().matrix();
      if (f == "abs") return a.cwiseAbs();
      if (f == "exp") {
        Vec r = a.array().exp().matrix();
        check_finite(r, "exp");
        return r;
      }
      if (f == "log") {
        for (Eigen::Index i = 0; i < N; ++i)
          if (!(a[i] > 0.0)) domain("log of non-positive value", i);
        return a.array().log().matrix();
      }
      if (f == "sqrt") {
        for (Eigen::Index i = 0; i < N; ++i)
          if (!(a[i] >= 0.0)) domain("sqrt of negative value", i);
        return a.array().sqrt().matrix();
      }
      config_error("ExprUnknownIdentifier", "function '" + f + "'");
    }
    default: break;
  }
  Vec a = eval_rec(e->args[0], n, lookup);
  Vec b = eval_rec(e->args[1], n, lookup);
  switch (e->op) {
    case Expr::Op::Add: return a + b;
    case Expr::Op::Sub: return a - b;
    case Expr::Op::Mul: return a.cwiseProduct(b);
    case Expr::Op::Div: {
      for (Eigen::Index i = 0; i < N; ++i)
        if (b[i] == 0.0) domain("division by zero", i);
      Vec r = a.cwiseQuotient(b);
      check_finite(r, "division");
      return r;
    }
    case Expr::Op::Pow: {
      Vec r(N);
      for (Eigen::Index i = 0; i < N; ++i) {
        if (a[i] < 0.0 && b[i] != std::round(b[i])) domain("negative base with non-integer exponent", i);
        if (a[i] == 0.0 && b[i] < 0.0) domain("zero raised to negative power", i);
        r[i] = std::pow(a[i], b[i]);
      }
      check_finite(r, "power");
      return r;
    }
    default: break;
  }
  config_error("ExprSyntax", "corrupt expression tree");
}

}  // namespace

ExprPtr parse_expr(const std::string& text) { return Parser(text).run(); }

std::string print_expr(const ExprPtr& e) {
  std::string out;
  print_into(e, out);
  return out;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a->op != b->op || a->name != b->name || a->args.size() != b->args.size()) return false;
  if (a->op == Expr::Op::Num && !(a->value == b->value)) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!expr_equal(a->args[i], b->args[i])) return false;
  return true;
}

std::vector<std::string> expr_variables(const ExprPtr& e) {
  std::set<std::string> s;
  collect(e, s);
  return {s.begin(), s.end()};
}

Vec eval_expr(const ExprPtr& e, std::size_t n, const VarLookup& lookup) { return eval_rec(e, n, lookup); }

}  // namespace qc
