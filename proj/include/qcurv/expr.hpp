// Field-expression mini-language: recursive-descent parser, printer, evaluator.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qcurv/common.hpp"

namespace qc {

struct Expr {
  enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  Op op = Op::Num;
  double value = 0.0;
  std::string name;  // variable or function name
  std::vector<std::shared_ptr<const Expr>> args;
};
using ExprPtr = std::shared_ptr<const Expr>;

// Throws Error{Config,"ExprSyntax"} with the byte offset in the message.
ExprPtr parse_expr(const std::string& text);
std::string print_expr(const ExprPtr& e);
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// Identifiers referenced by e (variables only, sorted, unique).
std::vector<std::string> expr_variables(const ExprPtr& e);

// Evaluates at n points; lookup returns the variable's values or nullptr if
// the identifier is unknown. Domain violations throw Error{Config,"ExprDomain"}
// naming the first offending node.
using VarLookup = std::function<const Vec*(const std::string&)>;
Vec eval_expr(const ExprPtr& e, std::size_t n, const VarLookup& lookup);

}  // namespace qc
