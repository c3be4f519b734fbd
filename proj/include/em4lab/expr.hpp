#pragma once

// Scalar expression language for chart data.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := primary ('^' unary)?          (right-associative)
//   primary:= number | 'pi' | name | func '(' expr ')' | '(' expr ')'
//
// Functions: sin cos tan atan sinh cosh tanh exp log sqrt abs.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>

namespace em4lab {

enum class Func { kSin, kCos, kTan, kAtan, kSinh, kCosh, kTanh, kExp, kLog, kSqrt, kAbs };

const char* func_name(Func f);

enum class NodeKind { kNumber, kPi, kVariable, kNeg, kAdd, kSub, kMul, kDiv, kPow, kCall };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::kNumber;
  double number = 0.0;
  std::string name;  // variable name
  Func func = Func::kSin;
  NodePtr lhs;  // operand of unary nodes and calls
  NodePtr rhs;
};

/// Immutable expression tree. Copies share structure.
class Expression {
 public:
  Expression();
  explicit Expression(NodePtr root);

  static Expression number(double v);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  /// Canonical text: parse(to_string()) reproduces the same tree.
  std::string to_string() const;
  std::set<std::string> variables() const;
  bool is_zero_literal() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  NodePtr root_;
};

using Bindings = std::map<std::string, double, std::less<>>;

/// Throws ParseError (kSyntax / kUnknownFunction) with the byte offset.
Expression parse(std::string_view text);

std::string print(const Expression& e);
std::string print(const Node& n);

/// Tree-walking evaluation. Throws kUnboundVariable or kDomain (with the
/// offending subexpression in the message).
double eval(const Expression& e, const Bindings& b);

bool is_builtin_name(std::string_view name);

}  // namespace em4lab
