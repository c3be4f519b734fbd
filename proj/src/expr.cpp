#include "em4lab/expr.hpp"

#include "em4lab/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace em4lab {

namespace {

struct FuncEntry {
  const char* name;
  Func func;
};

constexpr std::array<FuncEntry, 11> kFunctions = {{
    {"sin", Func::kSin},
    {"cos", Func::kCos},
    {"tan", Func::kTan},
    {"atan", Func::kAtan},
    {"sinh", Func::kSinh},
    {"cosh", Func::kCosh},
    {"tanh", Func::kTanh},
    {"exp", Func::kExp},
    {"log", Func::kLog},
    {"sqrt", Func::kSqrt},
    {"abs", Func::kAbs},
}};

NodePtr make_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kNumber;
  n->number = v;
  return n;
}

NodePtr make_unary(NodeKind kind, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    skip_ws();
    if (pos_ >= text_.size()) fail(pos_, "expected expression, found end of input");
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) fail(pos_, std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg, ErrorCode code = ErrorCode::kSyntax) {
    throw ParseError(code, at, msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (true) {
      if (peek('+')) {
        ++pos_;
        lhs = make_binary(NodeKind::kAdd, lhs, parse_term());
      } else if (peek('-')) {
        ++pos_;
        lhs = make_binary(NodeKind::kSub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (true) {
      if (peek('*')) {
        ++pos_;
        lhs = make_binary(NodeKind::kMul, lhs, parse_unary());
      } else if (peek('/')) {
        ++pos_;
        lhs = make_binary(NodeKind::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (peek('-')) {
      ++pos_;
      NodePtr operand = parse_unary();
      // A negated literal is itself a literal, so printed negative numbers read back unchanged.
      if (operand->kind == NodeKind::kNumber) {
        auto n = std::make_shared<Node>(*operand);
        n->number = -n->number;
        return n;
      }
      return make_unary(NodeKind::kNeg, operand);
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (peek('^')) {
      ++pos_;
      return make_binary(NodeKind::kPow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail(pos_, "expected operand, found end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_inner();
      expect_close();
      return inner;
    }
    fail(pos_, std::string("expected operand, found '") + c + "'");
  }

  NodePtr parse_inner() {
    skip_ws();
    if (pos_ >= text_.size()) fail(pos_, "expected expression, found end of input");
    return parse_expr();
  }

  void expect_close() {
    if (!peek(')')) {
      if (pos_ >= text_.size()) fail(pos_, "expected ')', found end of input");
      fail(pos_, std::string("expected ')', found '") + text_[pos_] + "'");
    }
    ++pos_;
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    const std::string_view lit = text_.substr(start, pos_ - start);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), v);
    if (ec != std::errc() || ptr != lit.data() + lit.size() || !std::isfinite(v)) {
      fail(start, "invalid number literal '" + std::string(lit) + "'");
    }
    return make_number(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    if (peek('(')) {
      for (const auto& f : kFunctions) {
        if (name == f.name) {
          ++pos_;
          NodePtr arg = parse_inner();
          expect_close();
          auto n = std::make_shared<Node>();
          n->kind = NodeKind::kCall;
          n->func = f.func;
          n->lhs = std::move(arg);
          return n;
        }
      }
      fail(start, "unknown function '" + name + "'", ErrorCode::kUnknownFunction);
    }
    if (name == "pi") {
      auto n = std::make_shared<Node>();
      n->kind = NodeKind::kPi;
      return n;
    }
    for (const auto& f : kFunctions) {
      if (name == f.name) fail(pos_, "expected '(' after function name '" + name + "'");
    }
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::kVariable;
    n->name = name;
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Printing precedence levels.
enum Level { kLevelSum = 0, kLevelProduct = 1, kLevelUnary = 2, kLevelPrimary = 3 };

Level level_of(const Node& n) {
  switch (n.kind) {
    case NodeKind::kAdd:
    case NodeKind::kSub: return kLevelSum;
    case NodeKind::kMul:
    case NodeKind::kDiv: return kLevelProduct;
    case NodeKind::kNeg:
    case NodeKind::kPow: return kLevelUnary;
    case NodeKind::kNumber: return std::signbit(n.number) ? kLevelUnary : kLevelPrimary;
    default: return kLevelPrimary;
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::kNumber: out += format_number(n.number); return;
    case NodeKind::kPi: out += "pi"; return;
    case NodeKind::kVariable: out += n.name; return;
    case NodeKind::kCall:
      out += func_name(n.func);
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::kNeg:
      out += '-';
      print_child(*n.lhs, level_of(*n.lhs) < kLevelUnary, out);
      return;
    case NodeKind::kPow:
      print_child(*n.lhs, level_of(*n.lhs) < kLevelPrimary, out);
      out += '^';
      print_child(*n.rhs, level_of(*n.rhs) < kLevelUnary, out);
      return;
    case NodeKind::kMul:
    case NodeKind::kDiv:
      print_child(*n.lhs, level_of(*n.lhs) < kLevelProduct, out);
      out += n.kind == NodeKind::kMul ? " * " : " / ";
      print_child(*n.rhs, level_of(*n.rhs) <= kLevelProduct, out);
      return;
    case NodeKind::kAdd:
    case NodeKind::kSub:
      print_child(*n.lhs, false, out);
      out += n.kind == NodeKind::kAdd ? " + " : " - ";
      print_child(*n.rhs, level_of(*n.rhs) <= kLevelSum, out);
      return;
  }
}

bool same_tree(const Node& a, const Node& b) {
  if (&a == &b) return true;
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::kNumber: return a.number == b.number;
    case NodeKind::kPi: return true;
    case NodeKind::kVariable: return a.name == b.name;
    case NodeKind::kCall: return a.func == b.func && same_tree(*a.lhs, *b.lhs);
    case NodeKind::kNeg: return same_tree(*a.lhs, *b.lhs);
    default: return same_tree(*a.lhs, *b.lhs) && same_tree(*a.rhs, *b.rhs);
  }
}

void collect_variables(const Node& n, std::set<std::string>& out) {
  if (n.kind == NodeKind::kVariable) out.insert(n.name);
  if (n.lhs) collect_variables(*n.lhs, out);
  if (n.rhs) collect_variables(*n.rhs, out);
}

[[noreturn]] void domain_error(const Node& n, const std::string& why) {
  throw Error(ErrorCode::kDomain, "domain error in '" + print(n) + "': " + why);
}

double checked(const Node& n, double v) {
  if (!std::isfinite(v)) domain_error(n, "non-finite result");
  return v;
}

double eval_node(const Node& n, const Bindings& b) {
  switch (n.kind) {
    case NodeKind::kNumber: return n.number;
    case NodeKind::kPi: return M_PI;
    case NodeKind::kVariable: {
      const auto it = b.find(n.name);
      if (it == b.end()) throw Error(ErrorCode::kUnboundVariable, "unbound variable '" + n.name + "'");
      return it->second;
    }
    case NodeKind::kNeg: return -eval_node(*n.lhs, b);
    case NodeKind::kAdd: return checked(n, eval_node(*n.lhs, b) + eval_node(*n.rhs, b));
    case NodeKind::kSub: return checked(n, eval_node(*n.lhs, b) - eval_node(*n.rhs, b));
    case NodeKind::kMul: return checked(n, eval_node(*n.lhs, b) * eval_node(*n.rhs, b));
    case NodeKind::kDiv: {
      const double num = eval_node(*n.lhs, b);
      const double den = eval_node(*n.rhs, b);
      if (den == 0.0) domain_error(n, "division by zero");
      return checked(n, num / den);
    }
    case NodeKind::kPow: {
      const double x = eval_node(*n.lhs, b);
      const double y = eval_node(*n.rhs, b);
      if (x < 0.0 && y != std::floor(y)) domain_error(n, "negative base with non-integer exponent");
      if (x == 0.0 && y < 0.0) domain_error(n, "zero raised to a negative power");
      return checked(n, std::pow(x, y));
    }
    case NodeKind::kCall: {
      const double x = eval_node(*n.lhs, b);
      switch (n.func) {
        case Func::kSin: return std::sin(x);
        case Func::kCos: return std::cos(x);
        case Func::kTan: return checked(n, std::tan(x));
        case Func::kAtan: return std::atan(x);
        case Func::kSinh: return checked(n, std::sinh(x));
        case Func::kCosh: return checked(n, std::cosh(x));
        case Func::kTanh: return std::tanh(x);
        case Func::kExp: return checked(n, std::exp(x));
        case Func::kLog:
          if (!(x > 0.0)) domain_error(n, "logarithm of a non-positive value");
          return std::log(x);
        case Func::kSqrt:
          if (x < 0.0) domain_error(n, "square root of a negative value");
          return std::sqrt(x);
        case Func::kAbs: return std::abs(x);
      }
    }
  }
  return 0.0;
}

}  // namespace

const char* func_name(Func f) {
  for (const auto& e : kFunctions)
    if (e.func == f) return e.name;
  return "?";
}

bool is_builtin_name(std::string_view name) {
  if (name == "pi") return true;
  for (const auto& e : kFunctions)
    if (name == e.name) return true;
  return false;
}

Expression::Expression() : root_(make_number(0.0)) {}
Expression::Expression(NodePtr root) : root_(std::move(root)) {}

Expression Expression::number(double v) { return Expression(make_number(v)); }

std::string Expression::to_string() const { return print(*this); }

std::set<std::string> Expression::variables() const {
  std::set<std::string> out;
  collect_variables(*root_, out);
  return out;
}

bool Expression::is_zero_literal() const { return root_->kind == NodeKind::kNumber && root_->number == 0.0; }

bool operator==(const Expression& a, const Expression& b) { return same_tree(*a.root_, *b.root_); }

Expression parse(std::string_view text) { return Expression(Parser(text).parse_all()); }

std::string print(const Node& n) {
  std::string out;
  print_node(n, out);
  return out;
}

std::string print(const Expression& e) { return print(e.root()); }

double eval(const Expression& e, const Bindings& b) { return eval_node(e.root(), b); }

}  // namespace em4lab
