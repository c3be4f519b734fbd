#include "em4lab/program.hpp"

#include <cstring>
#include <map>
#include <tuple>

namespace em4lab {

namespace {

using Key = std::tuple<int, int, int, int, std::uint64_t, int>;

std::uint64_t bits_of(double v) {
  std::uint64_t u = 0;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

class Compiler {
 public:
  Compiler(const std::vector<std::string>& inputs, const Bindings& constants)
      : inputs_(inputs), constants_(constants) {}

  int compile(const Node& n) {
    switch (n.kind) {
      case NodeKind::kNumber: return constant(n.number, &n);
      case NodeKind::kPi: return constant(M_PI, &n);
      case NodeKind::kVariable: {
        for (std::size_t i = 0; i < inputs_.size(); ++i) {
          if (inputs_[i] == n.name) {
            Program::Instr in;
            in.op = Program::Op::kInput;
            in.k = static_cast<int>(i);
            in.source = &n;
            return emit(in);
          }
        }
        const auto it = constants_.find(n.name);
        if (it == constants_.end())
          throw Error(ErrorCode::kUnboundVariable, "unbound variable '" + n.name + "'");
        return constant(it->second, &n);
      }
      case NodeKind::kNeg: return unary(Program::Op::kNeg, compile(*n.lhs), &n);
      case NodeKind::kAdd: return binary(Program::Op::kAdd, n);
      case NodeKind::kSub: return binary(Program::Op::kSub, n);
      case NodeKind::kMul: return binary(Program::Op::kMul, n);
      case NodeKind::kDiv: return binary(Program::Op::kDiv, n);
      case NodeKind::kPow: {
        const int a = compile(*n.lhs);
        const int b = compile(*n.rhs);
        const Program::Instr& eb = code_[b];
        if (eb.op == Program::Op::kConst && eb.value == std::floor(eb.value) && std::abs(eb.value) <= 64) {
          Program::Instr in;
          in.op = Program::Op::kPowInt;
          in.a = a;
          in.k = static_cast<int>(eb.value);
          in.source = &n;
          return emit(in);
        }
        Program::Instr in;
        in.op = Program::Op::kPow;
        in.a = a;
        in.b = b;
        in.source = &n;
        return emit(in);
      }
      case NodeKind::kCall: {
        Program::Instr in;
        in.op = Program::Op::kCall;
        in.a = compile(*n.lhs);
        in.func = n.func;
        in.source = &n;
        return emit(in);
      }
    }
    return 0;
  }

  std::vector<Program::Instr> take() { return std::move(code_); }

 private:
  int constant(double v, const Node* src) {
    Program::Instr in;
    in.op = Program::Op::kConst;
    in.value = v;
    in.source = src;
    return emit(in);
  }

  int unary(Program::Op op, int a, const Node* src) {
    Program::Instr in;
    in.op = op;
    in.a = a;
    in.source = src;
    return emit(in);
  }

  int binary(Program::Op op, const Node& n) {
    Program::Instr in;
    in.op = op;
    in.a = compile(*n.lhs);
    in.b = compile(*n.rhs);
    in.source = &n;
    return emit(in);
  }

  int emit(Program::Instr in) {
    if (in.op != Program::Op::kConst && in.op != Program::Op::kInput) {
      const bool a_const = code_[in.a].op == Program::Op::kConst;
      const bool b_const = in.op == Program::Op::kNeg || in.op == Program::Op::kPowInt ||
                           in.op == Program::Op::kCall || code_[in.b].op == Program::Op::kConst;
      if (a_const && b_const) {
        // Fold by running the single instruction on doubles; domain errors
        // surface here exactly as they would at evaluation time.
        std::vector<Program::Instr> tiny;
        Program::Instr ca = code_[in.a];
        tiny.push_back(ca);
        Program::Instr cb = in.op == Program::Op::kNeg || in.op == Program::Op::kPowInt ||
                                    in.op == Program::Op::kCall
                                ? ca
                                : code_[in.b];
        tiny.push_back(cb);
        Program::Instr op = in;
        op.a = 0;
        op.b = 1;
        tiny.push_back(op);
        const double v = fold(tiny);
        Program::Instr c;
        c.op = Program::Op::kConst;
        c.value = v;
        c.source = in.source;
        in = c;
      }
    }
    const Key key{static_cast<int>(in.op), in.a, in.b, in.k, bits_of(in.value), static_cast<int>(in.func)};
    const auto it = seen_.find(key);
    if (it != seen_.end()) return it->second;
    code_.push_back(in);
    const int slot = static_cast<int>(code_.size()) - 1;
    seen_.emplace(key, slot);
    return slot;
  }

  static double fold(const std::vector<Program::Instr>& tiny);

  const std::vector<std::string>& inputs_;
  const Bindings& constants_;
  std::vector<Program::Instr> code_;
  std::map<Key, int> seen_;
};

double Compiler::fold(const std::vector<Program::Instr>& tiny) {
  std::vector<double> scratch;
  Program::execute<double>(tiny, nullptr, scratch);
  return scratch.back();
}

}  // namespace

Program::Program(const std::vector<Expression>& outputs, const std::vector<std::string>& inputs,
                 const Bindings& constants)
    : num_inputs_(inputs.size()) {
  Compiler c(inputs, constants);
  for (const Expression& e : outputs) {
    roots_.push_back(e.root_ptr());
    outputs_.push_back(c.compile(e.root()));
  }
  code_ = c.take();
}

std::vector<double> Program::operator()(const std::vector<double>& inputs) const {
  if (inputs.size() != num_inputs_)
    throw Error(ErrorCode::kDimensionMismatch, "program expects " + std::to_string(num_inputs_) + " inputs");
  std::vector<double> out(outputs_.size());
  std::vector<double> scratch;
  run(inputs.data(), out.data(), scratch);
  return out;
}

void Program::domain_error(const Instr& in, const char* why) {
  const std::string where = in.source ? print(*in.source) : std::string("?");
  throw Error(ErrorCode::kDomain, "domain error in '" + where + "': " + why);
}

}  // namespace em4lab
