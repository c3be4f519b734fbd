#pragma once

// Expressions compiled to a flat instruction tape. Common subexpressions are
// shared across all outputs, parameters are folded in as constants, and the
// tape runs on doubles or on jets.

#include "em4lab/error.hpp"
#include "em4lab/expr.hpp"
#include "em4lab/jet.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace em4lab {

class Program {
 public:
  Program() = default;
  /// Every variable must be an input or a constant; throws kUnboundVariable.
  Program(const std::vector<Expression>& outputs, const std::vector<std::string>& inputs,
          const Bindings& constants);

  std::size_t num_inputs() const { return num_inputs_; }
  std::size_t num_outputs() const { return outputs_.size(); }
  std::size_t size() const { return code_.size(); }

  template <class T>
  void run(const T* inputs, T* outputs, std::vector<T>& scratch) const;

  std::vector<double> operator()(const std::vector<double>& inputs) const;

  enum class Op { kConst, kInput, kNeg, kAdd, kSub, kMul, kDiv, kPowInt, kPow, kCall };

  struct Instr {
    Op op = Op::kConst;
    int a = 0;
    int b = 0;
    int k = 0;  // input index or integer exponent
    double value = 0.0;
    Func func = Func::kSin;
    const Node* source = nullptr;
  };

  /// Runs a raw tape, leaving every slot in scratch.
  template <class T>
  static void execute(const std::vector<Instr>& code, const T* inputs, std::vector<T>& scratch);

 private:
  [[noreturn]] static void domain_error(const Instr& in, const char* why);

  std::vector<Instr> code_;
  std::vector<int> outputs_;
  std::size_t num_inputs_ = 0;
  std::vector<NodePtr> roots_;
};

namespace detail {

inline double apply_func(Func f, double x) {
  switch (f) {
    case Func::kSin: return std::sin(x);
    case Func::kCos: return std::cos(x);
    case Func::kTan: return std::tan(x);
    case Func::kAtan: return std::atan(x);
    case Func::kSinh: return std::sinh(x);
    case Func::kCosh: return std::cosh(x);
    case Func::kTanh: return std::tanh(x);
    case Func::kExp: return std::exp(x);
    case Func::kLog: return std::log(x);
    case Func::kSqrt: return std::sqrt(x);
    case Func::kAbs: return std::abs(x);
  }
  return 0.0;
}

template <int N>
Jet<N> apply_func(Func f, const Jet<N>& x) {
  switch (f) {
    case Func::kSin: return sin(x);
    case Func::kCos: return cos(x);
    case Func::kTan: return tan(x);
    case Func::kAtan: return atan(x);
    case Func::kSinh: return sinh(x);
    case Func::kCosh: return cosh(x);
    case Func::kTanh: return tanh(x);
    case Func::kExp: return exp(x);
    case Func::kLog: return log(x);
    case Func::kSqrt: return sqrt(x);
    case Func::kAbs: return abs(x);
  }
  return x;
}

template <class T>
T make_constant(double v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return T::constant(v);
  }
}

inline double general_pow(double x, double y) { return std::pow(x, y); }
template <int N>
Jet<N> general_pow(const Jet<N>& x, const Jet<N>& y) {
  return exp(y * log(x));
}

}  // namespace detail

template <class T>
void Program::run(const T* inputs, T* outputs, std::vector<T>& scratch) const {
  execute(code_, inputs, scratch);
  for (std::size_t o = 0; o < outputs_.size(); ++o) outputs[o] = scratch[outputs_[o]];
}

template <class T>
void Program::execute(const std::vector<Instr>& code, const T* inputs, std::vector<T>& scratch) {
  scratch.resize(code.size());
  T* s = scratch.data();
  for (std::size_t i = 0; i < code.size(); ++i) {
    const Instr& in = code[i];
    switch (in.op) {
      case Op::kConst: s[i] = detail::make_constant<T>(in.value); break;
      case Op::kInput: s[i] = inputs[in.k]; break;
      case Op::kNeg: s[i] = -s[in.a]; break;
      case Op::kAdd: s[i] = s[in.a] + s[in.b]; break;
      case Op::kSub: s[i] = s[in.a] - s[in.b]; break;
      case Op::kMul: s[i] = s[in.a] * s[in.b]; break;
      case Op::kDiv:
        if (value_of(s[in.b]) == 0.0) domain_error(in, "division by zero");
        s[i] = s[in.a] / s[in.b];
        break;
      case Op::kPowInt:
        if (in.k < 0 && value_of(s[in.a]) == 0.0) domain_error(in, "zero raised to a negative power");
        s[i] = powi(s[in.a], in.k);
        break;
      case Op::kPow: {
        const double x = value_of(s[in.a]);
        const double y = value_of(s[in.b]);
        if (x < 0.0) {
          if (y != std::floor(y)) domain_error(in, "negative base with non-integer exponent");
          if constexpr (!std::is_same_v<T, double>) {
            domain_error(in, "negative base under a variable exponent");
          }
        }
        if (x == 0.0 && y < 0.0) domain_error(in, "zero raised to a negative power");
        s[i] = detail::general_pow(s[in.a], s[in.b]);
        break;
      }
      case Op::kCall: {
        const double x = value_of(s[in.a]);
        if (in.func == Func::kLog && !(x > 0.0)) domain_error(in, "logarithm of a non-positive value");
        if (in.func == Func::kSqrt && x < 0.0) domain_error(in, "square root of a negative value");
        s[i] = detail::apply_func(in.func, s[in.a]);
        break;
      }
    }
    if (!is_finite(s[i])) domain_error(in, "non-finite result");
  }
}

}  // namespace em4lab
