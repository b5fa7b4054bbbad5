#include "budtrack/autodiff.hpp"

#include <cmath>

namespace budtrack::ad {

Var Tape::exp(Var a) {
  const double v = std::exp(val(a));
  return push(Op::Exp, a, -1, v, v);
}

Var Tape::log(Var a) { return push(Op::Log, a, -1, std::log(val(a))); }

Var Tape::tanh(Var a) {
  const double v = std::tanh(val(a));
  return push(Op::Tanh, a, -1, v, 1.0 - v * v);
}

Var Tape::sigmoid(Var a) {
  // 1 / (1 + exp(-a))
  const Var e = exp(neg(a));
  return div(constant(1.0), add_const(e, 1.0));
}

Var Tape::clamp(Var a, double lo, double hi) {
  const double v = val(a);
  if (v < lo) return constant(lo);
  if (v > hi) return constant(hi);
  return a;
}

Var Tape::logsumexp(std::span<const Var> xs) {
  // shift by the argmax element so exponents stay bounded
  std::size_t k = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (val(xs[i]) > val(xs[k])) k = i;
  Var acc = constant(0.0);
  for (const Var x : xs) acc = add(acc, exp(sub(x, xs[k])));
  return add(xs[k], log(acc));
}

Var Tape::sum(std::span<const Var> xs) {
  Var acc = constant(0.0);
  for (const Var x : xs) acc = add(acc, x);
  return acc;
}

Var Tape::dot(std::span<const Var> a, std::span<const Var> b) {
  Var acc = constant(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) acc = add(acc, mul(a[i], b[i]));
  return acc;
}

void Tape::backward(Var root) {
  for (Node& n : nodes_) n.grad = 0.0;
  nodes_[static_cast<std::size_t>(root)].grad = 1.0;
  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    const Node& n = nodes_[idx];
    const double g = n.grad;
    if (g == 0.0) continue;
    auto acc = [&](Var v, double dg) {
      nodes_[static_cast<std::size_t>(v)].grad += dg;
    };
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::Add:
        acc(n.a, g);
        acc(n.b, g);
        break;
      case Op::Sub:
        acc(n.a, g);
        acc(n.b, -g);
        break;
      case Op::Mul:
        acc(n.a, g * nodes_[static_cast<std::size_t>(n.b)].val);
        acc(n.b, g * nodes_[static_cast<std::size_t>(n.a)].val);
        break;
      case Op::Div: {
        const double bv = nodes_[static_cast<std::size_t>(n.b)].val;
        acc(n.a, g / bv);
        acc(n.b, -g * n.val / bv);
        break;
      }
      case Op::Neg:
        acc(n.a, -g);
        break;
      case Op::Exp:
        acc(n.a, g * n.aux);
        break;
      case Op::Log:
        acc(n.a, g / nodes_[static_cast<std::size_t>(n.a)].val);
        break;
      case Op::Tanh:
        acc(n.a, g * n.aux);
        break;
      case Op::AddC:
        acc(n.a, g);
        break;
      case Op::MulC:
        acc(n.a, g * n.aux);
        break;
    }
  }
}

}  // namespace budtrack::ad
