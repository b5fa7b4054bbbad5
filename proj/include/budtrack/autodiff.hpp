#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace budtrack::ad {

// Scalar reverse-mode tape. Values are computed eagerly on node creation;
// backward() fills gradients for every node reachable from the root.
class Tape {
 public:
  using Var = std::int32_t;

  Var leaf(double v) { return push(Op::Leaf, -1, -1, v); }
  Var constant(double v) { return push(Op::Const, -1, -1, v); }

  Var add(Var a, Var b) { return push(Op::Add, a, b, val(a) + val(b)); }
  Var sub(Var a, Var b) { return push(Op::Sub, a, b, val(a) - val(b)); }
  Var mul(Var a, Var b) { return push(Op::Mul, a, b, val(a) * val(b)); }
  Var div(Var a, Var b) { return push(Op::Div, a, b, val(a) / val(b)); }
  Var neg(Var a) { return push(Op::Neg, a, -1, -val(a)); }
  Var exp(Var a);
  Var log(Var a);
  Var tanh(Var a);

  Var add_const(Var a, double c) { return push(Op::AddC, a, -1, val(a) + c); }
  Var mul_const(Var a, double c) { return push(Op::MulC, a, -1, val(a) * c, c); }

  Var sigmoid(Var a);
  // max(lo, min(hi, a)) with zero gradient outside the bounds
  Var clamp(Var a, double lo, double hi);
  // numerically stable log-sum-exp of a set of vars
  Var logsumexp(std::span<const Var> xs);
  Var sum(std::span<const Var> xs);
  Var dot(std::span<const Var> a, std::span<const Var> b);

  double val(Var v) const { return nodes_[static_cast<std::size_t>(v)].val; }
  double grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].grad; }

  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Op : std::uint8_t {
    Leaf, Const, Add, Sub, Mul, Div, Neg, Exp, Log, Tanh, AddC, MulC
  };
  struct Node {
    Op op;
    Var a, b;
    double val;
    double aux;  // cached derivative helper / constant factor
    double grad;
  };

  Var push(Op op, Var a, Var b, double v, double aux = 0.0) {
    nodes_.push_back(Node{op, a, b, v, aux, 0.0});
    return static_cast<Var>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace budtrack::ad
