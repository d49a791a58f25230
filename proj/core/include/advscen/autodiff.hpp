#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace advscen::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const { return value()(0, 0); }
};

/// Reverse-mode tape over dense matrices. Every operation appends a node;
/// nodes only reference earlier nodes, so a reverse sweep is a valid
/// topological order.
class Tape {
 public:
  Var constant(Matrix value);
  Var parameter(Matrix value);

  /// Seeds d(loss)/d(loss) = 1 and sweeps backwards. `loss` must be 1x1.
  void backward(Var loss);
  /// Gradient accumulated for `v`; zero-shaped when v does not depend on any parameter.
  const Matrix& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  using Backward = std::function<void(Tape&, std::size_t self)>;
  Var push(Matrix value, std::vector<std::size_t> parents, Backward backward);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }
  void accumulate(std::size_t id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Linear algebra.
Var matmul(Var a, Var b);
/// x (n x B) plus column vector b (n x 1) broadcast across columns.
Var add_bias(Var x, Var b);
Var affine(Var w, Var x, Var b);

// Element-wise, equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var min(Var a, Var b);

// Scalar broadcasts and unary maps.
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
/// x times a 1x1 node s.
Var scale_by(Var x, Var s);
Var neg(Var x);
Var tanh(Var x);
Var relu(Var x);
Var exp(Var x);
Var log(Var x);
Var softplus(Var x);
Var square(Var x);
/// Hard clamp; zero gradient outside [lo, hi].
Var clamp(Var x, double lo, double hi);

// Reductions.
Var sum(Var x);
Var mean(Var x);
/// Column sums: (n x B) -> (1 x B).
Var col_sum(Var x);
/// log(sum(exp(x))) over all entries, with max subtraction.
Var logsumexp(Var x);

// Shape.
Var rows(Var x, Eigen::Index start, Eigen::Index count);
Var vstack(Var top, Var bottom);

}  // namespace advscen::ad
