#include "advscen/autodiff.hpp"

#include <cmath>

#include "advscen/errors.hpp"

namespace advscen::ad {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, {}, {}, false});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back({std::move(value), {}, {}, {}, true});
  return {this, nodes_.size() - 1};
}

Var Tape::push(Matrix value, std::vector<std::size_t> parents, Backward backward) {
  bool req = false;
  for (std::size_t p : parents) req = req || nodes_[p].requires_grad;
  nodes_.push_back({std::move(value), {}, std::move(parents), req ? std::move(backward) : nullptr,
                    req});
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw StructuralError("loss belongs to a different tape");
  if (nodes_[loss.id].value.size() != 1) throw StructuralError("backward needs a 1x1 loss");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  accumulate(loss.id, Matrix::Ones(1, 1));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
}

const Matrix& Tape::grad(Var v) const { return nodes_[v.id].grad; }

namespace {

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw StructuralError(std::string(op) + ": shape mismatch");
  }
}

// Unary element-wise op with derivative expressed from input and output.
template <typename F, typename D>
Var unary(Var x, F f, D dfdx) {
  Tape& t = *x.tape;
  Matrix out = x.value().unaryExpr(f);
  const std::size_t xi = x.id;
  return t.push(std::move(out), {xi}, [xi, dfdx](Tape& tp, std::size_t self) {
    const Matrix& in = tp.value(xi);
    const Matrix& y = tp.value(self);
    Matrix d(in.rows(), in.cols());
    for (Eigen::Index k = 0; k < in.size(); ++k) d(k) = dfdx(in(k), y(k));
    tp.accumulate(xi, tp.upstream(self).cwiseProduct(d));
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw StructuralError("matmul: inner dimensions differ");
  Tape& t = *a.tape;
  const std::size_t ai = a.id, bi = b.id;
  return t.push(a.value() * b.value(), {ai, bi}, [ai, bi](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.needs_grad(ai)) tp.accumulate(ai, g * tp.value(bi).transpose());
    if (tp.needs_grad(bi)) tp.accumulate(bi, tp.value(ai).transpose() * g);
  });
}

Var add_bias(Var x, Var b) {
  if (b.cols() != 1 || b.rows() != x.rows()) throw StructuralError("add_bias: bias shape");
  Tape& t = *x.tape;
  Matrix out = x.value().colwise() + b.value().col(0);
  const std::size_t xi = x.id, bi = b.id;
  return t.push(std::move(out), {xi, bi}, [xi, bi](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    tp.accumulate(xi, g);
    if (tp.needs_grad(bi)) tp.accumulate(bi, g.rowwise().sum());
  });
}

Var affine(Var w, Var x, Var b) { return add_bias(matmul(w, x), b); }

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->push(a.value() + b.value(), {ai, bi}, [ai, bi](Tape& tp, std::size_t self) {
    tp.accumulate(ai, tp.upstream(self));
    tp.accumulate(bi, tp.upstream(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->push(a.value() - b.value(), {ai, bi}, [ai, bi](Tape& tp, std::size_t self) {
    tp.accumulate(ai, tp.upstream(self));
    tp.accumulate(bi, -tp.upstream(self));
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->push(a.value().cwiseProduct(b.value()), {ai, bi},
                      [ai, bi](Tape& tp, std::size_t self) {
                        const Matrix& g = tp.upstream(self);
                        if (tp.needs_grad(ai)) tp.accumulate(ai, g.cwiseProduct(tp.value(bi)));
                        if (tp.needs_grad(bi)) tp.accumulate(bi, g.cwiseProduct(tp.value(ai)));
                      });
}

Var min(Var a, Var b) {
  require_same_shape(a, b, "min");
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->push(a.value().cwiseMin(b.value()), {ai, bi},
                      [ai, bi](Tape& tp, std::size_t self) {
                        const Matrix& g = tp.upstream(self);
                        // Ties route the gradient to the first argument.
                        const auto pick_a =
                            (tp.value(ai).array() <= tp.value(bi).array()).cast<double>();
                        tp.accumulate(ai, (g.array() * pick_a).matrix());
                        tp.accumulate(bi, (g.array() * (1.0 - pick_a)).matrix());
                      });
}

Var scale(Var x, double c) {
  const std::size_t xi = x.id;
  return x.tape->push(c * x.value(), {xi}, [xi, c](Tape& tp, std::size_t self) {
    tp.accumulate(xi, c * tp.upstream(self));
  });
}

Var add_scalar(Var x, double c) {
  const std::size_t xi = x.id;
  return x.tape->push((x.value().array() + c).matrix(), {xi},
                      [xi](Tape& tp, std::size_t self) { tp.accumulate(xi, tp.upstream(self)); });
}

Var scale_by(Var x, Var s) {
  if (s.value().size() != 1) throw StructuralError("scale_by: factor must be 1x1");
  const std::size_t xi = x.id, si = s.id;
  return x.tape->push(s.scalar() * x.value(), {xi, si}, [xi, si](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.needs_grad(xi)) tp.accumulate(xi, tp.value(si)(0, 0) * g);
    if (tp.needs_grad(si)) {
      tp.accumulate(si, Matrix::Constant(1, 1, g.cwiseProduct(tp.value(xi)).sum()));
    }
  });
}

Var neg(Var x) { return scale(x, -1.0); }

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var softplus(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Var square(Var x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var clamp(Var x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](double v, double) { return (v < lo || v > hi) ? 0.0 : 1.0; });
}

Var sum(Var x) {
  const std::size_t xi = x.id;
  return x.tape->push(Matrix::Constant(1, 1, x.value().sum()), {xi},
                      [xi](Tape& tp, std::size_t self) {
                        const Matrix& in = tp.value(xi);
                        tp.accumulate(xi, Matrix::Constant(in.rows(), in.cols(),
                                                           tp.upstream(self)(0, 0)));
                      });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw StructuralError("mean of an empty matrix");
  return scale(sum(x), 1.0 / n);
}

Var col_sum(Var x) {
  const std::size_t xi = x.id;
  return x.tape->push(x.value().colwise().sum(), {xi}, [xi](Tape& tp, std::size_t self) {
    const Matrix& in = tp.value(xi);
    tp.accumulate(xi, tp.upstream(self).replicate(in.rows(), 1));
  });
}

Var logsumexp(Var x) {
  if (x.value().size() == 0) throw StructuralError("logsumexp of an empty matrix");
  const double m = x.value().maxCoeff();
  const double lse = m + std::log((x.value().array() - m).exp().sum());
  const std::size_t xi = x.id;
  return x.tape->push(Matrix::Constant(1, 1, lse), {xi}, [xi](Tape& tp, std::size_t self) {
    const double l = tp.value(self)(0, 0);
    Matrix softmax = (tp.value(xi).array() - l).exp().matrix();
    tp.accumulate(xi, tp.upstream(self)(0, 0) * softmax);
  });
}

Var rows(Var x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) throw StructuralError("rows: out of range");
  const std::size_t xi = x.id;
  return x.tape->push(x.value().middleRows(start, count), {xi},
                      [xi, start, count](Tape& tp, std::size_t self) {
                        const Matrix& in = tp.value(xi);
                        Matrix g = Matrix::Zero(in.rows(), in.cols());
                        g.middleRows(start, count) = tp.upstream(self);
                        tp.accumulate(xi, g);
                      });
}

Var vstack(Var top, Var bottom) {
  if (top.cols() != bottom.cols()) throw StructuralError("vstack: column counts differ");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top.value(), bottom.value();
  const std::size_t ti = top.id, bi = bottom.id;
  const Eigen::Index split = top.rows();
  return top.tape->push(std::move(out), {ti, bi}, [ti, bi, split](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.needs_grad(ti)) tp.accumulate(ti, g.topRows(split));
    if (tp.needs_grad(bi)) tp.accumulate(bi, g.bottomRows(g.rows() - split));
  });
}

}  // namespace advscen::ad
