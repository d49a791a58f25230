#include "advscen/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "advscen/errors.hpp"

namespace advscen::nn {

namespace {

constexpr char kMlpMagic[8] = {'A', 'D', 'V', 'S', 'M', 'L', 'P', '\0'};
constexpr char kOptMagic[8] = {'A', 'D', 'V', 'S', 'O', 'P', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Matrix activate(Matrix z, Activation act) {
  switch (act) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::linear: return z;
  }
  return z;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ParseError("truncated checkpoint", 0);
  }
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod(out, m(r, c));
  }
}

Matrix read_matrix(std::istream& in) {
  const auto rows = read_pod<std::uint64_t>(in);
  const auto cols = read_pod<std::uint64_t>(in);
  if (rows > (1u << 20) || cols > (1u << 20)) throw ParseError("implausible tensor shape", 0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(in);
  }
  return m;
}

void expect_magic(std::istream& in, const char (&magic)[8]) {
  char buf[8];
  if (!in.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) {
    throw ParseError("bad checkpoint magic", 0);
  }
  if (read_pod<std::uint32_t>(in) != kFormatVersion) {
    throw ParseError("unsupported checkpoint version", 0);
  }
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> sizes, Activation hidden)
    : sizes_(std::move(sizes)), hidden_(hidden) {
  if (sizes_.size() < 2) throw StructuralError("an MLP needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    params_.push_back(Matrix::Zero(sizes_[i + 1], sizes_[i]));
    params_.push_back(Matrix::Zero(sizes_[i + 1], 1));
  }
}

Mlp Mlp::random(std::vector<std::size_t> sizes, Activation hidden, Rng& rng) {
  Mlp net(std::move(sizes), hidden);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Matrix& w = net.weight(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = uniform(rng, -limit, limit);
  }
  return net;
}

Matrix Mlp::forward(const Matrix& input) const {
  if (static_cast<std::size_t>(input.rows()) != input_dim()) {
    throw StructuralError("network expects input dimension " + std::to_string(input_dim()) +
                          ", got " + std::to_string(input.rows()));
  }
  Matrix h = input;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Matrix z = (weight(l) * h).colwise() + bias(l).col(0);
    h = activate(std::move(z), l + 1 == layer_count() ? Activation::linear : hidden_);
  }
  return h;
}

Vector Mlp::forward(const Vector& input) const {
  return forward(Matrix(input)).col(0);
}

Mlp::Binding Mlp::bind(ad::Tape& tape, bool trainable) const {
  Binding b;
  b.params.reserve(params_.size());
  for (const Matrix& p : params_) {
    b.params.push_back(trainable ? tape.parameter(p) : tape.constant(p));
  }
  return b;
}

std::vector<Matrix> Mlp::Binding::gradients() const {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const ad::Var& p : params) {
    const Matrix& g = p.tape->grad(p);
    out.push_back(g.size() == 0 ? Matrix::Zero(p.rows(), p.cols()) : g);
  }
  return out;
}

ad::Var Mlp::forward(const Binding& binding, ad::Var input) const {
  if (static_cast<std::size_t>(input.rows()) != input_dim()) {
    throw StructuralError("network expects input dimension " + std::to_string(input_dim()) +
                          ", got " + std::to_string(input.rows()));
  }
  ad::Var h = input;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    h = ad::affine(binding.params[2 * l], h, binding.params[2 * l + 1]);
    if (l + 1 == layer_count()) break;
    h = hidden_ == Activation::tanh ? ad::tanh(h) : hidden_ == Activation::relu ? ad::relu(h) : h;
  }
  return h;
}

bool Mlp::operator==(const Mlp& other) const {
  if (sizes_ != other.sizes_ || hidden_ != other.hidden_) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i] != other.params_[i]) return false;
  }
  return true;
}

GaussianHead split_head(const Vector& out) {
  if (out.size() % 2 != 0) throw StructuralError("policy output must hold [mu; log sigma]");
  const Eigen::Index d = out.size() / 2;
  return {out.head(d), out.tail(d).cwiseMax(kLogSigmaMin).cwiseMin(kLogSigmaMax)};
}

namespace {

void check_bounds(const GaussianHead& head, const Bounds& b) {
  if (head.mu.size() != head.log_sigma.size() || b.lo.size() != head.mu.size() ||
      b.hi.size() != head.mu.size()) {
    throw StructuralError("policy head and action bounds disagree in dimension");
  }
}

// log(1 - tanh(x)^2), stable for large |x|.
double log_one_minus_tanh_sq(double x) {
  const double ax = std::abs(x);
  return 2.0 * (std::numbers::ln2 - ax - std::log1p(std::exp(-2.0 * ax)));
}

double log_half_range(const Bounds& b) {
  return ((b.hi - b.lo) * 0.5).array().log().sum();
}

}  // namespace

SquashedSample squash_with_noise(const GaussianHead& head, const Bounds& bounds,
                                 const Vector& noise) {
  check_bounds(head, bounds);
  const Vector sigma = head.log_sigma.array().exp();
  SquashedSample s;
  s.action.resize(head.mu.size());
  double lp = 0.0;
  for (Eigen::Index i = 0; i < head.mu.size(); ++i) {
    const double xi = head.mu(i) + sigma(i) * noise(i);
    const double zeta = std::tanh(xi);
    s.action(i) = bounds.lo(i) + 0.5 * (zeta + 1.0) * (bounds.hi(i) - bounds.lo(i));
    lp += -0.5 * noise(i) * noise(i) - head.log_sigma(i) - kHalfLog2Pi;
    lp -= log_one_minus_tanh_sq(xi);
  }
  s.log_prob = lp - log_half_range(bounds);
  return s;
}

SquashedSample sample_squashed(const GaussianHead& head, const Bounds& bounds, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector noise(head.mu.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
  return squash_with_noise(head, bounds, noise);
}

Vector squashed_mean(const GaussianHead& head, const Bounds& bounds) {
  check_bounds(head, bounds);
  return squash_with_noise(head, bounds, Vector::Zero(head.mu.size())).action;
}

double squashed_log_prob(const GaussianHead& head, const Bounds& bounds, const Vector& action) {
  check_bounds(head, bounds);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    const double zeta = 2.0 * (action(i) - bounds.lo(i)) / (bounds.hi(i) - bounds.lo(i)) - 1.0;
    const double xi = std::atanh(zeta);
    const double z = (xi - head.mu(i)) / std::exp(head.log_sigma(i));
    lp += -0.5 * z * z - head.log_sigma(i) - kHalfLog2Pi - log_one_minus_tanh_sq(xi);
  }
  return lp - log_half_range(bounds);
}

TapedSample taped_squashed_sample(ad::Var policy_out, const Matrix& noise, const Bounds& bounds) {
  const Eigen::Index d = noise.rows();
  if (policy_out.rows() != 2 * d || policy_out.cols() != noise.cols() || bounds.lo.size() != d) {
    throw StructuralError("taped_squashed_sample: shape mismatch");
  }
  ad::Tape& t = *policy_out.tape;
  ad::Var mu = ad::rows(policy_out, 0, d);
  ad::Var log_sigma = ad::clamp(ad::rows(policy_out, d, d), kLogSigmaMin, kLogSigmaMax);
  ad::Var eps = t.constant(noise);
  ad::Var xi = ad::add(mu, ad::mul(ad::exp(log_sigma), eps));
  ad::Var zeta = ad::tanh(xi);

  // log(1 - tanh(xi)^2) = 2 (ln 2 - xi - softplus(-2 xi))
  ad::Var log_jac = ad::scale(
      ad::add_scalar(ad::neg(ad::add(xi, ad::softplus(ad::scale(xi, -2.0)))), std::numbers::ln2),
      2.0);
  const Matrix gauss_const =
      (-0.5 * noise.array().square() - kHalfLog2Pi).matrix().colwise().sum();
  ad::Var per_dim = ad::add(ad::neg(log_sigma), ad::neg(log_jac));
  ad::Var lp = ad::add(ad::col_sum(per_dim), t.constant(gauss_const));
  lp = ad::add_scalar(lp, -log_half_range(bounds));
  return {zeta, lp};
}

OptState OptState::for_params(const std::vector<Matrix>& params, double lr) {
  OptState st;
  st.lr = lr;
  for (const Matrix& p : params) {
    st.m.push_back(Matrix::Zero(p.rows(), p.cols()));
    st.v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return st;
}

void opt_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, OptState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    throw StructuralError("optimiser: parameter/gradient/state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols() ||
        st.m[i].rows() != params[i].rows() || st.m[i].cols() != params[i].cols()) {
      throw StructuralError("optimiser: tensor " + std::to_string(i) + " shape mismatch");
    }
    if (!grads[i].allFinite()) throw TrainingError("non-finite gradient in tensor " + std::to_string(i));
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i].cwiseAbs2();
    params[i].array() -=
        st.lr * (st.m[i].array() / c1) / ((st.v[i].array() / c2).sqrt() + st.eps);
  }
}

void polyak(Mlp& target, const Mlp& online, double tau) {
  if (target.sizes() != online.sizes()) throw StructuralError("polyak: architectures differ");
  if (!(tau > 0.0 && tau <= 1.0)) throw StructuralError("polyak: tau must lie in (0, 1]");
  for (std::size_t i = 0; i < target.params().size(); ++i) {
    target.params()[i] = (1.0 - tau) * target.params()[i] + tau * online.params()[i];
  }
}

void save_mlp(const Mlp& net, std::ostream& out) {
  out.write(kMlpMagic, 8);
  write_pod(out, kFormatVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.sizes().size()));
  for (std::size_t s : net.sizes()) write_pod<std::uint64_t>(out, s);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.hidden_activation()));
  for (const Matrix& p : net.params()) write_matrix(out, p);
}

Mlp load_mlp(std::istream& in) {
  expect_magic(in, kMlpMagic);
  const auto n = read_pod<std::uint32_t>(in);
  if (n < 2 || n > 64) throw ParseError("implausible layer count in checkpoint", 0);
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i < n; ++i) sizes.push_back(read_pod<std::uint64_t>(in));
  const auto act = read_pod<std::uint32_t>(in);
  if (act > 2) throw ParseError("unknown activation in checkpoint", 0);
  Mlp net(sizes, static_cast<Activation>(act));
  for (Matrix& p : net.params()) {
    Matrix m = read_matrix(in);
    if (m.rows() != p.rows() || m.cols() != p.cols()) {
      throw StructuralError("checkpoint tensor shape disagrees with its layer header");
    }
    p = std::move(m);
  }
  return net;
}

Mlp load_mlp(std::istream& in, const std::vector<std::size_t>& expected_sizes) {
  Mlp net = load_mlp(in);
  if (net.sizes() != expected_sizes) {
    throw StructuralError("checkpoint layer sizes do not match the expected architecture");
  }
  return net;
}

void save_opt_state(const OptState& st, std::ostream& out) {
  out.write(kOptMagic, 8);
  write_pod(out, kFormatVersion);
  write_pod<std::int64_t>(out, st.step);
  write_pod(out, st.lr);
  write_pod(out, st.beta1);
  write_pod(out, st.beta2);
  write_pod(out, st.eps);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(st.m.size()));
  for (std::size_t i = 0; i < st.m.size(); ++i) {
    write_matrix(out, st.m[i]);
    write_matrix(out, st.v[i]);
  }
}

OptState load_opt_state(std::istream& in) {
  expect_magic(in, kOptMagic);
  OptState st;
  st.step = read_pod<std::int64_t>(in);
  st.lr = read_pod<double>(in);
  st.beta1 = read_pod<double>(in);
  st.beta2 = read_pod<double>(in);
  st.eps = read_pod<double>(in);
  const auto n = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    st.m.push_back(read_matrix(in));
    st.v.push_back(read_matrix(in));
  }
  return st;
}

}  // namespace advscen::nn
