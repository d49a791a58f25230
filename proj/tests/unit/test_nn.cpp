#include <cmath>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "advscen/autodiff.hpp"
#include "advscen/errors.hpp"
#include "advscen/nn.hpp"
#include "oracles.hpp"

namespace advscen {
namespace {

using ad::Matrix;
using ad::Tape;
using ad::Var;

Matrix rand_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1, double hi = 1) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, lo, hi);
  return m;
}

// Builds loss = sum(w ⊙ f(x)) so every output entry contributes.
void check_unary(const std::function<Var(Var)>& f, Matrix x, double tol = 1e-6) {
  Rng rng(7);
  const Matrix w = rand_matrix(x.rows(), x.cols(), rng);
  auto value = [&](const Matrix& at) {
    Tape t;
    Var y = f(t.parameter(at));
    const Matrix& yv = y.value();
    return (yv.array() * (yv.rows() == w.rows() && yv.cols() == w.cols() ? w : Matrix::Ones(yv.rows(), yv.cols())).array()).sum();
  };
  Tape t;
  Var xv = t.parameter(x);
  Var y = f(xv);
  Var loss = y.rows() == w.rows() && y.cols() == w.cols() ? ad::sum(ad::mul(y, t.constant(w))) : ad::sum(y);
  t.backward(loss);
  const Matrix fd = oracle::central_difference(value, x);
  EXPECT_LT(oracle::max_rel_error(t.grad(xv), fd, 1e-4), tol);
}

TEST(Autodiff, UnaryOpsMatchFiniteDifferences) {
  Rng rng(1);
  const Matrix x = rand_matrix(3, 4, rng);
  const Matrix pos = rand_matrix(3, 4, rng, 0.2, 2.0);
  check_unary([](Var v) { return ad::tanh(v); }, x);
  check_unary([](Var v) { return ad::exp(v); }, x);
  check_unary([](Var v) { return ad::log(v); }, pos);
  check_unary([](Var v) { return ad::softplus(v); }, x);
  check_unary([](Var v) { return ad::square(v); }, x);
  check_unary([](Var v) { return ad::neg(v); }, x);
  check_unary([](Var v) { return ad::scale(v, -2.5); }, x);
  check_unary([](Var v) { return ad::add_scalar(v, 3.0); }, x);
  check_unary([](Var v) { return ad::mean(v); }, x);
  check_unary([](Var v) { return ad::col_sum(v); }, x);
  check_unary([](Var v) { return ad::logsumexp(v); }, x);
  check_unary([](Var v) { return ad::rows(v, 1, 2); }, x);
}

TEST(Autodiff, ReluAndClampAwayFromKinks) {
  Matrix x(1, 4);
  x << -0.7, -0.2, 0.3, 0.9;
  check_unary([](Var v) { return ad::relu(v); }, x);
  check_unary([](Var v) { return ad::clamp(v, -0.5, 0.5); }, x);
}

TEST(Autodiff, BinaryOpsMatchFiniteDifferences) {
  Rng rng(2);
  const Matrix a = rand_matrix(3, 4, rng), b = rand_matrix(3, 4, rng);
  const Matrix w = rand_matrix(2, 3, rng), bias = rand_matrix(2, 1, rng);
  const Matrix s = rand_matrix(1, 1, rng);
  using Op = std::function<Var(Tape&, Var)>;
  const std::vector<Op> ops = {
      [&](Tape& t, Var x) { return ad::add(x, t.constant(b)); },
      [&](Tape& t, Var x) { return ad::sub(t.constant(b), x); },
      [&](Tape& t, Var x) { return ad::mul(x, t.constant(b)); },
      [&](Tape& t, Var x) { return ad::min(x, t.constant(b)); },
      [&](Tape& t, Var x) { return ad::matmul(t.constant(w), x); },
      [&](Tape& t, Var x) { return ad::affine(t.constant(w), x, t.constant(bias)); },
      [&](Tape& t, Var x) { return ad::vstack(x, ad::square(x)); },
      [&](Tape& t, Var x) { return ad::scale_by(x, t.constant(s)); },
  };
  for (const auto& op : ops) {
    auto value = [&](const Matrix& at) {
      Tape t;
      return ad::sum(ad::square(op(t, t.parameter(at)))).scalar();
    };
    Tape t;
    Var x = t.parameter(a);
    t.backward(ad::sum(ad::square(op(t, x))));
    EXPECT_LT(oracle::max_rel_error(t.grad(x), oracle::central_difference(value, a), 1e-4), 1e-6);
  }
}

TEST(Autodiff, GradientFlowsToSecondOperand) {
  Rng rng(3);
  const Matrix w = rand_matrix(2, 3, rng), x = rand_matrix(3, 5, rng), b = rand_matrix(2, 1, rng);
  auto value_w = [&](const Matrix& at) {
    Tape t;
    return ad::sum(ad::tanh(ad::affine(t.parameter(at), t.constant(x), t.constant(b)))).scalar();
  };
  auto value_b = [&](const Matrix& at) {
    Tape t;
    return ad::sum(ad::tanh(ad::affine(t.constant(w), t.constant(x), t.parameter(at)))).scalar();
  };
  Tape t;
  Var wv = t.parameter(w), bv = t.parameter(b);
  t.backward(ad::sum(ad::tanh(ad::affine(wv, t.constant(x), bv))));
  EXPECT_LT(oracle::max_rel_error(t.grad(wv), oracle::central_difference(value_w, w)), 1e-6);
  EXPECT_LT(oracle::max_rel_error(t.grad(bv), oracle::central_difference(value_b, b)), 1e-6);
}

TEST(Autodiff, ScaleByGradientReachesScalar) {
  Tape t;
  Var s = t.parameter(Matrix::Constant(1, 1, 2.0));
  Var x = t.constant(Matrix::Constant(2, 2, 3.0));
  t.backward(ad::sum(ad::scale_by(x, s)));
  EXPECT_DOUBLE_EQ(t.grad(s)(0, 0), 12.0);
}

TEST(Autodiff, LogSumExpIsStableAndExact) {
  Matrix x(1, 3);
  x << 1000.0, 1000.0, 999.0;
  Tape t;
  const double lse = ad::logsumexp(t.constant(x)).scalar();
  EXPECT_NEAR(lse, 1000.0 + std::log(2.0 + std::exp(-1.0)), 1e-9);
}

TEST(Autodiff, ConstantsGetNoGradient) {
  Tape t;
  Var c = t.constant(Matrix::Ones(2, 2));
  Var p = t.parameter(Matrix::Ones(2, 2));
  t.backward(ad::sum(ad::mul(c, p)));
  EXPECT_EQ(t.grad(c).size(), 0);
  EXPECT_TRUE(t.grad(p).isApprox(Matrix::Ones(2, 2)));
}

TEST(Autodiff, ShapeMismatchThrows) {
  Tape t;
  Var a = t.constant(Matrix::Ones(2, 2));
  Var b = t.constant(Matrix::Ones(3, 2));
  EXPECT_THROW(ad::add(a, b), StructuralError);
  EXPECT_THROW(ad::matmul(a, b), StructuralError);
  EXPECT_THROW(t.backward(a), StructuralError);
}

TEST(Mlp, ForwardMatchesHandComputation) {
  nn::Mlp net({2, 2, 1}, nn::Activation::relu);
  net.weight(0) << 1, -1, 2, 0.5;
  net.bias(0) << 0.1, -3;
  net.weight(1) << 2, 4;
  net.bias(1) << -0.5;
  nn::Vector x(2);
  x << 1.0, 2.0;
  // hidden = relu([1-2+0.1, 2+1-3]) = [0, 0] -> out = -0.5
  EXPECT_DOUBLE_EQ(net.forward(x)(0), -0.5);
  x << 3.0, 1.0;
  // hidden = relu([2.1, 3.5]) -> 4.2 + 14 - 0.5
  EXPECT_DOUBLE_EQ(net.forward(x)(0), 17.7);
}

TEST(Mlp, TapedForwardAgreesAndGradientsMatchFiniteDifferences) {
  Rng rng(5);
  const nn::Mlp net = nn::Mlp::random({4, 8, 8, 3}, nn::Activation::tanh, rng);
  const Matrix x = rand_matrix(4, 6, rng);
  ad::Tape t;
  const auto bind = net.bind(t, true);
  Var out = net.forward(bind, t.constant(x));
  EXPECT_TRUE(out.value().isApprox(net.forward(x), 1e-12));
  t.backward(ad::sum(ad::square(out)));
  const auto grads = bind.gradients();
  ASSERT_EQ(grads.size(), net.params().size());
  for (std::size_t k = 0; k < grads.size(); ++k) {
    auto value = [&](const Matrix& at) {
      nn::Mlp copy = net;
      copy.params()[k] = at;
      return copy.forward(x).array().square().sum();
    };
    EXPECT_LT(oracle::max_rel_error(grads[k], oracle::central_difference(value, net.params()[k])), 1e-5)
        << "tensor " << k;
  }
}

TEST(Mlp, RejectsWrongInputDimension) {
  Rng rng(1);
  const nn::Mlp net = nn::Mlp::random({3, 4, 2}, nn::Activation::relu, rng);
  EXPECT_THROW(net.forward(nn::Vector(nn::Vector::Zero(4))), StructuralError);
}

TEST(Mlp, CheckpointRoundTripAndDimensionCheck) {
  Rng rng(9);
  const nn::Mlp net = nn::Mlp::random({5, 7, 2}, nn::Activation::tanh, rng);
  std::stringstream ss;
  nn::save_mlp(net, ss);
  const std::string bytes = ss.str();
  std::stringstream a(bytes), b(bytes);
  EXPECT_TRUE(nn::load_mlp(a) == net);
  EXPECT_THROW(nn::load_mlp(b, {5, 8, 2}), StructuralError);
  std::stringstream junk("not a network");
  EXPECT_THROW(nn::load_mlp(junk), ParseError);
}

TEST(Optimizer, MinimisesQuadratic) {
  std::vector<Matrix> p{Matrix::Constant(2, 1, 5.0)};
  nn::OptState st = nn::OptState::for_params(p, 0.05);
  for (int i = 0; i < 2000; ++i) nn::opt_step(p, {2.0 * (p[0].array() - 1.0).matrix()}, st);
  EXPECT_NEAR(p[0](0), 1.0, 1e-3);
  EXPECT_EQ(st.step, 2000);
}

TEST(Optimizer, FirstStepHasLearningRateMagnitude) {
  // Bias correction makes the first update lr * sign(g).
  std::vector<Matrix> p{Matrix::Zero(1, 3)};
  nn::OptState st = nn::OptState::for_params(p, 0.01);
  Matrix g(1, 3);
  g << 100.0, -0.001, 3.0;
  nn::opt_step(p, {g}, st);
  EXPECT_NEAR(p[0](0), -0.01, 1e-6);
  EXPECT_NEAR(p[0](1), 0.01, 1e-4);
  EXPECT_NEAR(p[0](2), -0.01, 1e-6);
}

TEST(Optimizer, NonFiniteGradientThrows) {
  std::vector<Matrix> p{Matrix::Zero(1, 1)};
  nn::OptState st = nn::OptState::for_params(p, 0.01);
  EXPECT_THROW(nn::opt_step(p, {Matrix::Constant(1, 1, NAN)}, st), TrainingError);
}

TEST(Polyak, InterpolatesParameters) {
  Rng rng(3);
  nn::Mlp a = nn::Mlp::random({2, 3, 1}, nn::Activation::relu, rng);
  const nn::Mlp b = nn::Mlp::random({2, 3, 1}, nn::Activation::relu, rng);
  const nn::Mlp a0 = a;
  nn::polyak(a, b, 0.005);
  for (std::size_t k = 0; k < a.params().size(); ++k) {
    EXPECT_TRUE(a.params()[k].isApprox(0.995 * a0.params()[k] + 0.005 * b.params()[k]));
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

TEST(Squash, LogProbMatchesProbabilityOfSmallInterval) {
  // P(a in [x - h, x + h]) / 2h through the inverse map, one dimension.
  nn::GaussianHead head{nn::Vector::Constant(1, 0.3), nn::Vector::Constant(1, std::log(0.7))};
  nn::Bounds b{nn::Vector::Constant(1, -0.3), nn::Vector::Constant(1, 0.2)};
  for (double x : {-0.25, -0.1, 0.0, 0.15}) {
    const double h = 1e-6;
    auto xi = [&](double a) { return std::atanh(2 * (a - b.lo(0)) / (b.hi(0) - b.lo(0)) - 1); };
    const double p = (normal_cdf((xi(x + h) - 0.3) / 0.7) - normal_cdf((xi(x - h) - 0.3) / 0.7)) / (2 * h);
    EXPECT_NEAR(nn::squashed_log_prob(head, b, nn::Vector::Constant(1, x)), std::log(p), 1e-5);
  }
}

TEST(Squash, SampleLogProbAgreesWithDensityAndStaysInBounds) {
  Rng rng(11);
  nn::GaussianHead head{nn::Vector(2), nn::Vector(2)};
  head.mu << 0.5, -1.0;
  head.log_sigma << -0.5, 0.2;
  nn::Bounds b{nn::Vector(2), nn::Vector(2)};
  b.lo << -0.3, -0.008;
  b.hi << 0.23, 0.008;
  for (int i = 0; i < 50; ++i) {
    const auto s = nn::sample_squashed(head, b, rng);
    EXPECT_TRUE((s.action.array() >= b.lo.array()).all() && (s.action.array() <= b.hi.array()).all());
    if ((s.action.array() > b.lo.array() + 1e-9).all() && (s.action.array() < b.hi.array() - 1e-9).all()) {
      EXPECT_NEAR(s.log_prob, nn::squashed_log_prob(head, b, s.action), 1e-4 * std::max(1.0, std::abs(s.log_prob)));
    }
  }
}

TEST(Squash, SplitHeadClampsLogSigma) {
  nn::Vector out(4);
  out << 0.1, 0.2, -40.0, 40.0;
  const auto h = nn::split_head(out);
  EXPECT_DOUBLE_EQ(h.log_sigma(0), nn::kLogSigmaMin);
  EXPECT_DOUBLE_EQ(h.log_sigma(1), nn::kLogSigmaMax);
}

TEST(Squash, TapedSampleMatchesUntapedAndDifferentiates) {
  Rng rng(4);
  const Matrix out = rand_matrix(4, 3, rng);
  const Matrix noise = rand_matrix(2, 3, rng, -2, 2);
  nn::Bounds b{nn::Vector(2), nn::Vector(2)};
  b.lo << -1.0, -0.5;
  b.hi << 2.0, 0.5;
  ad::Tape t;
  Var po = t.parameter(out);
  const auto ts = nn::taped_squashed_sample(po, noise, b);
  for (int j = 0; j < 3; ++j) {
    const auto s = nn::squash_with_noise(nn::split_head(out.col(j)), b, noise.col(j));
    EXPECT_NEAR(ts.log_prob.value()(0, j), s.log_prob, 1e-9);
    EXPECT_TRUE(ts.unit_action.value().col(j).isApprox(
        (2.0 * (s.action - b.lo).array() / (b.hi - b.lo).array() - 1.0).matrix(), 1e-9));
  }
  t.backward(ad::add(ad::sum(ts.log_prob), ad::sum(ad::square(ts.unit_action))));
  auto value = [&](const Matrix& at) {
    ad::Tape t2;
    const auto s = nn::taped_squashed_sample(t2.parameter(at), noise, b);
    return s.log_prob.value().sum() + s.unit_action.value().array().square().sum();
  };
  EXPECT_LT(oracle::max_rel_error(t.grad(po), oracle::central_difference(value, out), 1e-4), 1e-5);
}

TEST(Softmax, OracleSanity) {
  const auto p = oracle::softmax({1.0, 2.0, 3.0});
  double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(p[2], std::exp(3.0) / z, 1e-15);
}

}  // namespace
}  // namespace advscen
