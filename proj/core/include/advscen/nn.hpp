#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "advscen/autodiff.hpp"
#include "advscen/random.hpp"

namespace advscen::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { linear, relu, tanh };

/// Fully connected network. Layer i maps sizes[i] -> sizes[i+1]; hidden
/// layers use `hidden`, the output layer is linear. Parameters are stored as
/// [W0, b0, W1, b1, ...] with biases as column matrices.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> sizes, Activation hidden);

  /// Glorot-uniform weights, zero biases.
  static Mlp random(std::vector<std::size_t> sizes, Activation hidden, Rng& rng);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }

  Matrix& weight(std::size_t layer) { return params_[2 * layer]; }
  const Matrix& weight(std::size_t layer) const { return params_[2 * layer]; }
  Matrix& bias(std::size_t layer) { return params_[2 * layer + 1]; }
  const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1]; }

  std::vector<Matrix>& params() { return params_; }
  const std::vector<Matrix>& params() const { return params_; }

  /// Batched forward pass; columns are samples. Throws StructuralError on a dim mismatch.
  Matrix forward(const Matrix& input) const;
  Vector forward(const Vector& input) const;

  /// Parameter leaves of one network on a tape.
  struct Binding {
    std::vector<ad::Var> params;
    /// Gradients after Tape::backward, in params() order (zero when untouched).
    std::vector<Matrix> gradients() const;
  };
  /// Binds parameters as leaves (trainable or constant) for a taped forward pass.
  Binding bind(ad::Tape& tape, bool trainable) const;
  ad::Var forward(const Binding& binding, ad::Var input) const;

  bool operator==(const Mlp& other) const;

 private:
  std::vector<std::size_t> sizes_;
  Activation hidden_ = Activation::relu;
  std::vector<Matrix> params_;
};

/// Mean and clamped log standard deviation of a diagonal Gaussian.
struct GaussianHead {
  Vector mu;
  Vector log_sigma;
};

inline constexpr double kLogSigmaMin = -5.0;
inline constexpr double kLogSigmaMax = 2.0;

/// Splits a policy output [mu; raw log sigma] and clamps log sigma.
GaussianHead split_head(const Vector& out);

/// Per-dimension action bounds for the tanh squash and linear map.
struct Bounds {
  Vector lo;
  Vector hi;
};

struct SquashedSample {
  Vector action;
  double log_prob = 0.0;
};

/// xi ~ N(mu, sigma); zeta = tanh(xi); a = lo + (zeta + 1)/2 (hi - lo).
/// log_prob includes the tanh and linear-map Jacobians.
SquashedSample sample_squashed(const GaussianHead& head, const Bounds& bounds, Rng& rng);
/// Same map with xi = mu + sigma * noise for a caller-supplied standard normal draw.
SquashedSample squash_with_noise(const GaussianHead& head, const Bounds& bounds,
                                 const Vector& noise);
/// Deterministic action: the squashed mean.
Vector squashed_mean(const GaussianHead& head, const Bounds& bounds);
/// Density of the squashed distribution at `action` (strictly inside the bounds).
double squashed_log_prob(const GaussianHead& head, const Bounds& bounds, const Vector& action);

/// Taped reparameterised sampling for a batch. `policy_out` is (2d x B),
/// `noise` is (d x B). Returns actions normalised to [-1, 1] (d x B) and
/// log-probabilities of the bounded actions (1 x B).
struct TapedSample {
  ad::Var unit_action;
  ad::Var log_prob;
};
TapedSample taped_squashed_sample(ad::Var policy_out, const Matrix& noise, const Bounds& bounds);

/// Adaptive-moment optimiser state for a list of tensors.
struct OptState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptState for_params(const std::vector<Matrix>& params, double lr);
};

/// Bias-corrected adaptive-moment update in place. Throws TrainingError on a
/// non-finite gradient and StructuralError on a shape mismatch.
void opt_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, OptState& st);

/// target <- (1 - tau) target + tau online.
void polyak(Mlp& target, const Mlp& online, double tau);

/// Versioned binary checkpoint: magic, version, layer dims, activation,
/// then row-major doubles per tensor.
void save_mlp(const Mlp& net, std::ostream& out);
Mlp load_mlp(std::istream& in);
/// Loads and rejects a network whose layer sizes differ from `expected_sizes`.
Mlp load_mlp(std::istream& in, const std::vector<std::size_t>& expected_sizes);

void save_opt_state(const OptState& st, std::ostream& out);
OptState load_opt_state(std::istream& in);

}  // namespace advscen::nn
