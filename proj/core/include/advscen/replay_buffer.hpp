#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string_view>
#include <vector>

#include "advscen/random.hpp"
#include "advscen/scenario.hpp"

namespace advscen {

/// Bounded FIFO store of transitions; the oldest record is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }

  /// i-th record in insertion order, 0 = oldest retained.
  const Transition& at(std::size_t i) const;
  /// Indices (insertion order) drawn uniformly without replacement.
  /// Throws TrainingError when n exceeds size().
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

  /// Counts calls to sample() that returned at least one record.
  std::size_t reads() const { return reads_; }

  void save(std::ostream& out) const;
  static ReplayBuffer load(std::istream& in);

 private:
  std::size_t capacity_;
  std::vector<Transition> ring_;
  std::size_t head_ = 0;  ///< slot of the oldest record once full
  std::size_t size_ = 0;
  mutable std::size_t reads_ = 0;
};

/// Simulation-to-real sampling ratio; infinity means simulation only.
inline constexpr double kRatioInf = std::numeric_limits<double>::infinity();

/// Accepts "inf", "infinity" or "∞" and non-negative finite numbers. Throws ConfigError otherwise.
double parse_ratio(std::string_view text);
std::string ratio_to_string(double ratio);

/// sim = round(n·ratio/(1+ratio)), real = n - sim.
struct BatchSplit {
  std::size_t sim = 0;
  std::size_t real = 0;
};
BatchSplit split_batch(std::size_t n, double ratio);

struct MixedBatch {
  std::vector<const Transition*> sim;
  std::vector<const Transition*> real;
};
/// Draws the sim part from B and the real part from D. Throws TrainingError
/// when a required buffer holds fewer records than requested.
MixedBatch mixed_batch(const ReplayBuffer& sim_buffer, const ReplayBuffer& real_buffer,
                       double ratio, std::size_t n, Rng& rng);

}  // namespace advscen
