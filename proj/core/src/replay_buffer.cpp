#include "advscen/replay_buffer.hpp"

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>

#include "advscen/errors.hpp"

namespace advscen {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (ring_.size() < capacity_) {
    ring_.push_back(std::move(t));
    ++size_;
    return;
  }
  ring_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw StructuralError("replay buffer index out of range");
  return ring_[(head_ + i) % ring_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (n > size_) {
    throw TrainingError("requested " + std::to_string(n) + " samples from a buffer of " +
                        std::to_string(size_));
  }
  // Floyd's algorithm, then a shuffle so positions carry no order bias.
  std::vector<std::size_t> out;
  out.reserve(n);
  std::unordered_set<std::size_t> chosen;
  for (std::size_t j = size_ - n; j < size_; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (chosen.insert(t).second) {
      out.push_back(t);
    } else {
      chosen.insert(j);
      out.push_back(j);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) out.push_back(&at(i));
  if (n > 0) ++reads_;
  return out;
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ParseError("truncated replay buffer", 0);
  }
  return v;
}
void put_vec(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
std::vector<double> get_vec(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1u << 20)) throw ParseError("implausible vector length in replay buffer", 0);
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw ParseError("truncated replay buffer", 0);
  }
  return v;
}

constexpr char kMagic[8] = {'A', 'D', 'V', 'S', 'R', 'B', 'U', 'F'};

}  // namespace

void ReplayBuffer::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, capacity_);
  put<std::uint64_t>(out, size_);
  put<std::uint64_t>(out, reads_);
  for (std::size_t i = 0; i < size_; ++i) {
    const Transition& t = at(i);
    put_vec(out, t.s);
    put_vec(out, t.a);
    put<double>(out, t.r);
    put_vec(out, t.s_next);
    put<std::uint8_t>(out, t.done ? 1 : 0);
  }
}

ReplayBuffer ReplayBuffer::load(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic)) {
    throw ParseError("not a replay buffer file", 0);
  }
  if (get<std::uint32_t>(in) != 1) throw ParseError("unsupported replay buffer version", 0);
  ReplayBuffer buf(get<std::uint64_t>(in));
  const auto n = get<std::uint64_t>(in);
  const auto reads = get<std::uint64_t>(in);
  if (n > buf.capacity_) throw ParseError("replay buffer holds more records than its capacity", 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    Transition t;
    t.s = get_vec(in);
    t.a = get_vec(in);
    t.r = get<double>(in);
    t.s_next = get_vec(in);
    t.done = get<std::uint8_t>(in) != 0;
    buf.push(std::move(t));
  }
  buf.reads_ = reads;
  return buf;
}

double parse_ratio(std::string_view text) {
  if (text == "inf" || text == "infinity" || text == "∞") return kRatioInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(std::string(text), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v) || v < 0.0) {
    throw ConfigError("invalid sim/real ratio '" + std::string(text) +
                      "': expected a non-negative number or 'inf'");
  }
  return v;
}

std::string ratio_to_string(double ratio) {
  if (std::isinf(ratio)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ratio);
  return buf;
}

BatchSplit split_batch(std::size_t n, double ratio) {
  if (std::isnan(ratio) || ratio < 0) throw ConfigError("sim/real ratio must be non-negative");
  if (std::isinf(ratio)) return {n, 0};
  const auto sim = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio / (1.0 + ratio)));
  return {sim, n - sim};
}

MixedBatch mixed_batch(const ReplayBuffer& sim_buffer, const ReplayBuffer& real_buffer,
                       double ratio, std::size_t n, Rng& rng) {
  const BatchSplit split = split_batch(n, ratio);
  if (split.sim > 0 && sim_buffer.empty()) throw TrainingError("simulation buffer is empty");
  if (split.real > 0 && real_buffer.empty()) throw TrainingError("offline buffer is empty");
  MixedBatch out;
  if (split.sim > 0) out.sim = sim_buffer.sample(split.sim, rng);
  if (split.real > 0) out.real = real_buffer.sample(split.real, rng);
  return out;
}

}  // namespace advscen
