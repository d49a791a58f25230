#pragma once

// Brute-force reference implementations used to cross-check the library.
// Nothing here calls into the code under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline std::vector<double> softmax(const std::vector<double>& q) {
  long double m = -std::numeric_limits<long double>::infinity();
  for (double v : q) m = std::max<long double>(m, v);
  long double z = 0;
  for (double v : q) z += std::exp(static_cast<long double>(v) - m);
  std::vector<double> out;
  for (double v : q) out.push_back(static_cast<double>(std::exp(static_cast<long double>(v) - m) / z));
  return out;
}

/// Central differences of a scalar function of a matrix.
inline Eigen::MatrixXd central_difference(const std::function<double(const Eigen::MatrixXd&)>& f,
                                          Eigen::MatrixXd x, double h = 1e-6) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f(x);
    x.data()[i] = keep - h;
    const double down = f(x);
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2 * h);
  }
  return g;
}

/// max |a - b| / max(|a|, |b|, floor) over entries.
inline double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-6) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a.data()[i]), std::abs(b.data()[i]), floor});
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / den);
  }
  return worst;
}

/// Cyclic Jacobi eigensolver for symmetric matrices. Eigenvalues descending,
/// eigenvectors in the matching columns.
struct Eigen2 {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
inline Eigen2 jacobi_eigen(Eigen::MatrixXd a, int sweeps = 100) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int s = 0; s < sweeps; ++s) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  Eigen2 out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

struct P {
  double x, y;
};
using Quad = std::array<P, 4>;

/// Corners of a w x h rectangle centred at (cx, cy) rotated by a, counter-clockwise.
inline Quad rect(double cx, double cy, double len, double wid, double a) {
  const double c = std::cos(a), s = std::sin(a);
  const double hx = len / 2, hy = wid / 2;
  const std::array<P, 4> local{{{hx, hy}, {-hx, hy}, {-hx, -hy}, {hx, -hy}}};
  Quad q;
  for (int i = 0; i < 4; ++i) q[i] = {cx + c * local[i].x - s * local[i].y, cy + s * local[i].x + c * local[i].y};
  return q;
}

inline double shoelace(const Quad& q) {
  double s = 0;
  for (int i = 0; i < 4; ++i) {
    const P& a = q[i];
    const P& b = q[(i + 1) % 4];
    s += a.x * b.y - b.x * a.y;
  }
  return std::abs(s) / 2;
}

/// Signed-area test against every edge of a convex counter-clockwise quad.
inline bool inside(const Quad& q, P p) {
  double sign = 0;
  for (int i = 0; i < 4; ++i) {
    const P& a = q[i];
    const P& b = q[(i + 1) % 4];
    const double cr = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (sign == 0) sign = cr;
    if (cr * sign < 0) return false;
  }
  return true;
}

/// Dense sampling of rectangle `a` (len x wid at centre/angle) tested against quad b.
inline bool sampled_overlap(double cx, double cy, double len, double wid, double ang, const Quad& b,
                            int n = 120) {
  const double c = std::cos(ang), s = std::sin(ang);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double u = (static_cast<double>(i) / n - 0.5) * len;
      const double v = (static_cast<double>(j) / n - 0.5) * wid;
      if (inside(b, {cx + c * u - s * v, cy + s * u + c * v})) return true;
    }
  }
  return false;
}

inline std::vector<P> boundary_points(const Quad& q, int per_edge) {
  std::vector<P> pts;
  for (int i = 0; i < 4; ++i) {
    const P& a = q[i];
    const P& b = q[(i + 1) % 4];
    for (int k = 0; k < per_edge; ++k) {
      const double t = static_cast<double>(k) / per_edge;
      pts.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return pts;
}

/// Minimum distance between boundaries: exact point-to-segment distance from a
/// dense discretisation of one boundary to the other's edges, both ways.
inline double boundary_distance(const Quad& a, const Quad& b, int per_edge = 2000) {
  auto point_seg = [](P p, P s0, P s1) {
    const double dx = s1.x - s0.x, dy = s1.y - s0.y;
    double t = ((p.x - s0.x) * dx + (p.y - s0.y) * dy) / (dx * dx + dy * dy);
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - s0.x - t * dx, p.y - s0.y - t * dy);
  };
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [from, to] : {std::pair{&a, &b}, std::pair{&b, &a}}) {
    for (const P& p : boundary_points(*from, per_edge)) {
      for (int i = 0; i < 4; ++i) best = std::min(best, point_seg(p, (*to)[i], (*to)[(i + 1) % 4]));
    }
  }
  return best;
}

/// Naive dense network: params are [W0, b0, W1, b1, ...], tanh (or relu) on
/// hidden layers, linear output. Columns of x are samples.
inline Eigen::MatrixXd mlp_forward(const std::vector<Eigen::MatrixXd>& params, const Eigen::MatrixXd& x,
                                   bool relu = false) {
  Eigen::MatrixXd h = x;
  const std::size_t layers = params.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const Eigen::MatrixXd& w = params[2 * l];
    const Eigen::MatrixXd& b = params[2 * l + 1];
    Eigen::MatrixXd z(w.rows(), h.cols());
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        long double acc = b(i, 0);
        for (Eigen::Index k = 0; k < w.cols(); ++k) acc += static_cast<long double>(w(i, k)) * h(k, j);
        double v = static_cast<double>(acc);
        if (l + 1 < layers) v = relu ? std::max(v, 0.0) : std::tanh(v);
        z(i, j) = v;
      }
    }
    h = std::move(z);
  }
  return h;
}

/// Log density of a = lo + (hi - lo)(tanh(mu + sigma eps) + 1)/2 under the
/// change of variables from the diagonal Gaussian.
inline double squashed_gaussian_log_prob(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma,
                                         const Eigen::VectorXd& eps, const Eigen::VectorXd& lo,
                                         const Eigen::VectorXd& hi) {
  const long double log_2pi = std::log(2.0L * 3.14159265358979323846264338327950288L);
  long double lp = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const long double u = mu(i) + std::exp(static_cast<long double>(log_sigma(i))) * eps(i);
    const long double z = (u - mu(i)) / std::exp(static_cast<long double>(log_sigma(i)));
    lp += -0.5L * z * z - log_sigma(i) - 0.5L * log_2pi;
    const long double t = std::tanh(u);
    lp -= std::log(1.0L - t * t);
    lp -= std::log((static_cast<long double>(hi(i)) - lo(i)) / 2.0L);
  }
  return static_cast<double>(lp);
}

/// Value iteration for a deterministic single-state self-loop with reward r.
inline double self_loop_value(double r, double gamma, int iters = 100000) {
  double v = 0;
  for (int i = 0; i < iters; ++i) v = r + gamma * v;
  return v;
}

}  // namespace oracle
