#pragma once

// Independent reference for the one-class dual: accelerated projected
// gradient on {0 <= a <= C, sum a = 1}. Shares nothing with the SMO path
// except the problem statement.

#include <algorithm>
#include <cmath>
#include <vector>

#include "keydyn/features.hpp"

namespace oracle {

struct QpResult {
  std::vector<double> alpha;
  double objective = 0.0;
  double rho = 0.0;
  std::vector<double> scores;  // f(x_i) on the training points
};

inline std::vector<std::vector<double>> kernel_matrix(const keydyn::Points& x, double gamma) {
  const auto n = x.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < keydyn::kFeatureDim; ++c) d2 += (x[i][c] - x[j][c]) * (x[i][c] - x[j][c]);
      q[i][j] = std::exp(-gamma * d2);
    }
  return q;
}

inline double objective(const std::vector<std::vector<double>>& q, const std::vector<double>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s += a[i] * q[i][j] * a[j];
  return 0.5 * s;
}

/// Euclidean projection onto the capped simplex. mass(tau) =
/// sum clip(y_i - tau, 0, c) is piecewise linear in tau with kinks at y_i and
/// y_i - c, so the root is found exactly between two adjacent kinks.
inline std::vector<double> project(const std::vector<double>& y, double c) {
  auto mass = [&](double tau) {
    double s = 0.0;
    for (double v : y) s += std::clamp(v - tau, 0.0, c);
    return s;
  };
  std::vector<double> kinks;
  for (double v : y) {
    kinks.push_back(v);
    kinks.push_back(v - c);
  }
  std::sort(kinks.begin(), kinks.end());
  double tau = kinks.front();
  for (std::size_t k = 0; k + 1 < kinks.size(); ++k) {
    const double m0 = mass(kinks[k]), m1 = mass(kinks[k + 1]);
    if (m0 >= 1.0 && m1 <= 1.0) {
      tau = m0 == m1 ? kinks[k] : kinks[k] + (m0 - 1.0) * (kinks[k + 1] - kinks[k]) / (m0 - m1);
      break;
    }
  }
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::clamp(y[i] - tau, 0.0, c);
  return out;
}

inline QpResult solve(const keydyn::Points& x, double gamma, double nu) {
  const auto n = x.size();
  const double c = 1.0 / (nu * static_cast<double>(n));
  const auto q = kernel_matrix(x, gamma);
  double lipschitz = 0.0;
  for (const auto& row : q) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    lipschitz = std::max(lipschitz, s);
  }
  const double step = 1.0 / lipschitz;

  std::vector<double> a(n, 1.0 / static_cast<double>(n)), y = a, prev = a;
  double t = 1.0;
  double prev_obj = objective(q, prev);
  bool restarted = false;
  auto grad = [&](const std::vector<double>& v) {
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i] += q[i][j] * v[j];
    return g;
  };
  for (int it = 0; it < 400000; ++it) {
    const auto g = grad(y);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - step * g[i];
    a = project(z, c);
    const double obj = objective(q, a);
    // Restart momentum whenever the objective goes up; a rise right after a
    // restart is a plain gradient step failing on rounding, so stop there.
    if (obj > prev_obj) {
      if (restarted) break;
      restarted = true;
      t = 1.0;
      y = prev;
      continue;
    }
    restarted = false;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      change = std::max(change, std::abs(a[i] - prev[i]));
      y[i] = a[i] + ((t - 1.0) / t_next) * (a[i] - prev[i]);
    }
    prev = a;
    prev_obj = obj;
    t = t_next;
    if (change < 1e-14 && it > 100) break;
  }

  QpResult r;
  r.alpha = prev;
  r.objective = objective(q, r.alpha);
  const auto g = grad(r.alpha);
  const double eps = 1e-9;
  double free_sum = 0.0;
  int free_n = 0;
  double lower = -1e300, upper = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    if (r.alpha[i] > eps && r.alpha[i] < c - eps) {
      free_sum += g[i];
      ++free_n;
    } else if (r.alpha[i] >= c - eps) {
      lower = std::max(lower, g[i]);
    } else {
      upper = std::min(upper, g[i]);
    }
  }
  if (free_n) r.rho = free_sum / free_n;
  else if (lower > -1e300 && upper < 1e300) r.rho = 0.5 * (lower + upper);
  else r.rho = lower > -1e300 ? lower : upper;
  r.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.scores[i] = g[i] - r.rho;
  return r;
}

}  // namespace oracle
