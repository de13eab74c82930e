#pragma once

// RBF kernel evaluation. Gram construction comes in a serial reference form
// and an OpenMP form; both compute every entry with the same expression, so
// their outputs are bit-identical.

#include <cmath>
#include <span>
#include <vector>

#include "keydyn/features.hpp"

namespace keydyn {

enum class Execution { Serial, Parallel };

inline double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < kFeatureDim; ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return s;
}

inline double rbf(const Point& a, const Point& b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

/// Dense row-major l x l kernel matrix.
class GramMatrix {
 public:
  GramMatrix() = default;
  explicit GramMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  friend bool operator==(const GramMatrix&, const GramMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

GramMatrix gram_serial(std::span<const Point> x, double gamma);
GramMatrix gram_parallel(std::span<const Point> x, double gamma);

inline GramMatrix gram(std::span<const Point> x, double gamma, Execution exec) {
  return exec == Execution::Parallel ? gram_parallel(x, gamma) : gram_serial(x, gamma);
}

/// Threads available to OpenMP regions (1 when built without OpenMP).
int max_threads();

}  // namespace keydyn
