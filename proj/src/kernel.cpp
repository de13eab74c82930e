#include "keydyn/kernel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace keydyn {

GramMatrix gram_serial(std::span<const Point> x, double gamma) {
  const std::size_t n = x.size();
  GramMatrix k(n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = rbf(x[i], x[j], gamma);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

GramMatrix gram_parallel(std::span<const Point> x, double gamma) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  GramMatrix k(x.size());
  // Row i writes (i, j>i) and the mirrored (j, i); no two rows touch the
  // same entry.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    k(ui, ui) = 1.0;
    for (std::size_t j = ui + 1; j < x.size(); ++j) {
      const double v = rbf(x[ui], x[j], gamma);
      k(ui, j) = v;
      k(j, ui) = v;
    }
  }
  return k;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace keydyn
