#include "claimcheck/kernels.hpp"

namespace claimcheck::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void dot_rows(const double* rows, std::size_t n_rows, std::size_t dim, const double* query, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot(rows + r * dim, query, dim);
}

double squared_norm(const double* a, std::size_t n) { return dot(a, a, n); }

void scale(double* a, std::size_t n, double factor) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= factor;
}

}  // namespace claimcheck::simd::scalar
