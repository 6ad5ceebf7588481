#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

// Dense-vector kernels behind the exact nearest-neighbour search. Every kernel
// has a portable scalar reference; AVX2/FMA and NEON variants are chosen at
// runtime and must agree with the reference up to summation order.
namespace claimcheck::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[r] = dot(rows + r * dim, query) for r in [0, n_rows).
  void (*dot_rows)(const double* rows, std::size_t n_rows, std::size_t dim, const double* query,
                   double* out);
  double (*squared_norm)(const double* a, std::size_t n);
  void (*scale)(double* a, std::size_t n, double factor);
};

// True when the variant is compiled in and the CPU supports it.
bool available(Isa isa);
std::vector<Isa> available_isas();

// Throws Error(InvalidConfig) if the variant is unavailable.
const KernelTable& table(Isa isa);

// Best available variant, resolved once. PEERISPECT_SIMD=scalar|avx2|neon
// forces a choice (ignored when unavailable).
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

// Scales v to unit L2 norm in place; returns the original norm. Zero vectors
// are left untouched.
double normalize(std::span<double> v);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void dot_rows(const double* rows, std::size_t n_rows, std::size_t dim, const double* query, double* out);
double squared_norm(const double* a, std::size_t n);
void scale(double* a, std::size_t n, double factor);
}  // namespace scalar

#if defined(CLAIMCHECK_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void dot_rows(const double* rows, std::size_t n_rows, std::size_t dim, const double* query, double* out);
double squared_norm(const double* a, std::size_t n);
void scale(double* a, std::size_t n, double factor);
}  // namespace avx2
#endif

#if defined(CLAIMCHECK_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void dot_rows(const double* rows, std::size_t n_rows, std::size_t dim, const double* query, double* out);
double squared_norm(const double* a, std::size_t n);
void scale(double* a, std::size_t n, double factor);
}  // namespace neon
#endif

}  // namespace claimcheck::simd
