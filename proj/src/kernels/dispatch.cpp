#include <cmath>
#include <cstdlib>

#include "claimcheck/error.hpp"
#include "claimcheck/kernels.hpp"

namespace claimcheck::simd {
namespace {

constexpr KernelTable kScalar{Isa::Scalar, &scalar::dot, &scalar::dot_rows, &scalar::squared_norm, &scalar::scale};
#if defined(CLAIMCHECK_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, &avx2::dot, &avx2::dot_rows, &avx2::squared_norm, &avx2::scale};
#endif
#if defined(CLAIMCHECK_HAVE_NEON)
constexpr KernelTable kNeon{Isa::Neon, &neon::dot, &neon::dot_rows, &neon::squared_norm, &neon::scale};
#endif

const KernelTable& resolve() {
  if (const char* forced = std::getenv("PEERISPECT_SIMD")) {
    if (auto isa = parse_isa(forced); isa && available(*isa)) return table(*isa);
  }
  if (available(Isa::Avx2)) return table(Isa::Avx2);
  if (available(Isa::Neon)) return table(Isa::Neon);
  return kScalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  if (name == "neon") return Isa::Neon;
  return std::nullopt;
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(CLAIMCHECK_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(CLAIMCHECK_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (available(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) throw Error(ErrorCode::InvalidConfig, "kernel variant unavailable: " + std::string(to_string(isa)));
  switch (isa) {
#if defined(CLAIMCHECK_HAVE_AVX2)
    case Isa::Avx2: return kAvx2;
#endif
#if defined(CLAIMCHECK_HAVE_NEON)
    case Isa::Neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() {
  static const KernelTable& chosen = resolve();
  return chosen;
}

double normalize(std::span<double> v) {
  const KernelTable& k = active();
  double norm = std::sqrt(k.squared_norm(v.data(), v.size()));
  if (norm > 0.0) k.scale(v.data(), v.size(), 1.0 / norm);
  return norm;
}

}  // namespace claimcheck::simd
