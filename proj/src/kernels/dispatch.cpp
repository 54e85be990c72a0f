#include <cstdlib>
#include <string>

#include "impl.hpp"
#include "jmlsr/error.hpp"
#include "jmlsr/kernels.hpp"

namespace jmlsr::kernels {

namespace {

constexpr Table kScalar{&scalar::dot, &scalar::dot3, &scalar::mul};
#ifdef JMLSR_HAVE_AVX2_TU
constexpr Table kAvx2{&avx2::dot, &avx2::dot3, &avx2::mul};
#endif

bool cpu_has_avx2() {
#if defined(JMLSR_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa select() {
  if (const char* env = std::getenv("JMLS_REALIZE_ISA")) {
    if (std::string(env) == "scalar") return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

}  // namespace

const char* name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool available(Isa isa) {
  static const bool avx2 = cpu_has_avx2();
  return isa == Isa::scalar || avx2;
}

const Table& table(Isa isa) {
  if (!available(isa)) fail(ErrorCode::InvalidArgument, std::string("kernel set unavailable: ") + name(isa));
#ifdef JMLSR_HAVE_AVX2_TU
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

Isa active_isa() {
  static const Isa isa = select();
  return isa;
}

const Table& active() {
  static const Table& t = table(active_isa());
  return t;
}

}  // namespace jmlsr::kernels
