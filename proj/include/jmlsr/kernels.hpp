#pragma once

#include <cstddef>

// Inner loops of the covariance estimators. Every kernel has a scalar
// reference implementation; wider variants are picked once per process.
namespace jmlsr::kernels {

enum class Isa { scalar, avx2 };

struct Table {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*dot3)(const double* a, const double* b, const double* c, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
};

const char* name(Isa isa);
bool available(Isa isa);

/// Throws InvalidArgument if `isa` is not available on this machine.
const Table& table(Isa isa);

/// Best available ISA, unless JMLS_REALIZE_ISA=scalar is set. Fixed for the
/// lifetime of the process.
Isa active_isa();
const Table& active();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double dot3(const double* a, const double* b, const double* c, std::size_t n) {
  return active().dot3(a, b, c, n);
}
inline void mul(const double* a, const double* b, double* out, std::size_t n) { active().mul(a, b, out, n); }

}  // namespace jmlsr::kernels
