#pragma once

#include <cstddef>

namespace jmlsr::kernels::scalar {
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
}  // namespace jmlsr::kernels::scalar

namespace jmlsr::kernels::avx2 {
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
}  // namespace jmlsr::kernels::avx2
