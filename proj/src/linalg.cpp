#include "jmlsr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace jmlsr {

namespace {

Eigen::BDCSVD<Matrix> thin_svd(const Matrix& m, unsigned options) {
  return Eigen::BDCSVD<Matrix>(m, options);
}

Index count_above(const Vector& s, double eps) {
  if (s.size() == 0 || !(s(0) > 0.0)) return 0;
  const double cut = eps * s(0);
  Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return r;
}

}  // namespace

Index numeric_rank(const Matrix& m, double eps) {
  if (m.size() == 0) return 0;
  return count_above(thin_svd(m, 0).singularValues(), eps);
}

void normalize_column_signs(Matrix& basis) {
  for (Index j = 0; j < basis.cols(); ++j) {
    const double big = basis.col(j).cwiseAbs().maxCoeff();
    for (Index i = 0; i < basis.rows(); ++i) {
      if (std::abs(basis(i, j)) > 1e-8 * big) {
        if (basis(i, j) < 0) basis.col(j) *= -1.0;
        break;
      }
    }
  }
}

Matrix orthonormal_basis(const Matrix& m, double eps) {
  if (m.size() == 0) return Matrix(m.rows(), 0);
  auto svd = thin_svd(m, Eigen::ComputeThinU);
  const Index r = count_above(svd.singularValues(), eps);
  Matrix u = svd.matrixU().leftCols(r);
  normalize_column_signs(u);
  return u;
}

Matrix dominant_basis(const Matrix& m, Index k) {
  if (k == 0 || m.size() == 0) return Matrix(m.rows(), 0);
  auto svd = thin_svd(m, Eigen::ComputeThinU);
  Matrix u = svd.matrixU().leftCols(std::min<Index>(k, svd.matrixU().cols()));
  normalize_column_signs(u);
  return u;
}

Matrix pseudo_inverse(const Matrix& m, double eps) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  auto svd = thin_svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index r = count_above(s, eps);
  Matrix out = Matrix::Zero(m.cols(), m.rows());
  for (Index k = 0; k < r; ++k) {
    out += svd.matrixV().col(k) * (1.0 / s(k)) * svd.matrixU().col(k).transpose();
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double kronecker_spectral_radius(const std::vector<Matrix>& a, const std::vector<double>& c) {
  if (a.empty()) return 0.0;
  const Index n = a.front().rows();
  if (n == 0) return 0.0;
  if (n * n <= 400) {
    Matrix k = Matrix::Zero(n * n, n * n);
    for (std::size_t s = 0; s < a.size(); ++s) {
      const Matrix at = a[s].transpose();
      k += c[s] * kron(at, at);
    }
    return spectral_radius(k);
  }
  Matrix v = Matrix::Identity(n, n);
  double estimate = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Matrix next = Matrix::Zero(n, n);
    for (std::size_t s = 0; s < a.size(); ++s) next += c[s] * a[s].transpose() * v * a[s];
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    const double ratio = norm / v.norm();
    v = next / norm;
    if (it > 10 && std::abs(ratio - estimate) <= 1e-13 * std::max(1.0, ratio)) return ratio;
    estimate = ratio;
  }
  return estimate;
}

double relative_gap(const Matrix& a, const Matrix& b) {
  const double scale = std::max({1.0, a.norm(), b.norm()});
  return (a - b).norm() / scale;
}

}  // namespace jmlsr
