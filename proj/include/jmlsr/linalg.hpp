#pragma once

#include <Eigen/Dense>
#include <vector>

namespace jmlsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultStabilityMargin = 1e-10;

/// Singular values below `eps * sigma_max` count as zero.
Index numeric_rank(const Matrix& m, double eps = kDefaultRankTol);

/// Orthonormal basis of range(m) at tolerance `eps`, columns sign-normalized
/// so that the first entry of significant magnitude is positive.
Matrix orthonormal_basis(const Matrix& m, double eps = kDefaultRankTol);

/// The `k` dominant left singular vectors of `m`, sign-normalized.
Matrix dominant_basis(const Matrix& m, Index k);

Matrix pseudo_inverse(const Matrix& m, double eps = kDefaultRankTol);

Matrix kron(const Matrix& a, const Matrix& b);

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index rows, Index cols);

double spectral_radius(const Matrix& m);

/// Spectral radius of sum_k c_k A_k^T (x) A_k^T.
///
/// Dense eigenvalues when n^2 <= 400, otherwise power iteration on the
/// cone-preserving map V -> sum_k c_k A_k^T V A_k started at the identity.
double kronecker_spectral_radius(const std::vector<Matrix>& a, const std::vector<double>& c);

/// Sign convention used for all computed bases.
void normalize_column_signs(Matrix& basis);

/// ||a - b||_F / max(1, ||a||_F, ||b||_F).
double relative_gap(const Matrix& a, const Matrix& b);

}  // namespace jmlsr
