#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jmlsr/linalg.hpp"
#include "jmlsr/words.hpp"

namespace jmlsr {

/// Representation (n, {A_sigma}, {B_j}, C) of a family of formal power series
/// S_j(w) = C A_w B_j.
struct Representation {
  Alphabet alphabet;
  std::vector<std::string> index_labels;  ///< J, in order; size equals B.cols()
  std::vector<Matrix> A;                  ///< one n x n matrix per letter
  Matrix B;                               ///< n x |J|, column j is B_j
  Matrix C;                               ///< p x n

  Index dim() const { return C.cols(); }
  Index outputs() const { return C.rows(); }
  std::size_t letters() const { return A.size(); }
  std::size_t indices() const { return static_cast<std::size_t>(B.cols()); }

  /// Throws InvalidArgument on inconsistent shapes.
  void validate() const;
};

/// Labels "1".."k".
std::vector<std::string> numbered_labels(std::size_t k);

/// A_{w_k} ... A_{w_1}; identity for the empty word.
Matrix word_matrix(const std::vector<Matrix>& a, Index n, const Word& w);
Matrix word_matrix(const Representation& rep, const Word& w);

Vector series_coefficient(const Representation& rep, std::size_t j, const Word& w);

/// Coefficient oracle for a series family indexed by J.
class SeriesSource {
 public:
  virtual ~SeriesSource() = default;
  virtual const Alphabet& alphabet() const = 0;
  virtual std::vector<std::string> index_labels() const = 0;
  virtual Index output_dim() const = 0;
  /// p x |J| matrix whose column j is S_j(w).
  virtual Matrix coefficients(const Word& w) const = 0;
};

class RepresentationSource final : public SeriesSource {
 public:
  explicit RepresentationSource(const Representation& rep) : rep_(rep) {}
  const Alphabet& alphabet() const override { return rep_.alphabet; }
  std::vector<std::string> index_labels() const override { return rep_.index_labels; }
  Index output_dim() const override { return rep_.outputs(); }
  Matrix coefficients(const Word& w) const override;

 private:
  const Representation& rep_;
};

struct HankelKey {
  Word word;
  Index index = 0;
  friend bool operator==(const HankelKey&, const HankelKey&) = default;
  friend std::strong_ordering operator<=>(const HankelKey&, const HankelKey&) = default;
};

/// Finite block of the Hankel matrix; entry ((u,i),(v,j)) is S_j(vu)_i.
struct HankelBlock {
  Alphabet alphabet;
  std::vector<std::string> index_labels;
  Index outputs = 0;
  Matrix matrix;
  std::vector<HankelKey> rows;
  std::vector<HankelKey> cols;

  std::optional<Index> row_of(const HankelKey& key) const;
  std::optional<Index> col_of(const HankelKey& key) const;
  /// S_j(w)_i read from any split w = v u present in the block.
  std::optional<double> value(const Word& w, Index i, Index j) const;

  void index();  ///< rebuilds the lookup maps after rows/cols change

 private:
  std::map<HankelKey, Index> row_map_;
  std::map<HankelKey, Index> col_map_;
};

HankelBlock build_hankel(const SeriesSource& src, std::size_t row_n, std::size_t col_n);
/// Same block, assembled as the product of partial observability and reachability matrices.
HankelBlock build_hankel(const Representation& rep, std::size_t row_n, std::size_t col_n);

struct Selection {
  std::vector<HankelKey> rows;
  std::vector<HankelKey> cols;
};

/// Pivoted-QR selection of r rows and r columns with rank(H_{alpha,beta}) = r.
/// Keys are restricted to words of length <= max_len.
Selection choose_selection(const HankelBlock& h, Index r, double eps = kDefaultRankTol,
                           std::size_t max_len = static_cast<std::size_t>(-1));

/// Partial realization from a Hankel block with rows up to N+1 and columns up to N.
Representation ho_kalman(const HankelBlock& h, const Selection& sel, double eps = kDefaultRankTol);

Matrix reachability_matrix(const Representation& rep);
Matrix observability_matrix(const Representation& rep);

/// Orthonormal basis of the reachable subspace span{A_w B_j}.
Matrix reachable_subspace(const Representation& rep, double eps = kDefaultRankTol);
/// Orthonormal basis of the row space of the observability matrix.
Matrix observable_subspace(const Representation& rep, double eps = kDefaultRankTol);

bool is_reachable(const Representation& rep, double eps = kDefaultRankTol);
bool is_observable(const Representation& rep, double eps = kDefaultRankTol);
inline bool is_minimal(const Representation& rep, double eps = kDefaultRankTol) {
  return is_reachable(rep, eps) && is_observable(rep, eps);
}

/// Numeric rank of the Hankel block H_{n,n} of `rep`.
Index hankel_rank(const Representation& rep, double eps = kDefaultRankTol);

/// Reachable and observable representation of the same series family.
Representation reduce_minimal(const Representation& rep, double eps = kDefaultRankTol);

/// T with T A1 = A2 T, T B1 = B2, C1 = C2 T. Throws NotIsomorphic.
Matrix find_isomorphism(const Representation& r1, const Representation& r2, double tol = 1e-8,
                        double eps = kDefaultRankTol);

/// sum_sigma c_sigma A_sigma^T (x) A_sigma^T, with c = 1 when `weights` is empty.
Matrix stability_matrix(const std::vector<Matrix>& a, const std::vector<double>& weights = {});
double stability_radius(const std::vector<Matrix>& a, const std::vector<double>& weights = {});
bool is_stable(const std::vector<Matrix>& a, const std::vector<double>& weights = {},
               double margin = kDefaultStabilityMargin);
inline bool is_stable(const Representation& rep, double margin = kDefaultStabilityMargin) {
  return is_stable(rep.A, {}, margin);
}

/// L_k = sum_{|w| <= k} ||S_j(w)||^2 for k = 0..K.
std::vector<double> square_sum_partial(const Representation& rep, std::size_t j, std::size_t k_max);

/// Change of state coordinates: (T A T^-1, T B, C T^-1).
Representation transform(const Representation& rep, const Matrix& t);

}  // namespace jmlsr
