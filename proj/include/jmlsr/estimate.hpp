#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jmlsr/gbs.hpp"
#include "jmlsr/repr.hpp"
#include "jmlsr/timeseries.hpp"

namespace jmlsr {

/// Lambda_w = E[y z_w^T] and T_{v,w} = E[z_v z_w^T] over admissible words.
struct CovarianceTable {
  Alphabet alphabet;
  LetterWeights weights;
  AdmissibleLanguage language;
  Index outputs = 0;
  std::map<Word, Matrix> lambda;
  std::map<std::pair<Word, Word>, Matrix> tee;
  std::string normalization = "mean";  ///< "mean" for data, "exact" for model-derived tables
  std::int64_t horizon = 0;            ///< samples behind the estimates; 0 for exact tables

  /// Zero block for inadmissible words; throws MissingCovariance if absent.
  Matrix lambda_at(const Word& w) const;
  Matrix tee_at(const Word& v, const Word& w) const;
  std::size_t max_lambda_length() const;
  std::size_t max_tee_length() const;
};

/// Exposes entry (j, sigma), word v as column j of Lambda_{sigma v}.
class CovarianceSource final : public SeriesSource {
 public:
  explicit CovarianceSource(const CovarianceTable& table);
  const Alphabet& alphabet() const override { return table_.alphabet; }
  std::vector<std::string> index_labels() const override { return labels_; }
  Index output_dim() const override { return table_.outputs; }
  Matrix coefficients(const Word& w) const override;

 private:
  const CovarianceTable& table_;
  std::vector<std::string> labels_;
};

/// T x d input matrix for `alphabet`: the u columns of a u-form series, or
/// pair indicators derived from theta for letters named "q1-q2".
Matrix input_matrix(const TimeSeries& ts, const Alphabet& alphabet);

Vector lagged_product(const TimeSeries& ts, const Word& w, Index t, const LetterWeights& weights,
                      const AdmissibleLanguage& language, const Alphabet& alphabet);

Matrix estimate_lambda(const TimeSeries& ts, const Word& w, const LetterWeights& weights,
                       const AdmissibleLanguage& language, const Alphabet& alphabet);
Matrix estimate_T(const TimeSeries& ts, const Word& v, const Word& w, const LetterWeights& weights,
                  const AdmissibleLanguage& language, const Alphabet& alphabet);

struct EstimateOptions {
  std::size_t lambda_length = 1;  ///< Lambda_w for 1 <= |w| <= lambda_length
  std::size_t tee_length = 1;     ///< T_{v,w} for 1 <= |v|, |w| <= tee_length
  unsigned threads = 0;           ///< 0 runs serially
};

CovarianceTable estimate_covariance_table(const TimeSeries& ts, const Alphabet& alphabet, const LetterWeights& weights,
                                          const AdmissibleLanguage& language, const EstimateOptions& options);

/// Exact table from a scaled representation (as returned by associated_representation)
/// and E[z_sigma z_sigma^T], using the shift recursion of T.
CovarianceTable exact_covariance_table(const Representation& rep, const std::vector<Matrix>& t_diag,
                                       const LetterWeights& weights, const AdmissibleLanguage& language,
                                       std::size_t lambda_length, std::size_t tee_length);

HankelBlock build_empirical_hankel(const CovarianceTable& table, std::size_t row_n, std::size_t col_n);

/// Transition-frequency estimate of the pair weights from a mode path.
struct PairWeightEstimate {
  Matrix transitions;  ///< empirical transition matrix
  Alphabet alphabet;   ///< identifiable pairs, named "q1-q2"
  LetterWeights weights;
  AdmissibleLanguage language;
  std::vector<std::string> unidentifiable;
};
PairWeightEstimate estimate_pair_weights(const std::vector<int>& theta, std::size_t states);

struct RealizeConfig {
  double eps_rank = kDefaultRankTol;
  double ridge = 0.0;
  std::optional<Selection> selection;
  unsigned threads = 0;
  RiccatiOptions riccati;
};

struct RealizeDiagnostics {
  Vector hankel_singular_values;
  Vector gram_eigenvalues;
  double hankel_condition = 0.0;  ///< sigma_1 / sigma_n of the selected minor
  double gram_condition = 0.0;
  Selection selection;
  std::int64_t samples = 0;
  std::size_t regression_words = 0;
};

struct RealizeResult {
  WeakRealization model;
  RealizeDiagnostics diagnostics;
};

/// Steps 2-6 of the data-driven realization on a covariance table.
RealizeResult realize_from_table(const CovarianceTable& table, Index n, std::size_t past, const RealizeConfig& config = {});

/// Estimates Lambda_w for |w| <= 2n+2 and T for words up to `past`, then realizes.
RealizeResult realize_from_data(const TimeSeries& ts, Index n, std::size_t past, const Alphabet& alphabet,
                                const LetterWeights& weights, const AdmissibleLanguage& language,
                                const RealizeConfig& config = {});

}  // namespace jmlsr
