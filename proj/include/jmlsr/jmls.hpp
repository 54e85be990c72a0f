#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "jmlsr/estimate.hpp"
#include "jmlsr/gbs.hpp"
#include "jmlsr/markov.hpp"
#include "jmlsr/timeseries.hpp"

namespace jmlsr {

/// x(t+1) = M_{theta(t),theta(t+1)} x(t) + B_{theta(t),theta(t+1)} v(t),
/// y(t) = C_{theta(t)} x(t) + D_{theta(t)} v(t), with mode-dependent state dimensions.
struct GjmlsModel {
  MarkovChain chain;
  std::vector<Index> dims;  ///< n_q
  std::vector<Matrix> M;    ///< index q1 * d + q2, n_q2 x n_q1
  std::vector<Matrix> B;    ///< index q1 * d + q2, n_q2 x m
  std::vector<Matrix> C;    ///< per mode, p x n_q
  std::vector<Matrix> D;    ///< per mode, p x m
  std::vector<Matrix> Q;    ///< per mode, E[v v^T chi(theta = q)]

  std::size_t states() const { return dims.size(); }
  Index total_dim() const;
  Index outputs() const { return C.front().rows(); }
  Index noise_dim() const { return D.front().cols(); }
  Index offset(std::size_t q) const;
  double prob(std::size_t q1, std::size_t q2) const { return chain.P(static_cast<Index>(q1), static_cast<Index>(q2)); }
  const Matrix& m(std::size_t q1, std::size_t q2) const { return M[q1 * states() + q2]; }
  const Matrix& b(std::size_t q1, std::size_t q2) const { return B[q1 * states() + q2]; }

  void validate() const;
};

/// Output for a mode path theta (length T+1) and noise v (T x m) from x(0) = 0.
/// `states`, if given, receives the stacked state embedded in the block of theta(t).
Matrix gjmls_propagate(const GjmlsModel& model, const std::vector<int>& theta, const Matrix& v,
                       Matrix* states = nullptr);

/// Stationary Gaussian simulation; theta-form series.
TimeSeries simulate_gjmls(const GjmlsModel& model, std::size_t horizon, std::optional<std::size_t> burn_in,
                          std::uint64_t seed, bool record_state = false);

/// Block matrix with block (q1, q2) = p_{q1 q2} M_{q1 q2}^T (x) M_{q1 q2}^T, size sum n_q^2.
Matrix jmls_stability_matrix(const GjmlsModel& model);
/// 0/1 matrix J (N^2 x sum n_q^2) with J Mtilde J^T = weighted Kronecker matrix of the associated GBS.
Matrix jmls_stability_embedding(const GjmlsModel& model);
double jmls_stability_radius(const GjmlsModel& model);
bool is_jmls_stable(const GjmlsModel& model, double margin = kDefaultStabilityMargin);

/// P_q = sum_s p_{s q} (M_{s q} P_s M_{s q}^T + B_{s q} Q_s B_{s q}^T).
std::vector<Matrix> gjmls_state_covariance(const GjmlsModel& model);
double gjmls_covariance_residual(const GjmlsModel& model, const std::vector<Matrix>& p);

struct GbsFromGjmls {
  GbsModel gbs;  ///< output is the p*d dimensional auxiliary output
  std::vector<std::pair<std::size_t, std::size_t>> letter_pairs;
  Matrix E;                              ///< [I_p ... I_p], y = E y~
  std::vector<Matrix> output_selectors;  ///< M_q, p x pd
  std::vector<Matrix> state_embeddings;  ///< I_q, N x n_q
  std::vector<Matrix> noise_selectors;   ///< S_q, m x md
};

GbsFromGjmls gbs_from_gjmls(const GjmlsModel& model);
/// The same GBS with output E C, E D, i.e. a GBS realization of y itself.
GbsModel plain_output(const GbsFromGjmls& conv);

struct GjmlsFromGbsOptions {
  bool blocked_output = true;  ///< output is p*d dimensional with per-mode blocks
  bool blocked_noise = true;   ///< noise is split into d equal per-mode blocks
  /// Pin n_q: bases become dominant eigenvectors of the mode covariances.
  std::optional<std::vector<Index>> mode_dims;
  std::optional<std::size_t> word_length;  ///< span saturation depth, default n
  double eps = kDefaultRankTol;
};

GjmlsModel gjmls_from_gbs(const GbsModel& gbs, const MarkovChain& chain, const GjmlsFromGbsOptions& options = {});

struct ModeMatrices {
  std::vector<Matrix> per_mode;
  bool full_rank = false;
};

/// G_{q1 q2} = p_{q1 q2} (M P_{q1} C_{q1}^T + B Q_{q1} D_{q1}^T), per-pair.
std::vector<Matrix> gjmls_g(const GjmlsModel& model, const std::vector<Matrix>& p);
ModeMatrices gjmls_reach(const GjmlsModel& model, double eps = kDefaultRankTol);
ModeMatrices gjmls_obs(const GjmlsModel& model, double eps = kDefaultRankTol);

/// Per-mode T_q with T_q2 M1 = M2 T_q1, C1 = C2 T, T G1 = G2.
std::vector<Matrix> gjmls_isomorphism(const GjmlsModel& h1, const GjmlsModel& h2, double tol = 1e-7,
                                      double eps = kDefaultRankTol);

/// Per-mode change of basis x_q -> T_q x_q.
GjmlsModel transform(const GjmlsModel& model, const std::vector<Matrix>& t);

/// Exact output covariances of y over the pair alphabet.
CovarianceTable gjmls_exact_covariances(const GjmlsModel& model, std::size_t lambda_length, std::size_t tee_length);

struct GjmlsIdentification {
  RealizeResult realization;
  PairWeightEstimate pairs;
  GjmlsModel model;
};

/// Realization from a theta-form series over the identified pair alphabet,
/// converted to a GJMLS with plain output.
GjmlsIdentification identify_gjmls(const TimeSeries& ts, std::size_t states, Index n, std::size_t past,
                                   const RealizeConfig& config = {},
                                   std::optional<std::vector<Index>> mode_dims = std::nullopt);

}  // namespace jmlsr
