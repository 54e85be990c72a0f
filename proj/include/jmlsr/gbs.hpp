#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "jmlsr/linalg.hpp"
#include "jmlsr/markov.hpp"
#include "jmlsr/repr.hpp"
#include "jmlsr/timeseries.hpp"
#include "jmlsr/words.hpp"

namespace jmlsr {

/// x(t+1) = sum_sigma (A_sigma x(t) + K_sigma v(t)) u_sigma(t),  y(t) = C x(t) + D v(t).
struct GbsModel {
  Alphabet alphabet;
  std::vector<Matrix> A;  ///< n x n per letter
  std::vector<Matrix> K;  ///< n x m per letter
  Matrix C;               ///< p x n
  Matrix D;               ///< p x m
  LetterWeights weights;
  std::vector<Matrix> Q;  ///< E[v v^T u_sigma^2], m x m per letter
  AdmissibleLanguage language;

  Index dim() const { return C.cols(); }
  Index outputs() const { return C.rows(); }
  Index noise_dim() const { return D.cols(); }
  std::size_t letters() const { return alphabet.size(); }

  void validate() const;
  /// True when A_b A_a = 0 and A_b K_a Q_a = 0 for every inadmissible pair (a, b).
  bool structural_zeros_hold(double tol = 0.0) const;
};

enum class InputKind { linear, bilinear, iid_indicator, markov_pair };

struct InputProcessSpec {
  InputKind kind = InputKind::linear;
  /// markov_pair only: chain and the (q1, q2) pair of every letter.
  std::optional<MarkovChain> chain;
  std::vector<std::pair<std::size_t, std::size_t>> letter_pairs;

  /// Markov-pair input for a model over letters named "q1-q2"; transitions
  /// are read from the letter weights.
  static InputProcessSpec markov_pair_for(const GbsModel& model);
};

/// Spectral radius of sum_sigma p_sigma A_sigma^T (x) A_sigma^T.
double weighted_stability_radius(const GbsModel& model);

/// ceil(10 / (1 - rho)).
std::size_t default_burn_in(double rho);

/// Output and states for given inputs (T x d) and noise (T x m) from x(0) = 0.
Matrix propagate(const GbsModel& model, const Matrix& u, const Matrix& v, Matrix* states = nullptr);

/// Gaussian simulation; the returned series is in u-form.
TimeSeries simulate(const GbsModel& model, const InputProcessSpec& input, std::size_t horizon,
                    std::optional<std::size_t> burn_in, std::uint64_t seed, bool record_state = false);

enum class LyapunovMethod { automatic, direct, fixed_point };

/// Unique P_sigma with P_sigma = p_sigma sum_{s: s sigma in L} (A_s P_s A_s^T + K_s Q_s K_s^T).
std::vector<Matrix> solve_state_covariance(const GbsModel& model, LyapunovMethod method = LyapunovMethod::automatic);

/// ||lhs - rhs||_F / (1 + ||P||_F) of the covariance equation.
double lyapunov_residual(const GbsModel& model, const std::vector<Matrix>& p);

/// Right-hand side of the covariance equation for the given P.
std::vector<Matrix> lyapunov_map(const GbsModel& model, const std::vector<Matrix>& p);

/// (n, {sqrt(p) A}, B_(j,sigma), C). J is ordered letter-major, labels "j,letter".
Representation associated_representation(const GbsModel& model);
Representation associated_representation(const GbsModel& model, const std::vector<Matrix>& p);

/// Exact E[z_sigma z_sigma^T] = (C P C^T + D Q D^T) / p_sigma.
std::vector<Matrix> exact_t_diag(const GbsModel& model, const std::vector<Matrix>& p);

/// Labels "j,letter" for the associated index set.
std::vector<std::string> associated_labels(const Alphabet& alphabet, Index p);

/// K_sigma = (sqrt(p) B - A P C^T / sqrt(p)) (p T - C P C^T)^-1, A in scaled form.
Matrix innovation_gain(const Matrix& b_sigma, const Matrix& a_sigma, const Matrix& p_sigma, const Matrix& c,
                       const Matrix& t_sigma, double weight, double eps = kDefaultRankTol);

struct WeakRealization {
  Alphabet alphabet;
  LetterWeights weights;
  AdmissibleLanguage language;
  std::vector<Matrix> A, K, P, Q;
  Matrix C, D;

  Index dim() const { return C.cols(); }
  GbsModel to_gbs() const;
};

struct RiccatiOptions {
  std::size_t max_iterations = 100000;
  double tolerance = 1e-10;
  double eps = kDefaultRankTol;
};

/// Innovation-form weak realization from a minimal representation in scaled form.
WeakRealization innovation_realization(const Representation& rep, const std::vector<Matrix>& t_diag,
                                       const LetterWeights& weights, const AdmissibleLanguage& language,
                                       const RiccatiOptions& options = {});

}  // namespace jmlsr
