#pragma once

#include <utility>
#include <vector>

#include "jmlsr/linalg.hpp"
#include "jmlsr/words.hpp"

namespace jmlsr {

/// Sampled outputs with either explicit inputs (u-form) or a mode path (theta-form).
struct TimeSeries {
  Matrix y;                  ///< T x p
  Alphabet input_alphabet;   ///< u-form only
  Matrix u;                  ///< T x d, u-form only
  std::vector<int> theta;    ///< length T, 0-based modes, theta-form only
  Matrix state;              ///< optional T x n state trajectory, empty unless recorded

  Index horizon() const { return y.rows(); }
  Index outputs() const { return y.cols(); }
  bool theta_form() const { return !theta.empty(); }

  void validate() const;
};

/// Columns u_(q1,q2)(t) = [theta(t) = q1 and theta(t+1) = q2]; the last row is zero.
Matrix pair_inputs(const std::vector<int>& theta, const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

}  // namespace jmlsr
