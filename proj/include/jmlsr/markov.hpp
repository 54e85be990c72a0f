#pragma once

#include <optional>

#include "jmlsr/linalg.hpp"

namespace jmlsr {

/// Stationary Markov chain on states 0..d-1.
struct MarkovChain {
  Matrix P;   ///< transition probabilities, rows sum to one
  Vector pi;  ///< stationary distribution

  std::size_t states() const { return static_cast<std::size_t>(P.rows()); }

  /// Validates P and computes pi. Throws Reducible.
  static MarkovChain from_transitions(const Matrix& p);
};

/// pi with pi P = pi, pi >= 0, sum pi = 1. Throws Reducible.
Vector stationary_distribution(const Matrix& p);

}  // namespace jmlsr

#include <string>
#include <utility>

namespace jmlsr {

/// Letter name "q1-q2" (1-based states) for a transition pair of 0-based states.
std::string pair_letter_name(std::size_t q1, std::size_t q2);
/// Inverse of pair_letter_name; nullopt if the name is not of that form.
std::optional<std::pair<std::size_t, std::size_t>> parse_pair_letter(const std::string& name);

}  // namespace jmlsr
