#pragma once

#include <random>
#include <vector>

#include "jmlsr/gbs.hpp"
#include "jmlsr/jmls.hpp"
#include "jmlsr/repr.hpp"

namespace jmlsr::testing {

using Rng = std::mt19937_64;

Matrix gaussian(Rng& rng, Index rows, Index cols, double scale = 1.0);
/// Q Q^T + shift I with Q gaussian.
Matrix random_spd(Rng& rng, Index n, double shift = 0.1);

/// Reachable and observable representation with gaussian entries.
Representation random_minimal_rep(Rng& rng, Index n, std::size_t d, Index p, std::size_t indices = 1);
/// Minimal rep with stability radius `rho`.
Representation random_stable_rep(Rng& rng, Index n, std::size_t d, Index p, double rho, std::size_t indices = 1);
/// Adds `extra` states that are unreachable (even k) or unobservable (odd k), then mixes coordinates.
Representation pad_nonminimal(Rng& rng, const Representation& rep, Index extra, int variant);

/// Random weights summing to one, each at least `floor`.
std::vector<double> random_simplex(Rng& rng, std::size_t d, double floor = 0.1);

/// GBS with iid-indicator style moments Q_sigma = p_sigma Q0 and weighted radius `rho`.
GbsModel random_stable_gbs(Rng& rng, Index n, std::size_t d, Index p, Index m, double rho);
/// Innovation-form GBS (D = I, m = p) with a stable predictor.
GbsModel random_innovation_gbs(Rng& rng, Index n, std::size_t d, Index p, double rho);

/// Transition matrix with positive entries bounded below by `floor`.
Matrix random_transitions(Rng& rng, std::size_t d, double floor = 0.1);
/// GJMLS with stability radius `rho`; Q_q = pi_q Q_base,q.
GjmlsModel random_stable_gjmls(Rng& rng, const std::vector<Index>& dims, Index p, Index m, double rho,
                               const Matrix* transitions = nullptr);

}  // namespace jmlsr::testing
