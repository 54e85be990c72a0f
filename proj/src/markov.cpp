#include "jmlsr/markov.hpp"

#include <cmath>
#include <vector>

#include "jmlsr/error.hpp"

namespace jmlsr {

namespace {

void check_stochastic(const Matrix& p) {
  if (p.rows() == 0 || p.rows() != p.cols()) fail(ErrorCode::InvalidArgument, "transition matrix must be square");
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = 0; j < p.cols(); ++j)
      if (!(p(i, j) >= 0.0) || !std::isfinite(p(i, j)))
        fail(ErrorCode::InvalidArgument, "transition probabilities must be finite and nonnegative");
    if (std::abs(p.row(i).sum() - 1.0) > 1e-12) fail(ErrorCode::InvalidArgument, "transition rows must sum to 1");
  }
}

bool strongly_connected(const Matrix& p) {
  const Index d = p.rows();
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(d), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (Index j = 0; j < d; ++j) {
        const double w = forward ? p(i, j) : p(j, i);
        if (w > 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = 1;
          stack.push_back(j);
        }
      }
    }
    for (char s : seen)
      if (!s) return false;
    return true;
  };
  return reach_all(true) && reach_all(false);
}

}  // namespace

Vector stationary_distribution(const Matrix& p) {
  check_stochastic(p);
  if (!strongly_connected(p)) fail(ErrorCode::Reducible, "Markov chain is not irreducible");
  const Index d = p.rows();
  Matrix sys(d + 1, d);
  sys.topRows(d) = p.transpose() - Matrix::Identity(d, d);
  sys.row(d).setOnes();
  Vector rhs = Vector::Zero(d + 1);
  rhs(d) = 1.0;
  Vector pi = sys.colPivHouseholderQr().solve(rhs);
  for (int it = 0; it < 3; ++it) pi += sys.colPivHouseholderQr().solve(rhs - sys * pi);
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return pi;
}

MarkovChain MarkovChain::from_transitions(const Matrix& p) { return MarkovChain{p, stationary_distribution(p)}; }

}  // namespace jmlsr

namespace jmlsr {

std::string pair_letter_name(std::size_t q1, std::size_t q2) {
  return std::to_string(q1 + 1) + "-" + std::to_string(q2 + 1);
}

std::optional<std::pair<std::size_t, std::size_t>> parse_pair_letter(const std::string& name) {
  const auto dash = name.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == name.size()) return std::nullopt;
  auto parse = [](const std::string& s) -> std::optional<std::size_t> {
    if (s.empty() || s.size() > 9) return std::nullopt;
    std::size_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    if (v == 0) return std::nullopt;
    return v - 1;
  };
  auto a = parse(name.substr(0, dash));
  auto b = parse(name.substr(dash + 1));
  if (!a || !b) return std::nullopt;
  return std::make_pair(*a, *b);
}

}  // namespace jmlsr
