#include "jmlsr/gbs.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "jmlsr/error.hpp"

namespace jmlsr {

namespace {

Matrix psd_sqrt(const Matrix& q) {
  if (q.size() == 0) return q;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(q));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

void GbsModel::validate() const {
  const Index n = dim(), m = noise_dim(), p = outputs();
  const std::size_t d = letters();
  if (d == 0) fail(ErrorCode::InvalidArgument, "GBS alphabet is empty");
  if (A.size() != d || K.size() != d || Q.size() != d)
    fail(ErrorCode::InvalidArgument, "A, K and Q need one entry per letter");
  if (weights.size() != d) fail(ErrorCode::InvalidArgument, "one weight per letter required");
  if (language.alphabet_size() != d) fail(ErrorCode::InvalidArgument, "language alphabet size mismatch");
  if (D.rows() != p) fail(ErrorCode::InvalidArgument, "D must have p rows");
  for (std::size_t s = 0; s < d; ++s) {
    if (A[s].rows() != n || A[s].cols() != n) fail(ErrorCode::InvalidArgument, "A matrices must be n x n");
    if (K[s].rows() != n || K[s].cols() != m) fail(ErrorCode::InvalidArgument, "K matrices must be n x m");
    if (Q[s].rows() != m || Q[s].cols() != m) fail(ErrorCode::InvalidArgument, "Q matrices must be m x m");
    if ((Q[s] - Q[s].transpose()).norm() > 1e-9 * (1.0 + Q[s].norm()))
      fail(ErrorCode::InvalidArgument, "Q matrices must be symmetric");
    if (m > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Q[s]), Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-9 * (1.0 + Q[s].norm()))
        fail(ErrorCode::InvalidArgument, "Q matrices must be positive semidefinite");
    }
  }
}

bool GbsModel::structural_zeros_hold(double tol) const {
  for (std::size_t a = 0; a < letters(); ++a)
    for (std::size_t b = 0; b < letters(); ++b) {
      if (language.allows(static_cast<Letter>(a), static_cast<Letter>(b))) continue;
      if ((A[b] * A[a]).cwiseAbs().maxCoeff() > tol && dim() > 0) return false;
      if (dim() > 0 && noise_dim() > 0 && (A[b] * K[a] * Q[a]).cwiseAbs().maxCoeff() > tol) return false;
    }
  return true;
}

InputProcessSpec InputProcessSpec::markov_pair_for(const GbsModel& model) {
  InputProcessSpec spec;
  spec.kind = InputKind::markov_pair;
  std::size_t states = 0;
  for (const auto& name : model.alphabet.names()) {
    auto pr = parse_pair_letter(name);
    if (!pr) fail(ErrorCode::InconsistentAlphabet, "letter '" + name + "' is not a transition pair");
    spec.letter_pairs.push_back(*pr);
    states = std::max({states, pr->first + 1, pr->second + 1});
  }
  Matrix p = Matrix::Zero(static_cast<Index>(states), static_cast<Index>(states));
  for (std::size_t s = 0; s < spec.letter_pairs.size(); ++s)
    p(static_cast<Index>(spec.letter_pairs[s].first), static_cast<Index>(spec.letter_pairs[s].second)) =
        model.weights[static_cast<Letter>(s)];
  spec.chain = MarkovChain::from_transitions(p);
  return spec;
}

double weighted_stability_radius(const GbsModel& model) {
  return stability_radius(model.A, model.weights.values());
}

std::size_t default_burn_in(double rho) {
  if (!(rho < 1.0)) fail(ErrorCode::UnstableModel, "spectral radius must be below one");
  return static_cast<std::size_t>(std::ceil(10.0 / (1.0 - rho)));
}

Matrix propagate(const GbsModel& model, const Matrix& u, const Matrix& v, Matrix* states) {
  const Index n = model.dim(), t_len = u.rows();
  Matrix y(t_len, model.outputs());
  if (states) states->resize(t_len, n);
  Vector x = Vector::Zero(n), next(n), drive(n);
  for (Index t = 0; t < t_len; ++t) {
    const Vector vt = v.row(t).transpose();
    y.row(t).noalias() = (model.C * x + model.D * vt).transpose();
    if (states) states->row(t) = x.transpose();
    next.setZero();
    for (std::size_t s = 0; s < model.letters(); ++s) {
      const double us = u(t, static_cast<Index>(s));
      if (us == 0.0) continue;
      drive.noalias() = model.A[s] * x;
      drive.noalias() += model.K[s] * vt;
      next += us * drive;
    }
    x.swap(next);
  }
  return y;
}

TimeSeries simulate(const GbsModel& model, const InputProcessSpec& input, std::size_t horizon,
                    std::optional<std::size_t> burn_in, std::uint64_t seed, bool record_state) {
  model.validate();
  const double rho = weighted_stability_radius(model);
  if (!(rho < 1.0 - kDefaultStabilityMargin))
    fail(ErrorCode::UnstableModel, "weighted stability radius " + std::to_string(rho) + " >= 1");
  const std::size_t burn = burn_in.value_or(default_burn_in(rho));
  const Index total = static_cast<Index>(burn + horizon);
  const std::size_t d = model.letters();
  const Index m = model.noise_dim();
  const auto& p = model.weights;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix u = Matrix::Zero(total, static_cast<Index>(d));
  std::vector<int> mode(static_cast<std::size_t>(total), 0);
  std::vector<Matrix> noise_factor;

  switch (input.kind) {
    case InputKind::linear:
      if (d != 1 || std::abs(p[0] - 1.0) > 1e-12)
        fail(ErrorCode::InvalidArgument, "linear input needs a single letter with weight 1");
      u.setOnes();
      noise_factor.push_back(psd_sqrt(model.Q[0]));
      break;
    case InputKind::bilinear:
      if (d != 2 || std::abs(p[0] - 1.0) > 1e-12)
        fail(ErrorCode::InvalidArgument, "bilinear input needs two letters with p_0 = 1");
      u.col(0).setOnes();
      for (Index t = 0; t < total; ++t) u(t, 1) = std::sqrt(p[1]) * normal(rng);
      noise_factor.push_back(psd_sqrt(model.Q[0]));
      break;
    case InputKind::iid_indicator: {
      double sum = 0.0;
      for (double w : p.values()) sum += w;
      if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "indicator weights must sum to 1");
      for (Index t = 0; t < total; ++t) {
        double r = uniform(rng), acc = 0.0;
        std::size_t s = 0;
        for (; s + 1 < d; ++s) {
          acc += p[static_cast<Letter>(s)];
          if (r < acc) break;
        }
        u(t, static_cast<Index>(s)) = 1.0;
      }
      noise_factor.push_back(psd_sqrt(model.Q[0] / p[0]));
      break;
    }
    case InputKind::markov_pair: {
      if (!input.chain || input.letter_pairs.size() != d)
        fail(ErrorCode::InvalidArgument, "markov-pair input needs a chain and one pair per letter");
      const MarkovChain& chain = *input.chain;
      const Index states = static_cast<Index>(chain.states());
      std::vector<int> path(static_cast<std::size_t>(total + 1));
      auto draw = [&](const Vector& probs) {
        double r = uniform(rng), acc = 0.0;
        Index q = 0;
        for (; q + 1 < probs.size(); ++q) {
          acc += probs(q);
          if (r < acc) break;
        }
        return static_cast<int>(q);
      };
      path[0] = draw(chain.pi);
      for (std::size_t t = 1; t < path.size(); ++t) path[t] = draw(chain.P.row(path[t - 1]).transpose());
      for (Index t = 0; t < total; ++t) {
        mode[static_cast<std::size_t>(t)] = path[static_cast<std::size_t>(t)];
        for (std::size_t s = 0; s < d; ++s)
          if (static_cast<int>(input.letter_pairs[s].first) == path[static_cast<std::size_t>(t)] &&
              static_cast<int>(input.letter_pairs[s].second) == path[static_cast<std::size_t>(t + 1)])
            u(t, static_cast<Index>(s)) = 1.0;
      }
      noise_factor.assign(static_cast<std::size_t>(states), Matrix::Zero(m, m));
      for (std::size_t s = 0; s < d; ++s) {
        const auto [q1, q2] = input.letter_pairs[s];
        const double mass = chain.pi(static_cast<Index>(q1)) * chain.P(static_cast<Index>(q1), static_cast<Index>(q2));
        if (mass > 0.0) noise_factor[q1] = psd_sqrt(model.Q[s] / mass);
      }
      break;
    }
  }

  Matrix v(total, m);
  Vector xi(m);
  for (Index t = 0; t < total; ++t) {
    for (Index k = 0; k < m; ++k) xi(k) = normal(rng);
    v.row(t) = (noise_factor[static_cast<std::size_t>(mode[static_cast<std::size_t>(t)])] * xi).transpose();
  }

  Matrix states;
  const Matrix y = propagate(model, u, v, record_state ? &states : nullptr);
  TimeSeries ts;
  const Index t_len = static_cast<Index>(horizon);
  ts.y = y.bottomRows(t_len);
  ts.input_alphabet = model.alphabet;
  ts.u = u.bottomRows(t_len);
  if (record_state) ts.state = states.bottomRows(t_len);
  return ts;
}

std::vector<Matrix> lyapunov_map(const GbsModel& model, const std::vector<Matrix>& p) {
  const Index n = model.dim();
  const std::size_t d = model.letters();
  std::vector<Matrix> forcing(d);
  for (std::size_t s = 0; s < d; ++s)
    forcing[s] = model.A[s] * p[s] * model.A[s].transpose() + model.K[s] * model.Q[s] * model.K[s].transpose();
  std::vector<Matrix> out(d, Matrix::Zero(n, n));
  for (std::size_t s = 0; s < d; ++s) {
    for (std::size_t s1 = 0; s1 < d; ++s1)
      if (model.language.allows(static_cast<Letter>(s1), static_cast<Letter>(s))) out[s] += forcing[s1];
    out[s] *= model.weights[static_cast<Letter>(s)];
  }
  return out;
}

double lyapunov_residual(const GbsModel& model, const std::vector<Matrix>& p) {
  const auto rhs = lyapunov_map(model, p);
  double res = 0.0, norm = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    res += (p[s] - rhs[s]).squaredNorm();
    norm += p[s].squaredNorm();
  }
  return std::sqrt(res) / (1.0 + std::sqrt(norm));
}

std::vector<Matrix> solve_state_covariance(const GbsModel& model, LyapunovMethod method) {
  model.validate();
  const double rho = weighted_stability_radius(model);
  if (!(rho < 1.0 - kDefaultStabilityMargin))
    fail(ErrorCode::UnstableModel, "weighted stability radius " + std::to_string(rho) + " >= 1");
  const Index n = model.dim();
  const std::size_t d = model.letters();
  const Index nn = n * n;
  const Index unknowns = nn * static_cast<Index>(d);
  if (method == LyapunovMethod::automatic)
    method = unknowns <= 2500 ? LyapunovMethod::direct : LyapunovMethod::fixed_point;

  std::vector<Matrix> p(d, Matrix::Zero(n, n));
  if (n == 0) return p;
  if (method == LyapunovMethod::direct) {
    Matrix sys = Matrix::Identity(unknowns, unknowns);
    Vector rhs = Vector::Zero(unknowns);
    for (std::size_t s = 0; s < d; ++s) {
      const double w = model.weights[static_cast<Letter>(s)];
      for (std::size_t s1 = 0; s1 < d; ++s1) {
        if (!model.language.allows(static_cast<Letter>(s1), static_cast<Letter>(s))) continue;
        sys.block(static_cast<Index>(s) * nn, static_cast<Index>(s1) * nn, nn, nn) -= w * kron(model.A[s1], model.A[s1]);
        rhs.segment(static_cast<Index>(s) * nn, nn) +=
            w * vec(model.K[s1] * model.Q[s1] * model.K[s1].transpose());
      }
    }
    const Vector x = sys.partialPivLu().solve(rhs);
    for (std::size_t s = 0; s < d; ++s) p[s] = symmetrize(unvec(x.segment(static_cast<Index>(s) * nn, nn), n, n));
  } else {
    const std::size_t cap = 100000;
    std::size_t it = 0;
    for (; it < cap; ++it) {
      auto next = lyapunov_map(model, p);
      double change = 0.0, norm = 0.0;
      for (std::size_t s = 0; s < d; ++s) {
        next[s] = symmetrize(next[s]);
        change += (next[s] - p[s]).squaredNorm();
        norm += next[s].squaredNorm();
      }
      p = std::move(next);
      if (std::sqrt(change) <= 1e-15 * (1.0 + std::sqrt(norm))) break;
    }
    if (it == cap) fail(ErrorCode::NoConvergence, "Lyapunov fixed-point iteration did not converge");
  }
  if (lyapunov_residual(model, p) > 1e-10)
    fail(ErrorCode::NoConvergence, "state covariance residual above 1e-10");
  return p;
}

std::vector<std::string> associated_labels(const Alphabet& alphabet, Index p) {
  std::vector<std::string> labels;
  for (std::size_t s = 0; s < alphabet.size(); ++s)
    for (Index j = 0; j < p; ++j) labels.push_back(std::to_string(j + 1) + "," + alphabet.name(static_cast<Letter>(s)));
  return labels;
}

Representation associated_representation(const GbsModel& model) {
  return associated_representation(model, solve_state_covariance(model));
}

Representation associated_representation(const GbsModel& model, const std::vector<Matrix>& p) {
  const Index n = model.dim(), py = model.outputs();
  const std::size_t d = model.letters();
  Representation rep;
  rep.alphabet = model.alphabet;
  rep.index_labels = associated_labels(model.alphabet, py);
  rep.B.resize(n, py * static_cast<Index>(d));
  for (std::size_t s = 0; s < d; ++s) {
    const double w = model.weights[static_cast<Letter>(s)];
    rep.A.push_back(std::sqrt(w) * model.A[s]);
    rep.B.middleCols(static_cast<Index>(s) * py, py) =
        (model.A[s] * p[s] * model.C.transpose() + model.K[s] * model.Q[s] * model.D.transpose()) / std::sqrt(w);
  }
  rep.C = model.C;
  return rep;
}

std::vector<Matrix> exact_t_diag(const GbsModel& model, const std::vector<Matrix>& p) {
  std::vector<Matrix> out;
  for (std::size_t s = 0; s < model.letters(); ++s)
    out.push_back(symmetrize(model.C * p[s] * model.C.transpose() + model.D * model.Q[s] * model.D.transpose()) /
                  model.weights[static_cast<Letter>(s)]);
  return out;
}

Matrix innovation_gain(const Matrix& b_sigma, const Matrix& a_sigma, const Matrix& p_sigma, const Matrix& c,
                       const Matrix& t_sigma, double weight, double eps) {
  const double sq = std::sqrt(weight);
  const Matrix denom = symmetrize(weight * t_sigma - c * p_sigma * c.transpose());
  if (denom.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(denom, Eigen::EigenvaluesOnly);
    const double scale = std::max(1e-300, (weight * t_sigma).norm());
    if (es.eigenvalues().minCoeff() < eps * scale)
      fail(ErrorCode::InnovationNotFullRank, "p T - C P C^T is not positive definite");
  }
  const Matrix num = sq * b_sigma - a_sigma * p_sigma * c.transpose() / sq;
  return denom.ldlt().solve(num.transpose()).transpose();
}

GbsModel WeakRealization::to_gbs() const {
  GbsModel g;
  g.alphabet = alphabet;
  g.A = A;
  g.K = K;
  g.C = C;
  g.D = D;
  g.weights = weights;
  g.Q = Q;
  g.language = language;
  return g;
}

WeakRealization innovation_realization(const Representation& rep, const std::vector<Matrix>& t_diag,
                                       const LetterWeights& weights, const AdmissibleLanguage& language,
                                       const RiccatiOptions& options) {
  const Index n = rep.dim(), p = rep.outputs();
  const std::size_t d = rep.letters();
  if (rep.indices() != d * static_cast<std::size_t>(p))
    fail(ErrorCode::InvalidArgument, "representation index set must be outputs x letters");
  if (t_diag.size() != d || weights.size() != d || language.alphabet_size() != d)
    fail(ErrorCode::InvalidArgument, "one T block, weight and language letter per letter required");

  WeakRealization wr;
  wr.alphabet = rep.alphabet;
  wr.weights = weights;
  wr.language = language;
  wr.C = rep.C;
  wr.D = Matrix::Identity(p, p);
  std::vector<Matrix> bs(d);
  for (std::size_t s = 0; s < d; ++s) {
    const double sq = std::sqrt(weights[static_cast<Letter>(s)]);
    wr.A.push_back(rep.A[s] / sq);
    bs[s] = rep.B.middleCols(static_cast<Index>(s) * p, p);
  }
  wr.P.assign(d, Matrix::Zero(n, n));
  wr.K.assign(d, Matrix::Zero(n, p));
  wr.Q.assign(d, Matrix::Zero(p, p));

  auto update_gains = [&]() {
    for (std::size_t s = 0; s < d; ++s) {
      const double w = weights[static_cast<Letter>(s)];
      wr.Q[s] = symmetrize(w * t_diag[s] - wr.C * wr.P[s] * wr.C.transpose());
      wr.K[s] = innovation_gain(bs[s], rep.A[s], wr.P[s], wr.C, t_diag[s], w, options.eps);
    }
  };

  update_gains();
  if (n == 0) return wr;
  GbsModel g = wr.to_gbs();
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    g.K = wr.K;
    g.Q = wr.Q;
    auto next = lyapunov_map(g, wr.P);
    double change = 0.0, norm = 0.0;
    for (std::size_t s = 0; s < d; ++s) {
      next[s] = symmetrize(next[s]);
      change += (next[s] - wr.P[s]).squaredNorm();
      norm += next[s].squaredNorm();
    }
    wr.P = std::move(next);
    update_gains();
    if (std::sqrt(change) < options.tolerance * std::max(std::sqrt(norm), 1e-300)) break;
  }
  if (it == options.max_iterations) fail(ErrorCode::NoConvergence, "Riccati iteration hit the iteration cap");
  g.K = wr.K;
  g.Q = wr.Q;
  if (lyapunov_residual(g, wr.P) > 1e-8) fail(ErrorCode::NoConvergence, "Riccati fixed point residual above 1e-8");
  return wr;
}

}  // namespace jmlsr
