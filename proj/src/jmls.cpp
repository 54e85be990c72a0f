#include "jmlsr/jmls.hpp"

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

Matrix block_selector(Index block, Index size, Index count) {
  Matrix s = Matrix::Zero(size, size * count);
  s.middleCols(block * size, size).setIdentity();
  return s;
}

void check_shape(const Matrix& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) fail(ErrorCode::InvalidArgument, std::string(what) + " has wrong shape");
}

}  // namespace

Index GjmlsModel::total_dim() const {
  Index n = 0;
  for (Index q : dims) n += q;
  return n;
}

Index GjmlsModel::offset(std::size_t q) const {
  Index o = 0;
  for (std::size_t r = 0; r < q; ++r) o += dims[r];
  return o;
}

void GjmlsModel::validate() const {
  const std::size_t d = states();
  if (d == 0) fail(ErrorCode::InvalidArgument, "GJMLS needs at least one mode");
  if (static_cast<std::size_t>(chain.P.rows()) != d || chain.pi.size() != chain.P.rows())
    fail(ErrorCode::InvalidArgument, "chain size must match the number of modes");
  if (M.size() != d * d || B.size() != d * d || C.size() != d || D.size() != d || Q.size() != d)
    fail(ErrorCode::InvalidArgument, "GJMLS matrix families have the wrong number of entries");
  const Index p = C.front().rows(), m = D.front().cols();
  for (std::size_t q = 0; q < d; ++q) {
    if (dims[q] < 0) fail(ErrorCode::InvalidArgument, "mode dimensions must be nonnegative");
    check_shape(C[q], p, dims[q], "C_q");
    check_shape(D[q], p, m, "D_q");
    check_shape(Q[q], m, m, "Q_q");
    if (m > 0) {
      if ((Q[q] - Q[q].transpose()).norm() > 1e-9 * (1.0 + Q[q].norm()))
        fail(ErrorCode::InvalidArgument, "Q_q must be symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Q[q]), Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-9 * (1.0 + Q[q].norm()))
        fail(ErrorCode::InvalidArgument, "Q_q must be positive semidefinite");
    }
  }
  for (std::size_t q1 = 0; q1 < d; ++q1)
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      if (prob(q1, q2) <= 0.0) continue;
      check_shape(this->m(q1, q2), dims[q2], dims[q1], "M_{q1,q2}");
      check_shape(b(q1, q2), dims[q2], m, "B_{q1,q2}");
    }
}

Matrix gjmls_propagate(const GjmlsModel& model, const std::vector<int>& theta, const Matrix& v, Matrix* states) {
  const Index t_len = v.rows();
  if (static_cast<Index>(theta.size()) < t_len + 1) fail(ErrorCode::InvalidArgument, "mode path must have T+1 entries");
  Matrix y(t_len, model.outputs());
  if (states) states->setZero(t_len, model.total_dim());
  Vector x = Vector::Zero(model.dims[static_cast<std::size_t>(theta[0])]);
  for (Index t = 0; t < t_len; ++t) {
    const auto q = static_cast<std::size_t>(theta[static_cast<std::size_t>(t)]);
    const auto q2 = static_cast<std::size_t>(theta[static_cast<std::size_t>(t + 1)]);
    const Vector vt = v.row(t).transpose();
    y.row(t) = (model.C[q] * x + model.D[q] * vt).transpose();
    if (states) states->row(t).segment(model.offset(q), model.dims[q]) = x.transpose();
    if (model.prob(q, q2) <= 0.0) fail(ErrorCode::InvalidArgument, "mode path uses a zero-probability transition");
    x = model.m(q, q2) * x + model.b(q, q2) * vt;
  }
  return y;
}

TimeSeries simulate_gjmls(const GjmlsModel& model, std::size_t horizon, std::optional<std::size_t> burn_in,
                          std::uint64_t seed, bool record_state) {
  model.validate();
  const double rho = jmls_stability_radius(model);
  if (!(rho < 1.0 - kDefaultStabilityMargin))
    fail(ErrorCode::UnstableModel, "stability radius " + std::to_string(rho) + " >= 1");
  const std::size_t burn = burn_in.value_or(default_burn_in(rho));
  const std::size_t total = burn + horizon;
  const Index m = model.noise_dim();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto draw = [&](const Vector& probs) {
    double r = uniform(rng), acc = 0.0;
    Index q = 0;
    for (; q + 1 < probs.size(); ++q) {
      acc += probs(q);
      if (r < acc) break;
    }
    return static_cast<int>(q);
  };
  std::vector<int> path(total + 1);
  path[0] = draw(model.chain.pi);
  for (std::size_t t = 1; t < path.size(); ++t) path[t] = draw(model.chain.P.row(path[t - 1]).transpose());

  std::vector<Matrix> factor;
  for (std::size_t q = 0; q < model.states(); ++q) {
    const double pi = model.chain.pi(static_cast<Index>(q));
    factor.push_back(pi > 0.0 ? psd_sqrt(model.Q[q] / pi) : Matrix::Zero(m, m));
  }
  Matrix v(static_cast<Index>(total), m);
  Vector xi(m);
  for (std::size_t t = 0; t < total; ++t) {
    for (Index k = 0; k < m; ++k) xi(k) = normal(rng);
    v.row(static_cast<Index>(t)) = (factor[static_cast<std::size_t>(path[t])] * xi).transpose();
  }

  Matrix states;
  const Matrix y = gjmls_propagate(model, path, v, record_state ? &states : nullptr);
  TimeSeries ts;
  const Index t_len = static_cast<Index>(horizon);
  ts.y = y.bottomRows(t_len);
  ts.theta.assign(path.begin() + static_cast<std::ptrdiff_t>(burn), path.begin() + static_cast<std::ptrdiff_t>(total));
  if (record_state) ts.state = states.bottomRows(t_len);
  return ts;
}

Matrix jmls_stability_matrix(const GjmlsModel& model) {
  const std::size_t d = model.states();
  std::vector<Index> off(d + 1, 0);
  for (std::size_t q = 0; q < d; ++q) off[q + 1] = off[q] + model.dims[q] * model.dims[q];
  Matrix out = Matrix::Zero(off[d], off[d]);
  for (std::size_t q1 = 0; q1 < d; ++q1)
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      const double p = model.prob(q1, q2);
      if (p <= 0.0) continue;
      const Matrix mt = model.m(q1, q2).transpose();
      out.block(off[q1], off[q2], off[q1 + 1] - off[q1], off[q2 + 1] - off[q2]) = p * kron(mt, mt);
    }
  return out;
}

Matrix jmls_stability_embedding(const GjmlsModel& model) {
  const Index n = model.total_dim();
  Index cols = 0;
  for (Index k : model.dims) cols += k * k;
  Matrix j = Matrix::Zero(n * n, cols);
  Index c = 0;
  for (std::size_t q = 0; q < model.states(); ++q) {
    Matrix iq = Matrix::Zero(n, model.dims[q]);
    iq.middleRows(model.offset(q), model.dims[q]).setIdentity();
    const Index w = model.dims[q] * model.dims[q];
    j.middleCols(c, w) = kron(iq, iq);
    c += w;
  }
  return j;
}

double jmls_stability_radius(const GjmlsModel& model) {
  Index size = 0;
  for (Index k : model.dims) size += k * k;
  if (size <= 400) return spectral_radius(jmls_stability_matrix(model));
  const auto conv = gbs_from_gjmls(model);
  return weighted_stability_radius(conv.gbs);
}

bool is_jmls_stable(const GjmlsModel& model, double margin) { return jmls_stability_radius(model) < 1.0 - margin; }

namespace {

std::vector<Matrix> gjmls_lyapunov_map(const GjmlsModel& model, const std::vector<Matrix>& p) {
  const std::size_t d = model.states();
  std::vector<Matrix> out;
  for (std::size_t q = 0; q < d; ++q) {
    Matrix acc = Matrix::Zero(model.dims[q], model.dims[q]);
    for (std::size_t s = 0; s < d; ++s) {
      const double w = model.prob(s, q);
      if (w <= 0.0) continue;
      acc += w * (model.m(s, q) * p[s] * model.m(s, q).transpose() + model.b(s, q) * model.Q[s] * model.b(s, q).transpose());
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace

double gjmls_covariance_residual(const GjmlsModel& model, const std::vector<Matrix>& p) {
  const auto rhs = gjmls_lyapunov_map(model, p);
  double res = 0.0, norm = 0.0;
  for (std::size_t q = 0; q < p.size(); ++q) {
    res += (p[q] - rhs[q]).squaredNorm();
    norm += p[q].squaredNorm();
  }
  return std::sqrt(res) / (1.0 + std::sqrt(norm));
}

std::vector<Matrix> gjmls_state_covariance(const GjmlsModel& model) {
  model.validate();
  if (!is_jmls_stable(model)) fail(ErrorCode::UnstableModel, "GJMLS is not mean-square stable");
  const std::size_t d = model.states();
  std::vector<Index> off(d + 1, 0);
  for (std::size_t q = 0; q < d; ++q) off[q + 1] = off[q] + model.dims[q] * model.dims[q];
  const Index unknowns = off[d];
  std::vector<Matrix> p;
  for (std::size_t q = 0; q < d; ++q) p.push_back(Matrix::Zero(model.dims[q], model.dims[q]));
  if (unknowns == 0) return p;
  if (unknowns <= 2500) {
    Matrix sys = Matrix::Identity(unknowns, unknowns);
    Vector rhs = Vector::Zero(unknowns);
    for (std::size_t q = 0; q < d; ++q)
      for (std::size_t s = 0; s < d; ++s) {
        const double w = model.prob(s, q);
        if (w <= 0.0) continue;
        const Matrix& ms = model.m(s, q);
        sys.block(off[q], off[s], off[q + 1] - off[q], off[s + 1] - off[s]) -= w * kron(ms, ms);
        rhs.segment(off[q], off[q + 1] - off[q]) += w * vec(model.b(s, q) * model.Q[s] * model.b(s, q).transpose());
      }
    const Vector x = sys.partialPivLu().solve(rhs);
    for (std::size_t q = 0; q < d; ++q)
      p[q] = symmetrize(unvec(x.segment(off[q], off[q + 1] - off[q]), model.dims[q], model.dims[q]));
  } else {
    std::size_t it = 0;
    for (; it < 100000; ++it) {
      auto next = gjmls_lyapunov_map(model, p);
      double change = 0.0, norm = 0.0;
      for (std::size_t q = 0; q < d; ++q) {
        next[q] = symmetrize(next[q]);
        change += (next[q] - p[q]).squaredNorm();
        norm += next[q].squaredNorm();
      }
      p = std::move(next);
      if (std::sqrt(change) <= 1e-15 * (1.0 + std::sqrt(norm))) break;
    }
    if (it == 100000) fail(ErrorCode::NoConvergence, "GJMLS covariance iteration did not converge");
  }
  if (gjmls_covariance_residual(model, p) > 1e-10) fail(ErrorCode::NoConvergence, "GJMLS covariance residual above 1e-10");
  return p;
}

GbsFromGjmls gbs_from_gjmls(const GjmlsModel& model) {
  model.validate();
  const std::size_t d = model.states();
  const Index n = model.total_dim(), p = model.outputs(), m = model.noise_dim();
  const Index dd = static_cast<Index>(d);
  GbsFromGjmls out;
  for (std::size_t q = 0; q < d; ++q) {
    Matrix iq = Matrix::Zero(n, model.dims[q]);
    iq.middleRows(model.offset(q), model.dims[q]).setIdentity();
    out.state_embeddings.push_back(iq);
    out.output_selectors.push_back(block_selector(static_cast<Index>(q), p, dd));
    out.noise_selectors.push_back(block_selector(static_cast<Index>(q), m, dd));
  }
  out.E = Matrix(p, p * dd);
  for (std::size_t q = 0; q < d; ++q) out.E.middleCols(static_cast<Index>(q) * p, p).setIdentity();

  GbsModel& g = out.gbs;
  std::vector<std::string> names;
  std::vector<double> weights;
  for (std::size_t q1 = 0; q1 < d; ++q1)
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      const double w = model.prob(q1, q2);
      if (w <= 0.0) continue;
      out.letter_pairs.emplace_back(q1, q2);
      names.push_back(pair_letter_name(q1, q2));
      weights.push_back(w);
      const Matrix& i1 = out.state_embeddings[q1];
      const Matrix& i2 = out.state_embeddings[q2];
      const Matrix& s1 = out.noise_selectors[q1];
      g.A.push_back(i2 * model.m(q1, q2) * i1.transpose());
      g.K.push_back(i2 * model.b(q1, q2) * s1);
      g.Q.push_back(w * s1.transpose() * model.Q[q1] * s1);
    }
  g.alphabet = Alphabet(names);
  g.weights = LetterWeights(weights);
  std::vector<std::pair<Letter, Letter>> lp;
  for (std::size_t a = 0; a < out.letter_pairs.size(); ++a)
    for (std::size_t b = 0; b < out.letter_pairs.size(); ++b)
      if (out.letter_pairs[a].second == out.letter_pairs[b].first) lp.emplace_back(static_cast<Letter>(a), static_cast<Letter>(b));
  g.language = AdmissibleLanguage::from_pairs(out.letter_pairs.size(), lp);
  g.C = Matrix::Zero(p * dd, n);
  g.D = Matrix::Zero(p * dd, m * dd);
  for (std::size_t q = 0; q < d; ++q) {
    g.C.block(static_cast<Index>(q) * p, model.offset(q), p, model.dims[q]) = model.C[q];
    g.D.block(static_cast<Index>(q) * p, static_cast<Index>(q) * m, p, m) = model.D[q];
  }
  return out;
}

GbsModel plain_output(const GbsFromGjmls& conv) {
  GbsModel g = conv.gbs;
  g.C = conv.E * conv.gbs.C;
  g.D = conv.E * conv.gbs.D;
  return g;
}

GjmlsModel gjmls_from_gbs(const GbsModel& gbs, const MarkovChain& chain, const GjmlsFromGbsOptions& options) {
  gbs.validate();
  const std::size_t d = chain.states();
  const Index dd = static_cast<Index>(d);
  std::vector<std::vector<int>> letter(d, std::vector<int>(d, -1));
  for (std::size_t s = 0; s < gbs.letters(); ++s) {
    auto pr = parse_pair_letter(gbs.alphabet.name(static_cast<Letter>(s)));
    if (!pr || pr->first >= d || pr->second >= d)
      fail(ErrorCode::InconsistentAlphabet, "letter '" + gbs.alphabet.name(static_cast<Letter>(s)) + "' is not a chain transition");
    const double pc = chain.P(static_cast<Index>(pr->first), static_cast<Index>(pr->second));
    if (!(pc > 0.0) || std::abs(pc - gbs.weights[static_cast<Letter>(s)]) > 1e-9 * pc)
      fail(ErrorCode::InconsistentAlphabet, "letter weights do not match the chain");
    letter[pr->first][pr->second] = static_cast<int>(s);
  }
  for (std::size_t q1 = 0; q1 < d; ++q1)
    for (std::size_t q2 = 0; q2 < d; ++q2)
      if (chain.P(static_cast<Index>(q1), static_cast<Index>(q2)) > 0.0 && letter[q1][q2] < 0)
        fail(ErrorCode::InconsistentAlphabet, "transition " + pair_letter_name(q1, q2) + " has no letter");

  const Index n = gbs.dim();
  Index p = gbs.outputs(), m = gbs.noise_dim();
  if (options.blocked_output) {
    if (p % dd != 0) fail(ErrorCode::InconsistentAlphabet, "blocked output dimension must be a multiple of the mode count");
    p /= dd;
  }
  if (options.blocked_noise) {
    if (m % dd != 0) fail(ErrorCode::InconsistentAlphabet, "blocked noise dimension must be a multiple of the mode count");
    m /= dd;
  }
  std::vector<Matrix> out_sel, noise_sel;
  for (std::size_t q = 0; q < d; ++q) {
    out_sel.push_back(options.blocked_output ? block_selector(static_cast<Index>(q), p, dd) : Matrix::Identity(p, p));
    noise_sel.push_back(options.blocked_noise ? block_selector(static_cast<Index>(q), m, dd) : Matrix::Identity(m, m));
  }

  std::vector<Matrix> basis(d);
  if (options.mode_dims) {
    if (options.mode_dims->size() != d) fail(ErrorCode::InvalidArgument, "one pinned dimension per mode required");
    const auto cov = solve_state_covariance(gbs);
    for (std::size_t q = 0; q < d; ++q) {
      Matrix w = Matrix::Zero(n, n);
      for (std::size_t q2 = 0; q2 < d; ++q2)
        if (letter[q][q2] >= 0) w += cov[static_cast<std::size_t>(letter[q][q2])];
      basis[q] = dominant_basis(symmetrize(w), (*options.mode_dims)[q]);
    }
  } else {
    for (std::size_t q = 0; q < d; ++q) {
      Matrix gen(n, 0);
      for (std::size_t q1 = 0; q1 < d; ++q1) {
        if (letter[q1][q] < 0) continue;
        const Matrix k = gbs.K[static_cast<std::size_t>(letter[q1][q])] * noise_sel[q1].transpose();
        Matrix next(n, gen.cols() + k.cols());
        next << gen, k;
        gen = std::move(next);
      }
      basis[q] = orthonormal_basis(gen, options.eps);
    }
    const std::size_t depth = options.word_length.value_or(static_cast<std::size_t>(n)) + 1;
    for (std::size_t it = 0; it < depth; ++it) {
      bool grew = false;
      std::vector<Matrix> next(d);
      for (std::size_t q = 0; q < d; ++q) {
        Matrix gen = basis[q];
        for (std::size_t q1 = 0; q1 < d; ++q1) {
          if (letter[q1][q] < 0 || basis[q1].cols() == 0) continue;
          const Matrix img = gbs.A[static_cast<std::size_t>(letter[q1][q])] * basis[q1];
          Matrix stacked(n, gen.cols() + img.cols());
          stacked << gen, img;
          gen = std::move(stacked);
        }
        next[q] = orthonormal_basis(gen, options.eps);
        grew = grew || next[q].cols() != basis[q].cols();
      }
      basis = std::move(next);
      if (!grew) break;
    }
  }

  GjmlsModel h;
  h.chain = chain;
  for (std::size_t q = 0; q < d; ++q) h.dims.push_back(basis[q].cols());
  for (std::size_t q1 = 0; q1 < d; ++q1)
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      const int s = letter[q1][q2];
      if (s < 0) {
        h.M.push_back(Matrix::Zero(h.dims[q2], h.dims[q1]));
        h.B.push_back(Matrix::Zero(h.dims[q2], m));
        continue;
      }
      h.M.push_back(basis[q2].transpose() * gbs.A[static_cast<std::size_t>(s)] * basis[q1]);
      h.B.push_back(basis[q2].transpose() * gbs.K[static_cast<std::size_t>(s)] * noise_sel[q1].transpose());
    }
  for (std::size_t q = 0; q < d; ++q) {
    h.C.push_back(out_sel[q] * gbs.C * basis[q]);
    h.D.push_back(out_sel[q] * gbs.D * noise_sel[q].transpose());
    Matrix acc = Matrix::Zero(m, m);
    int count = 0;
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      const int s = letter[q][q2];
      if (s < 0) continue;
      acc += noise_sel[q] * gbs.Q[static_cast<std::size_t>(s)] * noise_sel[q].transpose() / gbs.weights[static_cast<Letter>(s)];
      ++count;
    }
    h.Q.push_back(symmetrize(count > 0 ? Matrix(acc / count) : acc));
  }
  return h;
}

std::vector<Matrix> gjmls_g(const GjmlsModel& model, const std::vector<Matrix>& p) {
  const std::size_t d = model.states();
  std::vector<Matrix> g;
  for (std::size_t q1 = 0; q1 < d; ++q1)
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      const double w = model.prob(q1, q2);
      if (w <= 0.0) {
        g.push_back(Matrix::Zero(model.dims[q2], model.outputs()));
        continue;
      }
      g.push_back(w * (model.m(q1, q2) * p[q1] * model.C[q1].transpose() +
                       model.b(q1, q2) * model.Q[q1] * model.D[q1].transpose()));
    }
  return g;
}

namespace {

void append_cols(Matrix& dst, const Matrix& block) {
  Matrix out(block.rows(), dst.cols() + block.cols());
  out << dst, block;
  dst = std::move(out);
}

void append_rows(Matrix& dst, const Matrix& block) {
  Matrix out(dst.rows() + block.rows(), block.cols());
  out << dst, block;
  dst = std::move(out);
}

}  // namespace

ModeMatrices gjmls_reach(const GjmlsModel& model, double eps) {
  const auto p = gjmls_state_covariance(model);
  const auto g = gjmls_g(model, p);
  const std::size_t d = model.states();
  const auto depth = static_cast<std::size_t>(model.total_dim());
  ModeMatrices out;
  for (std::size_t q = 0; q < d; ++q) out.per_mode.push_back(Matrix(model.dims[q], 0));
  struct Item {
    std::size_t mode;
    Matrix value;
    std::size_t length;
  };
  std::vector<Item> stack;
  for (std::size_t q0 = 0; q0 < d; ++q0)
    for (std::size_t q1 = 0; q1 < d; ++q1)
      if (model.prob(q0, q1) > 0.0) stack.push_back({q1, g[q0 * d + q1], 1});
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    append_cols(out.per_mode[it.mode], it.value);
    if (it.length >= depth) continue;
    for (std::size_t q2 = 0; q2 < d; ++q2)
      if (model.prob(it.mode, q2) > 0.0) stack.push_back({q2, model.m(it.mode, q2) * it.value, it.length + 1});
  }
  out.full_rank = true;
  for (std::size_t q = 0; q < d; ++q)
    out.full_rank = out.full_rank && numeric_rank(out.per_mode[q], eps) == model.dims[q];
  return out;
}

ModeMatrices gjmls_obs(const GjmlsModel& model, double eps) {
  model.validate();
  const std::size_t d = model.states();
  const auto depth = static_cast<std::size_t>(model.total_dim());
  ModeMatrices out;
  for (std::size_t q = 0; q < d; ++q) {
    Matrix o(0, model.dims[q]);
    struct Item {
      std::size_t mode;
      Matrix prod;
      std::size_t length;
    };
    std::vector<Item> stack{{q, Matrix::Identity(model.dims[q], model.dims[q]), 0}};
    while (!stack.empty()) {
      Item it = std::move(stack.back());
      stack.pop_back();
      append_rows(o, model.C[it.mode] * it.prod);
      if (it.length >= depth) continue;
      for (std::size_t q2 = 0; q2 < d; ++q2)
        if (model.prob(it.mode, q2) > 0.0) stack.push_back({q2, model.m(it.mode, q2) * it.prod, it.length + 1});
    }
    out.per_mode.push_back(std::move(o));
  }
  out.full_rank = true;
  for (std::size_t q = 0; q < d; ++q)
    out.full_rank = out.full_rank && numeric_rank(out.per_mode[q], eps) == model.dims[q];
  return out;
}

std::vector<Matrix> gjmls_isomorphism(const GjmlsModel& h1, const GjmlsModel& h2, double tol, double eps) {
  const std::size_t d = h1.states();
  if (h2.states() != d || (h1.chain.P - h2.chain.P).cwiseAbs().maxCoeff() > 1e-12)
    fail(ErrorCode::NotIsomorphic, "Markov chains differ");
  if (h1.outputs() != h2.outputs()) fail(ErrorCode::NotIsomorphic, "output dimensions differ");
  if (h1.dims != h2.dims) fail(ErrorCode::NotIsomorphic, "mode dimension profiles differ");
  for (const GjmlsModel* h : {&h1, &h2})
    if (!gjmls_reach(*h, eps).full_rank || !gjmls_obs(*h, eps).full_rank)
      fail(ErrorCode::NotMinimal, "both models must be reachable and observable");

  const auto g1 = gbs_from_gjmls(h1);
  const auto g2 = gbs_from_gjmls(h2);
  const Representation r1 = associated_representation(g1.gbs);
  const Representation r2 = associated_representation(g2.gbs);
  const Matrix t = find_isomorphism(r1, r2, tol, eps);

  std::vector<Matrix> tq;
  Matrix block_diag = Matrix::Zero(t.rows(), t.cols());
  for (std::size_t q = 0; q < d; ++q) {
    const Index o = h1.offset(q), k = h1.dims[q];
    tq.push_back(t.block(o, o, k, k));
    block_diag.block(o, o, k, k) = tq.back();
  }
  if ((t - block_diag).norm() > tol * std::max(1.0, t.norm())) fail(ErrorCode::NotIsomorphic, "isomorphism is not mode-diagonal");

  const auto p1 = gjmls_state_covariance(h1);
  const auto p2 = gjmls_state_covariance(h2);
  const auto gg1 = gjmls_g(h1, p1);
  const auto gg2 = gjmls_g(h2, p2);
  for (std::size_t q1 = 0; q1 < d; ++q1) {
    if (relative_gap(h1.C[q1], h2.C[q1] * tq[q1]) > tol) fail(ErrorCode::NotIsomorphic, "C relation fails");
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      if (h1.prob(q1, q2) <= 0.0) continue;
      if (relative_gap(tq[q2] * h1.m(q1, q2), h2.m(q1, q2) * tq[q1]) > tol) fail(ErrorCode::NotIsomorphic, "M relation fails");
      if (relative_gap(tq[q2] * gg1[q1 * d + q2], gg2[q1 * d + q2]) > tol) fail(ErrorCode::NotIsomorphic, "G relation fails");
    }
  }
  return tq;
}

GjmlsModel transform(const GjmlsModel& model, const std::vector<Matrix>& t) {
  GjmlsModel out = model;
  const std::size_t d = model.states();
  std::vector<Matrix> ti;
  for (const auto& m : t) ti.push_back(m.inverse());
  for (std::size_t q1 = 0; q1 < d; ++q1) {
    out.C[q1] = model.C[q1] * ti[q1];
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      out.M[q1 * d + q2] = t[q2] * model.m(q1, q2) * ti[q1];
      out.B[q1 * d + q2] = t[q2] * model.b(q1, q2);
    }
  }
  return out;
}

CovarianceTable gjmls_exact_covariances(const GjmlsModel& model, std::size_t lambda_length, std::size_t tee_length) {
  const GbsModel g = plain_output(gbs_from_gjmls(model));
  const auto p = solve_state_covariance(g);
  return exact_covariance_table(associated_representation(g, p), exact_t_diag(g, p), g.weights, g.language,
                                lambda_length, tee_length);
}

GjmlsIdentification identify_gjmls(const TimeSeries& ts, std::size_t states, Index n, std::size_t past,
                                   const RealizeConfig& config, std::optional<std::vector<Index>> mode_dims) {
  if (!ts.theta_form()) fail(ErrorCode::InvalidArgument, "GJMLS identification needs a mode path");
  GjmlsIdentification out{{}, estimate_pair_weights(ts.theta, states), {}};
  const auto& pw = out.pairs;
  out.realization = realize_from_data(ts, n, past, pw.alphabet, pw.weights, pw.language, config);
  Matrix p = Matrix::Zero(static_cast<Index>(states), static_cast<Index>(states));
  for (std::size_t s = 0; s < pw.alphabet.size(); ++s) {
    const auto pr = *parse_pair_letter(pw.alphabet.name(static_cast<Letter>(s)));
    p(static_cast<Index>(pr.first), static_cast<Index>(pr.second)) = pw.weights[static_cast<Letter>(s)];
  }
  for (Index q = 0; q < p.rows(); ++q)
    if (p.row(q).sum() > 0.0) p.row(q) /= p.row(q).sum();
  GjmlsFromGbsOptions opts;
  opts.blocked_output = false;
  opts.blocked_noise = false;
  opts.mode_dims = std::move(mode_dims);
  opts.eps = config.eps_rank;
  out.model = gjmls_from_gbs(out.realization.model.to_gbs(), MarkovChain::from_transitions(p), opts);
  return out;
}

}  // namespace jmlsr
