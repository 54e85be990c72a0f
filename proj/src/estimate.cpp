#include "jmlsr/estimate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "jmlsr/error.hpp"
#include "jmlsr/kernels.hpp"

namespace jmlsr {

namespace {

constexpr Index kChunk = 4096;

template <class Fn>
void parallel_for(std::size_t tasks, unsigned threads, Fn fn) {
  if (threads <= 1 || tasks <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) fn(i, 0u);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < tasks; i += workers) fn(i, w);
    });
  for (auto& t : pool) t.join();
}

/// g(s) = prod_r u_{w_r}(s + r) for s = 0 .. len-1.
void word_gate(const Matrix& u, const Word& w, Index len, std::vector<double>& g) {
  g.resize(static_cast<std::size_t>(len));
  if (w.empty()) {
    std::fill(g.begin(), g.end(), 1.0);
    return;
  }
  const double* first = u.col(w[0]).data();
  std::copy(first, first + len, g.begin());
  for (std::size_t r = 1; r < w.size(); ++r)
    kernels::mul(g.data(), u.col(w[r]).data() + r, g.data(), static_cast<std::size_t>(len));
}

Matrix lambda_from(const Matrix& y, const Matrix& u, const Word& w, double weight, std::vector<double>& g) {
  const Index t_len = y.rows(), p = y.cols(), k = static_cast<Index>(w.size());
  const Index m = t_len - k;
  word_gate(u, w, m, g);
  Matrix out(p, p);
  const double scale = 1.0 / (static_cast<double>(m) * std::sqrt(weight));
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      out(i, j) = kernels::dot3(y.col(i).data() + k, y.col(j).data(), g.data(), static_cast<std::size_t>(m)) * scale;
  return out;
}

void require_samples(Index t_len, std::size_t k) {
  if (t_len <= static_cast<Index>(k) + 10)
    fail(ErrorCode::InsufficientData, "need more than " + std::to_string(k + 10) + " samples");
}

}  // namespace

Matrix CovarianceTable::lambda_at(const Word& w) const {
  if (!is_admissible(w, language)) return Matrix::Zero(outputs, outputs);
  auto it = lambda.find(w);
  if (it == lambda.end())
    fail(ErrorCode::MissingCovariance, "Lambda missing for word '" + to_string(w, alphabet) + "'");
  return it->second;
}

Matrix CovarianceTable::tee_at(const Word& v, const Word& w) const {
  if (!is_admissible(v, language) || !is_admissible(w, language)) return Matrix::Zero(outputs, outputs);
  if (auto it = tee.find({v, w}); it != tee.end()) return it->second;
  if (auto it = tee.find({w, v}); it != tee.end()) return it->second.transpose();
  fail(ErrorCode::MissingCovariance,
       "T missing for words '" + to_string(v, alphabet) + "', '" + to_string(w, alphabet) + "'");
}

std::size_t CovarianceTable::max_lambda_length() const {
  std::size_t k = 0;
  for (const auto& [w, m] : lambda) k = std::max(k, w.size());
  return k;
}

std::size_t CovarianceTable::max_tee_length() const {
  std::size_t k = 0;
  for (const auto& [key, m] : tee) k = std::max({k, key.first.size(), key.second.size()});
  return k;
}

CovarianceSource::CovarianceSource(const CovarianceTable& table)
    : table_(table), labels_(associated_labels(table.alphabet, table.outputs)) {}

Matrix CovarianceSource::coefficients(const Word& w) const {
  const Index p = table_.outputs;
  const std::size_t d = table_.alphabet.size();
  Matrix out(p, p * static_cast<Index>(d));
  for (std::size_t s = 0; s < d; ++s) out.middleCols(static_cast<Index>(s) * p, p) = table_.lambda_at(Word::letter(static_cast<Letter>(s)) + w);
  return out;
}

Matrix input_matrix(const TimeSeries& ts, const Alphabet& alphabet) {
  if (ts.theta_form()) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& name : alphabet.names()) {
      auto pr = parse_pair_letter(name);
      if (!pr) fail(ErrorCode::InconsistentAlphabet, "letter '" + name + "' is not a transition pair");
      pairs.push_back(*pr);
    }
    return pair_inputs(ts.theta, pairs);
  }
  if (!(ts.input_alphabet == alphabet)) fail(ErrorCode::InconsistentAlphabet, "series inputs do not match the alphabet");
  return ts.u;
}

Vector lagged_product(const TimeSeries& ts, const Word& w, Index t, const LetterWeights& weights,
                      const AdmissibleLanguage& language, const Alphabet& alphabet) {
  const Index k = static_cast<Index>(w.size());
  if (t < k || t >= ts.horizon()) fail(ErrorCode::OutOfRange, "lagged product index out of range");
  if (!is_admissible(w, language)) return Vector::Zero(ts.outputs());
  const Matrix u = input_matrix(ts, alphabet);
  double gate = 1.0;
  for (Index r = 0; r < k; ++r) gate *= u(t - k + r, w[static_cast<std::size_t>(r)]);
  return ts.y.row(t - k).transpose() * (gate / std::sqrt(path_weight(w, weights, language)));
}

Matrix estimate_lambda(const TimeSeries& ts, const Word& w, const LetterWeights& weights,
                       const AdmissibleLanguage& language, const Alphabet& alphabet) {
  require_samples(ts.horizon(), w.size());
  if (!is_admissible(w, language)) return Matrix::Zero(ts.outputs(), ts.outputs());
  std::vector<double> g;
  return lambda_from(ts.y, input_matrix(ts, alphabet), w, path_weight(w, weights, language), g);
}

Matrix estimate_T(const TimeSeries& ts, const Word& v, const Word& w, const LetterWeights& weights,
                  const AdmissibleLanguage& language, const Alphabet& alphabet) {
  const Index kv = static_cast<Index>(v.size()), kw = static_cast<Index>(w.size());
  const Index top = std::max(kv, kw);
  require_samples(ts.horizon(), static_cast<std::size_t>(top));
  const Index p = ts.outputs();
  if (!is_admissible(v, language) || !is_admissible(w, language)) return Matrix::Zero(p, p);
  const Matrix u = input_matrix(ts, alphabet);
  const Index t_len = ts.horizon(), m = t_len - top;
  std::vector<double> gv, gw, hv(static_cast<std::size_t>(m)), hw(static_cast<std::size_t>(m));
  word_gate(u, v, t_len - kv, gv);
  word_gate(u, w, t_len - kw, gw);
  const double scale =
      1.0 / (static_cast<double>(m) * std::sqrt(path_weight(v, weights, language) * path_weight(w, weights, language)));
  Matrix out(p, p);
  for (Index i = 0; i < p; ++i) {
    kernels::mul(ts.y.col(i).data() + (top - kv), gv.data() + (top - kv), hv.data(), static_cast<std::size_t>(m));
    for (Index j = 0; j < p; ++j) {
      kernels::mul(ts.y.col(j).data() + (top - kw), gw.data() + (top - kw), hw.data(), static_cast<std::size_t>(m));
      out(i, j) = kernels::dot(hv.data(), hw.data(), static_cast<std::size_t>(m)) * scale;
    }
  }
  if (v == w) out = symmetrize(out);
  return out;
}

CovarianceTable estimate_covariance_table(const TimeSeries& ts, const Alphabet& alphabet, const LetterWeights& weights,
                                          const AdmissibleLanguage& language, const EstimateOptions& options) {
  ts.validate();
  require_samples(ts.horizon(), std::max(options.lambda_length, options.tee_length));
  if (weights.size() != alphabet.size() || language.alphabet_size() != alphabet.size())
    fail(ErrorCode::InconsistentAlphabet, "weights and language must match the alphabet");
  const Matrix u = input_matrix(ts, alphabet);
  const Matrix& y = ts.y;
  const Index t_len = ts.horizon(), p = ts.outputs();
  const unsigned threads = std::max(1u, options.threads);

  CovarianceTable table;
  table.alphabet = alphabet;
  table.weights = weights;
  table.language = language;
  table.outputs = p;
  table.horizon = t_len;

  const auto lambda_words = enumerate_admissible(language, 1, options.lambda_length);
  std::vector<Matrix> lambdas(lambda_words.size());
  std::vector<std::vector<double>> scratch(threads);
  parallel_for(lambda_words.size(), threads, [&](std::size_t i, unsigned worker) {
    lambdas[i] = lambda_from(y, u, lambda_words[i], path_weight(lambda_words[i], weights, language), scratch[worker]);
  });
  for (std::size_t i = 0; i < lambda_words.size(); ++i) table.lambda.emplace(lambda_words[i], std::move(lambdas[i]));

  const auto tee_words = enumerate_admissible(language, 1, options.tee_length);
  const std::size_t nw = tee_words.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < nw; ++a)
    for (std::size_t b = a; b < nw; ++b) pairs.emplace_back(a, b);
  std::vector<Matrix> acc(pairs.size(), Matrix::Zero(p, p));

  parallel_for(threads, threads, [&](std::size_t worker, unsigned) {
    // z buffers for every word on the current chunk of time indices
    std::vector<double> z(nw * static_cast<std::size_t>(p * kChunk));
    std::vector<double> gate(static_cast<std::size_t>(kChunk));
    auto zbuf = [&](std::size_t a, Index i) { return z.data() + (a * static_cast<std::size_t>(p) + static_cast<std::size_t>(i)) * kChunk; };
    for (Index t0 = 1; t0 < t_len; t0 += kChunk) {
      const Index t1 = std::min(t_len, t0 + kChunk);
      for (std::size_t a = 0; a < nw; ++a) {
        const Word& w = tee_words[a];
        const Index k = static_cast<Index>(w.size());
        const Index lo = std::max(t0, k);
        const Index len = std::max<Index>(0, t1 - lo);
        for (Index i = 0; i < p; ++i) std::fill(zbuf(a, i), zbuf(a, i) + (lo - t0), 0.0);
        if (len == 0) continue;
        const Index s0 = lo - k;
        std::copy(u.col(w[0]).data() + s0, u.col(w[0]).data() + s0 + len, gate.begin());
        for (std::size_t r = 1; r < w.size(); ++r)
          kernels::mul(gate.data(), u.col(w[r]).data() + s0 + static_cast<Index>(r), gate.data(), static_cast<std::size_t>(len));
        for (Index i = 0; i < p; ++i)
          kernels::mul(y.col(i).data() + s0, gate.data(), zbuf(a, i) + (lo - t0), static_cast<std::size_t>(len));
      }
      for (std::size_t q = worker; q < pairs.size(); q += threads) {
        const auto [a, b] = pairs[q];
        const Index top = static_cast<Index>(std::max(tee_words[a].size(), tee_words[b].size()));
        const Index lo = std::max(t0, top);
        if (lo >= t1) continue;
        const auto len = static_cast<std::size_t>(t1 - lo);
        for (Index i = 0; i < p; ++i)
          for (Index j = 0; j < p; ++j) acc[q](i, j) += kernels::dot(zbuf(a, i) + (lo - t0), zbuf(b, j) + (lo - t0), len);
      }
    }
  });

  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [a, b] = pairs[q];
    const Word& v = tee_words[a];
    const Word& w = tee_words[b];
    const Index m = t_len - static_cast<Index>(std::max(v.size(), w.size()));
    Matrix t = acc[q] / (static_cast<double>(m) * std::sqrt(path_weight(v, weights, language) * path_weight(w, weights, language)));
    if (a == b) t = symmetrize(t);
    table.tee.emplace(std::make_pair(v, w), std::move(t));
  }
  return table;
}

CovarianceTable exact_covariance_table(const Representation& rep, const std::vector<Matrix>& t_diag,
                                       const LetterWeights& weights, const AdmissibleLanguage& language,
                                       std::size_t lambda_length, std::size_t tee_length) {
  const Index p = rep.outputs();
  CovarianceTable table;
  table.alphabet = rep.alphabet;
  table.weights = weights;
  table.language = language;
  table.outputs = p;
  table.normalization = "exact";
  auto lambda_of = [&](const Word& w) -> Matrix {
    const Letter s = w.front();
    return rep.C * word_matrix(rep, w.drop_front()) * rep.B.middleCols(static_cast<Index>(s) * p, p);
  };
  for (const Word& w : enumerate_admissible(language, 1, std::max(lambda_length, tee_length)))
    if (w.size() <= lambda_length) table.lambda.emplace(w, lambda_of(w));

  std::function<Matrix(const Word&, const Word&)> tee = [&](const Word& v, const Word& w) -> Matrix {
    if (v.back() != w.back()) return Matrix::Zero(p, p);
    const Letter s = v.back();
    if (v.size() == 1 && w.size() == 1) return t_diag[s];
    if (v.size() == 1) return lambda_of(w.drop_back());
    if (w.size() == 1) return lambda_of(v.drop_back()).transpose();
    return tee(v.drop_back(), w.drop_back());
  };
  const auto words = enumerate_admissible(language, 1, tee_length);
  for (std::size_t a = 0; a < words.size(); ++a)
    for (std::size_t b = a; b < words.size(); ++b) {
      Matrix t = tee(words[a], words[b]);
      if (a == b) t = symmetrize(t);
      table.tee.emplace(std::make_pair(words[a], words[b]), std::move(t));
    }
  return table;
}

HankelBlock build_empirical_hankel(const CovarianceTable& table, std::size_t row_n, std::size_t col_n) {
  return build_hankel(CovarianceSource(table), row_n, col_n);
}

PairWeightEstimate estimate_pair_weights(const std::vector<int>& theta, std::size_t states) {
  const Index d = static_cast<Index>(states);
  Matrix counts = Matrix::Zero(d, d);
  for (std::size_t t = 0; t + 1 < theta.size(); ++t) {
    if (theta[t] < 0 || theta[t] >= d || theta[t + 1] < 0 || theta[t + 1] >= d)
      fail(ErrorCode::InvalidArgument, "mode path contains an unknown state");
    counts(theta[t], theta[t + 1]) += 1.0;
  }
  PairWeightEstimate est;
  est.transitions = Matrix::Zero(d, d);
  const double floor = 10.0 / static_cast<double>(theta.size());
  std::vector<std::string> names;
  std::vector<double> w;
  std::vector<std::pair<std::size_t, std::size_t>> kept;
  for (Index a = 0; a < d; ++a) {
    const double row = counts.row(a).sum();
    if (row > 0) est.transitions.row(a) = counts.row(a) / row;
    for (Index b = 0; b < d; ++b) {
      if (counts(a, b) == 0.0) continue;
      const std::string name = pair_letter_name(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      if (est.transitions(a, b) < floor) {
        est.unidentifiable.push_back(name);
        continue;
      }
      names.push_back(name);
      w.push_back(est.transitions(a, b));
      kept.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
  }
  if (names.empty()) fail(ErrorCode::InsufficientData, "no identifiable transitions in the mode path");
  est.alphabet = Alphabet(names);
  est.weights = LetterWeights(w);
  std::vector<std::pair<Letter, Letter>> lp;
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = 0; j < kept.size(); ++j)
      if (kept[i].second == kept[j].first) lp.emplace_back(static_cast<Letter>(i), static_cast<Letter>(j));
  est.language = AdmissibleLanguage::from_pairs(kept.size(), lp);
  return est;
}

RealizeResult realize_from_table(const CovarianceTable& table, Index n, std::size_t past, const RealizeConfig& config) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "target dimension must be positive");
  if (past < 1) fail(ErrorCode::InvalidArgument, "past window N must be at least 1");
  const Index p = table.outputs;
  const std::size_t d = table.alphabet.size();
  const auto nn = static_cast<std::size_t>(n);

  RealizeResult result;
  auto& diag = result.diagnostics;
  diag.samples = table.horizon;

  if (table.max_lambda_length() < 2 * nn + 2) {
    const std::size_t have = table.max_lambda_length();
    if (have >= 2) {
      const std::size_t k = (have - 2) / 2;
      if (numeric_rank(build_empirical_hankel(table, k + 1, k).matrix, config.eps_rank) < n)
        fail(ErrorCode::RankDeficient, "Hankel rank below requested dimension " + std::to_string(n));
    }
    fail(ErrorCode::MissingCovariance, "dimension " + std::to_string(n) + " needs Lambda up to length " +
                                           std::to_string(2 * nn + 2));
  }
  const HankelBlock h = build_empirical_hankel(table, nn + 1, nn);
  diag.hankel_singular_values = Eigen::BDCSVD<Matrix>(h.matrix).singularValues();
  const Selection sel = config.selection ? *config.selection : choose_selection(h, n, config.eps_rank, nn);
  diag.selection = sel;
  const Representation rep = ho_kalman(h, sel, config.eps_rank);
  {
    Matrix minor(n, n);
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b) {
        const auto& rk = sel.rows[static_cast<std::size_t>(a)];
        const auto& ck = sel.cols[static_cast<std::size_t>(b)];
        minor(a, b) = *h.value(ck.word + rk.word, rk.index, ck.index);
      }
    const Vector s = Eigen::JacobiSVD<Matrix>(minor).singularValues();
    diag.hankel_condition = s(0) / s(n - 1);
  }

  const auto words = enumerate_admissible(table.language, 1, past);
  diag.regression_words = words.size();
  const Index big = static_cast<Index>(words.size()) * p;
  Matrix gram(big, big);
  Matrix lam(n, big);
  for (std::size_t a = 0; a < words.size(); ++a) {
    for (std::size_t b = 0; b < words.size(); ++b)
      gram.block(static_cast<Index>(a) * p, static_cast<Index>(b) * p, p, p) = table.tee_at(words[a], words[b]);
    const Word& w = words[a];
    lam.middleCols(static_cast<Index>(a) * p, p) =
        word_matrix(rep, w.drop_front()) * rep.B.middleCols(static_cast<Index>(w.front()) * p, p);
  }
  gram = symmetrize(gram);
  if (config.ridge > 0.0) gram += config.ridge * Matrix::Identity(big, big);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const Vector& ev = es.eigenvalues();
  diag.gram_eigenvalues = ev.reverse();
  if (!(ev(big - 1) > 0.0) || ev(0) <= config.eps_rank * ev(big - 1))
    fail(ErrorCode::SingularGram, "regression Gram matrix is not invertible at tolerance");
  diag.gram_condition = ev(big - 1) / ev(0);
  const Matrix alpha = lam * es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();

  WeakRealization& wr = result.model;
  wr.alphabet = table.alphabet;
  wr.weights = table.weights;
  wr.language = table.language;
  wr.C = rep.C;
  wr.D = Matrix::Identity(p, p);
  for (std::size_t s = 0; s < d; ++s) {
    const auto l = static_cast<Letter>(s);
    const double ps = table.weights[l];
    Vector sel_mask = Vector::Zero(big);
    for (std::size_t a = 0; a < words.size(); ++a)
      if (table.language.allows(words[a].back(), l)) sel_mask.segment(static_cast<Index>(a) * p, p).setOnes();
    const Matrix ps_mat = symmetrize(ps * lam * sel_mask.asDiagonal() * alpha.transpose());
    const Matrix t_ss = table.tee_at(Word::letter(l), Word::letter(l));
    const Matrix g_s = rep.B.middleCols(static_cast<Index>(s) * p, p);
    wr.A.push_back(rep.A[s] / std::sqrt(ps));
    wr.P.push_back(ps_mat);
    wr.Q.push_back(symmetrize(ps * t_ss - rep.C * ps_mat * rep.C.transpose()));
    wr.K.push_back(innovation_gain(g_s, rep.A[s], ps_mat, rep.C, t_ss, ps, config.eps_rank));
  }
  return result;
}

RealizeResult realize_from_data(const TimeSeries& ts, Index n, std::size_t past, const Alphabet& alphabet,
                                const LetterWeights& weights, const AdmissibleLanguage& language,
                                const RealizeConfig& config) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "target dimension must be positive");
  EstimateOptions opts;
  opts.lambda_length = 2 * static_cast<std::size_t>(n) + 2;
  opts.tee_length = past;
  opts.threads = config.threads;
  const CovarianceTable table = estimate_covariance_table(ts, alphabet, weights, language, opts);
  return realize_from_table(table, n, past, config);
}

}  // namespace jmlsr
