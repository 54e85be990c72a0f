#include "jmlsr/repr.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <deque>
#include <unordered_map>

#include "jmlsr/error.hpp"

namespace jmlsr {

void Representation::validate() const {
  const Index n = dim();
  if (A.size() != alphabet.size()) fail(ErrorCode::InvalidArgument, "one A matrix per letter required");
  for (const auto& a : A)
    if (a.rows() != n || a.cols() != n) fail(ErrorCode::InvalidArgument, "A matrices must be n x n");
  if (B.rows() != n) fail(ErrorCode::InvalidArgument, "B vectors must have length n");
  if (B.cols() == 0) fail(ErrorCode::InvalidArgument, "index set J must be nonempty");
  if (index_labels.size() != static_cast<std::size_t>(B.cols()))
    fail(ErrorCode::InvalidArgument, "index labels must match B columns");
}

std::vector<std::string> numbered_labels(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= k; ++i) out.push_back(std::to_string(i));
  return out;
}

Matrix word_matrix(const std::vector<Matrix>& a, Index n, const Word& w) {
  Matrix m = Matrix::Identity(n, n);
  for (Letter l : w.letters()) m = a[l] * m;
  return m;
}

Matrix word_matrix(const Representation& rep, const Word& w) { return word_matrix(rep.A, rep.dim(), w); }

Vector series_coefficient(const Representation& rep, std::size_t j, const Word& w) {
  Vector x = rep.B.col(static_cast<Index>(j));
  for (Letter l : w.letters()) x = rep.A[l] * x;
  return rep.C * x;
}

Matrix RepresentationSource::coefficients(const Word& w) const {
  Matrix x = rep_.B;
  for (Letter l : w.letters()) x = rep_.A[l] * x;
  return rep_.C * x;
}

void HankelBlock::index() {
  row_map_.clear();
  col_map_.clear();
  for (std::size_t r = 0; r < rows.size(); ++r) row_map_.emplace(rows[r], static_cast<Index>(r));
  for (std::size_t c = 0; c < cols.size(); ++c) col_map_.emplace(cols[c], static_cast<Index>(c));
}

std::optional<Index> HankelBlock::row_of(const HankelKey& key) const {
  auto it = row_map_.find(key);
  if (it == row_map_.end()) return std::nullopt;
  return it->second;
}

std::optional<Index> HankelBlock::col_of(const HankelKey& key) const {
  auto it = col_map_.find(key);
  if (it == col_map_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> HankelBlock::value(const Word& w, Index i, Index j) const {
  for (std::size_t k = 0; k <= w.size(); ++k) {
    auto r = row_of({w.drop_front(k), i});
    if (!r) continue;
    auto c = col_of({w.drop_back(w.size() - k), j});
    if (c) return matrix(*r, *c);
  }
  return std::nullopt;
}

namespace {

HankelBlock hankel_shell(const Alphabet& alphabet, std::vector<std::string> labels, Index p,
                         const std::vector<Word>& row_words, const std::vector<Word>& col_words) {
  HankelBlock h;
  h.alphabet = alphabet;
  h.index_labels = std::move(labels);
  h.outputs = p;
  const Index nj = static_cast<Index>(h.index_labels.size());
  for (const Word& u : row_words)
    for (Index i = 0; i < p; ++i) h.rows.push_back({u, i});
  for (const Word& v : col_words)
    for (Index j = 0; j < nj; ++j) h.cols.push_back({v, j});
  h.index();
  return h;
}

}  // namespace

HankelBlock build_hankel(const SeriesSource& src, std::size_t row_n, std::size_t col_n) {
  const auto row_words = enumerate_words(src.alphabet(), row_n);
  const auto col_words = enumerate_words(src.alphabet(), col_n);
  const Index p = src.output_dim();
  HankelBlock h = hankel_shell(src.alphabet(), src.index_labels(), p, row_words, col_words);
  const Index nj = static_cast<Index>(h.index_labels.size());
  h.matrix.resize(static_cast<Index>(h.rows.size()), static_cast<Index>(h.cols.size()));
  std::unordered_map<Word, Matrix, WordHash> cache;
  for (std::size_t c = 0; c < col_words.size(); ++c) {
    for (std::size_t r = 0; r < row_words.size(); ++r) {
      const Word vu = col_words[c] + row_words[r];
      auto it = cache.find(vu);
      if (it == cache.end()) it = cache.emplace(vu, src.coefficients(vu)).first;
      h.matrix.block(static_cast<Index>(r) * p, static_cast<Index>(c) * nj, p, nj) = it->second;
    }
  }
  return h;
}

HankelBlock build_hankel(const Representation& rep, std::size_t row_n, std::size_t col_n) {
  const auto row_words = enumerate_words(rep.alphabet, row_n);
  const auto col_words = enumerate_words(rep.alphabet, col_n);
  const Index p = rep.outputs(), n = rep.dim(), nj = static_cast<Index>(rep.indices());
  HankelBlock h = hankel_shell(rep.alphabet, rep.index_labels, p, row_words, col_words);
  Matrix o(static_cast<Index>(row_words.size()) * p, n);
  for (std::size_t r = 0; r < row_words.size(); ++r)
    o.middleRows(static_cast<Index>(r) * p, p) = rep.C * word_matrix(rep, row_words[r]);
  Matrix w(n, static_cast<Index>(col_words.size()) * nj);
  for (std::size_t c = 0; c < col_words.size(); ++c)
    w.middleCols(static_cast<Index>(c) * nj, nj) = word_matrix(rep, col_words[c]) * rep.B;
  h.matrix = o * w;
  return h;
}

Selection choose_selection(const HankelBlock& h, Index r, double eps, std::size_t max_len) {
  if (r <= 0) fail(ErrorCode::InvalidArgument, "selection size must be positive");
  std::vector<Index> cand_rows, cand_cols;
  for (std::size_t i = 0; i < h.rows.size(); ++i)
    if (h.rows[i].word.size() <= max_len) cand_rows.push_back(static_cast<Index>(i));
  for (std::size_t j = 0; j < h.cols.size(); ++j)
    if (h.cols[j].word.size() <= max_len) cand_cols.push_back(static_cast<Index>(j));
  const Matrix sub = h.matrix(cand_rows, cand_cols);
  if (numeric_rank(sub, eps) < r)
    fail(ErrorCode::RankDeficient, "Hankel rank below requested dimension " + std::to_string(r));

  Eigen::ColPivHouseholderQR<Matrix> qr_cols(sub);
  std::vector<Index> sel_cols;
  for (Index k = 0; k < r; ++k) sel_cols.push_back(qr_cols.colsPermutation().indices()(k));
  const Matrix tall = sub(Eigen::all, sel_cols);
  Eigen::ColPivHouseholderQR<Matrix> qr_rows(tall.transpose());
  std::vector<Index> sel_rows;
  for (Index k = 0; k < r; ++k) sel_rows.push_back(qr_rows.colsPermutation().indices()(k));
  std::sort(sel_cols.begin(), sel_cols.end());
  std::sort(sel_rows.begin(), sel_rows.end());

  const Matrix minor = sub(sel_rows, sel_cols);
  Eigen::JacobiSVD<Matrix> svd(minor);
  Eigen::JacobiSVD<Matrix> svd_all(sub);
  if (!(svd.singularValues()(r - 1) > eps * svd_all.singularValues()(0)))
    fail(ErrorCode::RankDeficient, "no well-conditioned selection of size " + std::to_string(r));

  Selection sel;
  for (Index i : sel_rows) sel.rows.push_back(h.rows[static_cast<std::size_t>(cand_rows[i])]);
  for (Index j : sel_cols) sel.cols.push_back(h.cols[static_cast<std::size_t>(cand_cols[j])]);
  return sel;
}

Representation ho_kalman(const HankelBlock& h, const Selection& sel, double eps) {
  const Index r = static_cast<Index>(sel.rows.size());
  if (sel.cols.size() != sel.rows.size()) fail(ErrorCode::InvalidArgument, "selection must be square");
  const Index nj = static_cast<Index>(h.index_labels.size());
  auto lookup = [&](const Word& w, Index i, Index j) {
    auto v = h.value(w, i, j);
    if (!v) fail(ErrorCode::InvalidArgument, "Hankel block lacks entry for a shifted word of length " +
                                                 std::to_string(w.size()));
    return *v;
  };

  Matrix hab(r, r);
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < r; ++b) {
      const auto& rk = sel.rows[static_cast<std::size_t>(a)];
      const auto& ck = sel.cols[static_cast<std::size_t>(b)];
      hab(a, b) = lookup(ck.word + rk.word, rk.index, ck.index);
    }
  if (r > 0) {
    Eigen::JacobiSVD<Matrix> svd(hab);
    const auto& s = svd.singularValues();
    if (!(s(0) > 0.0) || s(r - 1) < eps * s(0)) fail(ErrorCode::SingularSelection, "H_{alpha,beta} is singular");
  }
  const Matrix hinv = pseudo_inverse(hab, eps);

  Representation rep;
  rep.alphabet = h.alphabet;
  rep.index_labels = h.index_labels;
  for (std::size_t s = 0; s < h.alphabet.size(); ++s) {
    Matrix z(r, r);
    for (Index a = 0; a < r; ++a)
      for (Index b = 0; b < r; ++b) {
        const auto& rk = sel.rows[static_cast<std::size_t>(a)];
        const auto& ck = sel.cols[static_cast<std::size_t>(b)];
        z(a, b) = lookup(ck.word + static_cast<Letter>(s) + rk.word, rk.index, ck.index);
      }
    rep.A.push_back(z * hinv);
  }
  rep.B.resize(r, nj);
  for (Index a = 0; a < r; ++a)
    for (Index j = 0; j < nj; ++j) {
      const auto& rk = sel.rows[static_cast<std::size_t>(a)];
      rep.B(a, j) = lookup(rk.word, rk.index, j);
    }
  Matrix c(h.outputs, r);
  for (Index i = 0; i < h.outputs; ++i)
    for (Index b = 0; b < r; ++b) {
      const auto& ck = sel.cols[static_cast<std::size_t>(b)];
      c(i, b) = lookup(ck.word, i, ck.index);
    }
  rep.C = c * hinv;
  return rep;
}

Matrix reachability_matrix(const Representation& rep) {
  const Index n = rep.dim(), nj = static_cast<Index>(rep.indices());
  if (n == 0) return Matrix(0, nj);
  const auto words = enumerate_words(rep.alphabet, static_cast<std::size_t>(n - 1));
  Matrix w(n, static_cast<Index>(words.size()) * nj);
  for (std::size_t i = 0; i < words.size(); ++i)
    w.middleCols(static_cast<Index>(i) * nj, nj) = word_matrix(rep, words[i]) * rep.B;
  return w;
}

Matrix observability_matrix(const Representation& rep) {
  const Index n = rep.dim(), p = rep.outputs();
  if (n == 0) return Matrix(p, 0);
  const auto words = enumerate_words(rep.alphabet, static_cast<std::size_t>(n - 1));
  Matrix o(static_cast<Index>(words.size()) * p, n);
  for (std::size_t i = 0; i < words.size(); ++i)
    o.middleRows(static_cast<Index>(i) * p, p) = rep.C * word_matrix(rep, words[i]);
  return o;
}

namespace {

Matrix invariant_closure(const std::vector<Matrix>& maps, const Matrix& seed, double eps) {
  const Index n = seed.rows();
  Matrix v = orthonormal_basis(seed, eps);
  for (Index it = 0; it < n && v.cols() < n; ++it) {
    Matrix stacked(n, v.cols() * static_cast<Index>(maps.size() + 1));
    stacked.leftCols(v.cols()) = v;
    for (std::size_t s = 0; s < maps.size(); ++s)
      stacked.middleCols(v.cols() * static_cast<Index>(s + 1), v.cols()) = maps[s] * v;
    Matrix next = orthonormal_basis(stacked, eps);
    if (next.cols() == v.cols()) break;
    v = std::move(next);
  }
  return v;
}

}  // namespace

Matrix reachable_subspace(const Representation& rep, double eps) {
  if (rep.dim() == 0) return Matrix(0, 0);
  return invariant_closure(rep.A, rep.B, eps);
}

Matrix observable_subspace(const Representation& rep, double eps) {
  if (rep.dim() == 0) return Matrix(0, 0);
  std::vector<Matrix> at;
  for (const auto& a : rep.A) at.push_back(a.transpose());
  return invariant_closure(at, rep.C.transpose(), eps);
}

bool is_reachable(const Representation& rep, double eps) {
  return reachable_subspace(rep, eps).cols() == rep.dim();
}

bool is_observable(const Representation& rep, double eps) {
  return observable_subspace(rep, eps).cols() == rep.dim();
}

Index hankel_rank(const Representation& rep, double eps) {
  const Index n = rep.dim();
  if (n == 0) return 0;
  const auto count = word_count(rep.letters(), static_cast<std::size_t>(n));
  if (count * static_cast<std::uint64_t>(std::max<Index>(rep.outputs(), static_cast<Index>(rep.indices()))) <= 4000) {
    return numeric_rank(build_hankel(rep, static_cast<std::size_t>(n), static_cast<std::size_t>(n)).matrix, eps);
  }
  return reduce_minimal(rep, eps).dim();
}

Representation reduce_minimal(const Representation& rep, double eps) {
  Representation out;
  out.alphabet = rep.alphabet;
  out.index_labels = rep.index_labels;
  const Matrix v = reachable_subspace(rep, eps);
  std::vector<Matrix> a1;
  for (const auto& a : rep.A) a1.push_back(v.transpose() * a * v);
  Representation mid{rep.alphabet, rep.index_labels, a1, v.transpose() * rep.B, rep.C * v};
  if (rep.dim() == 0) mid = rep;
  const Matrix u = observable_subspace(mid, eps);
  for (const auto& a : mid.A) out.A.push_back(u.transpose() * a * u);
  out.B = u.transpose() * mid.B;
  out.C = mid.C * u;
  if (mid.dim() == 0) {
    out.A.assign(rep.letters(), Matrix(0, 0));
    out.B = Matrix(0, static_cast<Index>(rep.indices()));
    out.C = Matrix(rep.outputs(), 0);
  }
  return out;
}

Matrix find_isomorphism(const Representation& r1, const Representation& r2, double tol, double eps) {
  if (r1.letters() != r2.letters() || r1.indices() != r2.indices() || r1.outputs() != r2.outputs())
    fail(ErrorCode::NotIsomorphic, "alphabet, index set or output dimension differ");
  const Index n = r1.dim();
  if (r2.dim() != n) fail(ErrorCode::NotIsomorphic, "dimensions differ");
  if (n == 0) return Matrix(0, 0);

  // Greedy prefix-closed word set whose observability rows reach full rank.
  const Index p = r1.outputs();
  std::deque<Word> queue{Word()};
  std::vector<Word> kept;
  Matrix o1(0, n);
  Index rank = 0;
  while (!queue.empty() && rank < n) {
    Word w = queue.front();
    queue.pop_front();
    Matrix cand(o1.rows() + p, n);
    cand << o1, r1.C * word_matrix(r1, w);
    const Index rk = numeric_rank(cand, eps);
    if (rk > rank) {
      rank = rk;
      o1 = std::move(cand);
      kept.push_back(w);
      for (std::size_t s = 0; s < r1.letters(); ++s) queue.push_back(w + static_cast<Letter>(s));
    }
  }
  if (rank < n) fail(ErrorCode::NotIsomorphic, "first representation is not observable");
  Matrix o2(o1.rows(), n);
  for (std::size_t i = 0; i < kept.size(); ++i)
    o2.middleRows(static_cast<Index>(i) * p, p) = r2.C * word_matrix(r2, kept[i]);
  if (numeric_rank(o2, eps) < n) fail(ErrorCode::NotIsomorphic, "second representation is not observable");

  const Matrix t = pseudo_inverse(o2, eps) * o1;
  for (std::size_t s = 0; s < r1.letters(); ++s)
    if (relative_gap(t * r1.A[s], r2.A[s] * t) > tol) fail(ErrorCode::NotIsomorphic, "A relation fails");
  if (relative_gap(t * r1.B, r2.B) > tol) fail(ErrorCode::NotIsomorphic, "B relation fails");
  if (relative_gap(r1.C, r2.C * t) > tol) fail(ErrorCode::NotIsomorphic, "C relation fails");
  return t;
}

Matrix stability_matrix(const std::vector<Matrix>& a, const std::vector<double>& weights) {
  if (a.empty()) return Matrix(0, 0);
  const Index n = a.front().rows();
  Matrix k = Matrix::Zero(n * n, n * n);
  for (std::size_t s = 0; s < a.size(); ++s) {
    const Matrix at = a[s].transpose();
    k += (weights.empty() ? 1.0 : weights[s]) * kron(at, at);
  }
  return k;
}

double stability_radius(const std::vector<Matrix>& a, const std::vector<double>& weights) {
  std::vector<double> c = weights.empty() ? std::vector<double>(a.size(), 1.0) : weights;
  return kronecker_spectral_radius(a, c);
}

bool is_stable(const std::vector<Matrix>& a, const std::vector<double>& weights, double margin) {
  return stability_radius(a, weights) < 1.0 - margin;
}

std::vector<double> square_sum_partial(const Representation& rep, std::size_t j, std::size_t k_max) {
  const Vector b = rep.B.col(static_cast<Index>(j));
  Matrix v = rep.C.transpose() * rep.C;
  std::vector<double> out;
  double total = 0.0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    total += b.dot(v * b);
    out.push_back(total);
    Matrix next = Matrix::Zero(v.rows(), v.cols());
    for (const auto& a : rep.A) next += a.transpose() * v * a;
    v = std::move(next);
  }
  return out;
}

Representation transform(const Representation& rep, const Matrix& t) {
  Representation out = rep;
  const Matrix ti = t.inverse();
  for (auto& a : out.A) a = t * a * ti;
  out.B = t * rep.B;
  out.C = rep.C * ti;
  return out;
}

}  // namespace jmlsr
