#include <doctest.h>

#include <cmath>
#include <random>

#include "jmlsr/error.hpp"
#include "jmlsr/estimate.hpp"
#include "random_models.hpp"

using namespace jmlsr;

namespace {

TimeSeries linear_series(const Matrix& y) {
  TimeSeries ts;
  ts.y = y;
  ts.input_alphabet = Alphabet({"a"});
  ts.u = Matrix::Ones(y.rows(), 1);
  return ts;
}

GbsModel scalar_chain() {
  GbsModel g;
  g.alphabet = Alphabet({"a"});
  g.A = {Matrix::Constant(1, 1, 0.5)};
  g.K = {Matrix::Ones(1, 1)};
  g.C = Matrix::Ones(1, 1);
  g.D = Matrix::Ones(1, 1);
  g.Q = {Matrix::Ones(1, 1)};
  g.weights = LetterWeights::ones(1);
  g.language = AdmissibleLanguage::full(1);
  return g;
}

CovarianceTable exact_table(const GbsModel& g, std::size_t l, std::size_t n) {
  const auto p = solve_state_covariance(g);
  return exact_covariance_table(associated_representation(g, p), exact_t_diag(g, p), g.weights, g.language, l, n);
}

double batch_se(const Vector& x, Index batches = 100) {
  const Index len = x.size() / batches;
  Vector means(batches);
  for (Index b = 0; b < batches; ++b) means(b) = x.segment(b * len, len).mean();
  const double m = means.mean();
  return std::sqrt((means.array() - m).square().sum() / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

}  // namespace

TEST_CASE("lagged products") {
  Matrix y(4, 1);
  y << 1, 2, 3, 4;
  const auto ts = linear_series(y);
  const auto full = AdmissibleLanguage::full(1);
  CHECK(lagged_product(ts, Word{0}, 2, LetterWeights::ones(1), full, ts.input_alphabet)(0) == 2.0);

  TimeSeries two;
  two.y = y;
  two.input_alphabet = Alphabet({"a", "b"});
  two.u = Matrix::Constant(4, 2, 0.5);
  const LetterWeights w({0.25, 0.25});
  CHECK(lagged_product(two, Word{0, 1}, 3, w, AdmissibleLanguage::full(2), two.input_alphabet)(0) ==
        doctest::Approx(2.0));

  TimeSeries th;
  th.y = y;
  th.theta = {0, 1, 1, 0};
  const Alphabet pairs({"1-2", "2-2"});
  CHECK(lagged_product(th, Word{0}, 3, LetterWeights({0.5, 0.5}), AdmissibleLanguage::full(2), pairs)(0) == 0.0);
}

TEST_CASE("lambda of constant and white data") {
  const auto c = linear_series(Matrix::Constant(50, 2, 3.0));
  const Matrix lam = estimate_lambda(c, Word{0}, LetterWeights::ones(1), AdmissibleLanguage::full(1), c.input_alphabet);
  CHECK((lam - Matrix::Constant(2, 2, 9.0)).norm() < 1e-12);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix y(1000000, 1);
  for (Index t = 0; t < y.rows(); ++t) y(t, 0) = normal(rng);
  const auto w = linear_series(y);
  const double est = estimate_lambda(w, Word{0}, LetterWeights::ones(1), AdmissibleLanguage::full(1), w.input_alphabet)(0, 0);
  CHECK(std::abs(est) < 4.0 / std::sqrt(1e6));
}

TEST_CASE("lambda of the simulated scalar chain") {
  InputProcessSpec lin;
  const auto ts = simulate(scalar_chain(), lin, 1000000, std::nullopt, 3);
  const double est = estimate_lambda(ts, Word{0}, LetterWeights::ones(1), AdmissibleLanguage::full(1), ts.input_alphabet)(0, 0);
  const Vector prod = ts.y.col(0).tail(ts.y.rows() - 1).cwiseProduct(ts.y.col(0).head(ts.y.rows() - 1));
  CHECK(std::abs(est - 5.0 / 3.0) < 3 * batch_se(prod));
}

TEST_CASE("T blocks: symmetry and zeros for different last letters") {
  testing::Rng rng(4);
  const auto g = testing::random_stable_gbs(rng, 2, 2, 2, 2, 0.7);
  InputProcessSpec iid;
  iid.kind = InputKind::iid_indicator;
  const auto ts = simulate(g, iid, 20000, std::nullopt, 5);
  const auto& a = ts.input_alphabet;
  const Matrix t = estimate_T(ts, Word{0, 1}, Word{0, 1}, g.weights, g.language, a);
  CHECK((t - t.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(t);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  CHECK(estimate_T(ts, Word{0, 1}, Word{1, 0}, g.weights, g.language, a).norm() == 0.0);
  CHECK(estimate_T(ts, Word{1}, Word{0}, g.weights, g.language, a).norm() == 0.0);
}

TEST_CASE("the chunked table pass equals the per-word estimators") {
  testing::Rng rng(6);
  const auto g = testing::random_stable_gbs(rng, 2, 2, 2, 2, 0.7);
  InputProcessSpec iid;
  iid.kind = InputKind::iid_indicator;
  const auto ts = simulate(g, iid, 9000, std::nullopt, 7);
  const auto table = estimate_covariance_table(ts, ts.input_alphabet, g.weights, g.language, {3, 2, 0});
  for (const auto& [w, m] : table.lambda)
    CHECK(relative_gap(m, estimate_lambda(ts, w, g.weights, g.language, ts.input_alphabet)) < 1e-12);
  for (const auto& [k, m] : table.tee)
    CHECK(relative_gap(m, estimate_T(ts, k.first, k.second, g.weights, g.language, ts.input_alphabet)) < 1e-12);
  CHECK(relative_gap(table.tee_at(Word{1, 0}, Word{0}), table.tee_at(Word{0}, Word{1, 0}).transpose()) == 0.0);
}

TEST_CASE("threaded estimation is bitwise identical to serial") {
  testing::Rng rng(8);
  const auto g = testing::random_stable_gbs(rng, 2, 2, 1, 1, 0.7);
  InputProcessSpec iid;
  iid.kind = InputKind::iid_indicator;
  const auto ts = simulate(g, iid, 10000, std::nullopt, 9);
  const auto a = estimate_covariance_table(ts, ts.input_alphabet, g.weights, g.language, {4, 3, 0});
  const auto b = estimate_covariance_table(ts, ts.input_alphabet, g.weights, g.language, {4, 3, 3});
  CHECK(a.lambda == b.lambda);
  CHECK(a.tee == b.tee);
}

TEST_CASE("exact table Hankel equals the representation Hankel") {
  testing::Rng rng(10);
  const auto g = testing::random_stable_gbs(rng, 3, 2, 2, 2, 0.7);
  const auto p = solve_state_covariance(g);
  const auto rep = associated_representation(g, p);
  const auto table = exact_covariance_table(rep, exact_t_diag(g, p), g.weights, g.language, 5, 2);
  const auto h1 = build_empirical_hankel(table, 2, 2);
  const auto h2 = build_hankel(rep, 2, 2);
  CHECK((h1.matrix - h2.matrix).norm() < 1e-12 * (1.0 + h2.matrix.norm()));
}

TEST_CASE("inadmissible concatenations give zero Hankel entries") {
  testing::Rng rng(11);
  auto g = testing::random_stable_gbs(rng, 2, 2, 1, 1, 0.7);
  g.language = AdmissibleLanguage::from_pairs(2, {});
  const auto table = exact_table(g, 4, 1);
  const auto h = build_empirical_hankel(table, 1, 1);
  for (std::size_t r = 0; r < h.rows.size(); ++r)
    for (std::size_t c = 0; c < h.cols.size(); ++c) {
      if (h.rows[r].word.empty() && h.cols[c].word.empty()) continue;
      CHECK(h.matrix(static_cast<Index>(r), static_cast<Index>(c)) == 0.0);
    }
}

TEST_CASE("realization from the exact scalar table converges to the innovation model") {
  double prev = 1e300;
  for (std::size_t past : {2u, 6u, 12u}) {
    const auto res = realize_from_table(exact_table(scalar_chain(), 4, past), 1, past);
    const double err = std::abs(res.model.K[0](0, 0) - 1.0);
    CHECK(err < prev);
    prev = err;
    CHECK(res.model.A[0](0, 0) == doctest::Approx(0.5).epsilon(1e-10));
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("realization from exact tables matches the innovation realization") {
  testing::Rng rng(12);
  const auto g = testing::random_innovation_gbs(rng, 2, 2, 1, 0.5);
  const auto p = solve_state_covariance(g);
  const auto rep = associated_representation(g, p);
  const auto ref = innovation_realization(rep, exact_t_diag(g, p), g.weights, g.language);
  const auto res = realize_from_table(exact_table(g, 6, 9), 2, 9);
  const Matrix t = find_isomorphism(associated_representation(res.model.to_gbs(), res.model.P), rep, 1e-3);
  for (std::size_t s = 0; s < g.letters(); ++s) {
    CHECK(relative_gap(t * res.model.A[s] * t.inverse(), ref.A[s]) < 1e-6);
    CHECK(relative_gap(t * res.model.K[s], ref.K[s]) < 1e-2);
  }
}

TEST_CASE("rank and gram failures") {
  try {
    realize_from_table(exact_table(scalar_chain(), 6, 2), 2, 2);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
  try {
    realize_from_table(exact_table(scalar_chain(), 4, 2), 5, 2);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
  GbsModel twin = scalar_chain();
  twin.C = Matrix::Ones(2, 1);
  twin.D = Matrix::Ones(2, 1);
  try {
    realize_from_table(exact_table(twin, 4, 2), 1, 2);
    FAIL("expected SingularGram");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularGram);
  }
}

TEST_CASE("identification from data is deterministic") {
  InputProcessSpec lin;
  const auto ts = simulate(scalar_chain(), lin, 20000, std::nullopt, 13);
  const auto a = realize_from_data(ts, 1, 3, ts.input_alphabet, LetterWeights::ones(1), AdmissibleLanguage::full(1));
  const auto b = realize_from_data(ts, 1, 3, ts.input_alphabet, LetterWeights::ones(1), AdmissibleLanguage::full(1));
  CHECK(a.model.A[0] == b.model.A[0]);
  CHECK(a.model.K[0] == b.model.K[0]);
  CHECK(a.model.P[0] == b.model.P[0]);
  CHECK(std::abs(a.model.A[0](0, 0) - 0.5) < 0.1);
  CHECK(a.diagnostics.samples == 20000);
}

TEST_CASE("pair weights from a mode path") {
  std::vector<int> theta;
  for (int k = 0; k < 1000; ++k) theta.push_back(k % 3 == 0 ? 1 : 0);
  const auto est = estimate_pair_weights(theta, 2);
  CHECK(est.alphabet.names() == std::vector<std::string>{"1-1", "1-2", "2-1"});
  CHECK(est.weights[0] == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(est.weights[2] == 1.0);
  CHECK(est.language.allows(0, 1));
  CHECK(est.language.allows(1, 2));
  CHECK_FALSE(est.language.allows(2, 2));
  CHECK_FALSE(est.language.allows(1, 1));

  std::vector<int> rare(1000, 0);
  rare[500] = 1;
  const auto r = estimate_pair_weights(rare, 2);
  CHECK(r.unidentifiable == std::vector<std::string>{"1-2"});
}
