#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "jmlsr/error.hpp"
#include "jmlsr/io.hpp"
#include "random_models.hpp"

using namespace jmlsr;

TEST_CASE("shortest round-trip formatting") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 5e-324, 123456789.125}) {
    const std::string s = io::format_double(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
}

TEST_CASE("representation json roundtrip") {
  testing::Rng rng(1);
  const auto r = testing::random_minimal_rep(rng, 3, 2, 2, 2);
  const auto j = io::to_json(r);
  CHECK(io::detect_kind(j) == io::ModelKind::representation);
  const auto back = io::representation_from_json(io::parse_json(io::dump(j)));
  CHECK(back.alphabet == r.alphabet);
  CHECK(back.index_labels == r.index_labels);
  CHECK(back.B == r.B);
  CHECK(back.C == r.C);
  for (std::size_t s = 0; s < r.letters(); ++s) CHECK(back.A[s] == r.A[s]);
}

TEST_CASE("gbs and weak realization json roundtrip") {
  testing::Rng rng(2);
  auto g = testing::random_stable_gbs(rng, 2, 3, 1, 2, 0.7);
  g.language = AdmissibleLanguage::from_pairs(3, {{0, 1}, {1, 2}, {2, 0}});
  const auto back = io::gbs_from_json(io::parse_json(io::dump(io::to_json(g))));
  CHECK(back.language == g.language);
  CHECK(back.weights.values() == g.weights.values());
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(back.A[s] == g.A[s]);
    CHECK(back.K[s] == g.K[s]);
    CHECK(back.Q[s] == g.Q[s]);
  }
  WeakRealization wr{g.alphabet, g.weights, g.language, g.A, g.K, g.Q, g.Q, g.C, g.D};
  wr.P = {Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  const auto j = io::to_json(wr);
  CHECK(io::detect_kind(j) == io::ModelKind::weak_realization);
  const auto wb = io::weak_realization_from_json(j);
  CHECK(wb.P[1] == wr.P[1]);
}

TEST_CASE("gjmls json roundtrip with a zero transition") {
  Matrix p(2, 2);
  p << 0.0, 1.0, 0.4, 0.6;
  testing::Rng rng(3);
  const auto h = testing::random_stable_gjmls(rng, {2, 1}, 1, 1, 0.7, &p);
  const auto j = io::to_json(h);
  CHECK_FALSE(j.at("M").contains("1,1"));
  const auto back = io::gjmls_from_json(io::parse_json(io::dump(j)));
  CHECK(back.dims == h.dims);
  CHECK(back.chain.P == h.chain.P);
  for (std::size_t k = 0; k < 4; ++k) CHECK(back.M[k] == h.M[k]);
  for (std::size_t q = 0; q < 2; ++q) CHECK(back.Q[q] == h.Q[q]);
}

TEST_CASE("covariance table json roundtrip") {
  testing::Rng rng(4);
  const auto h = testing::random_stable_gjmls(rng, {1, 1}, 2, 1, 0.7);
  const auto t = gjmls_exact_covariances(h, 3, 2);
  const auto back = io::covariance_table_from_json(io::parse_json(io::dump(io::to_json(t))));
  CHECK(back.lambda == t.lambda);
  CHECK(back.tee == t.tee);
  CHECK(back.language == t.language);
  CHECK(back.normalization == "exact");
}

TEST_CASE("json errors carry a position") {
  try {
    io::parse_json("{\n  \"a\": [1,\n  }");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(io::representation_from_json(io::parse_json(R"({"alphabet":["a"],"dim":1,"A":{},"B":{},"C":[[1]]})")),
                  Error);
}

TEST_CASE("csv roundtrip in both forms") {
  testing::Rng rng(5);
  TimeSeries u;
  u.y = testing::gaussian(rng, 20, 2);
  u.input_alphabet = Alphabet({"a", "b"});
  u.u = testing::gaussian(rng, 20, 2);
  std::stringstream s1;
  io::write_csv(s1, u);
  CHECK(s1.str().rfind("t,y_1,y_2,u_a,u_b\n", 0) == 0);
  const auto ub = io::read_csv(s1);
  CHECK(ub.y == u.y);
  CHECK(ub.u == u.u);
  CHECK(ub.input_alphabet == u.input_alphabet);

  TimeSeries th;
  th.y = testing::gaussian(rng, 10, 1);
  th.theta = {0, 1, 1, 0, 2, 2, 1, 0, 0, 1};
  std::stringstream s2;
  io::write_csv(s2, th);
  CHECK(s2.str().rfind("t,y_1,theta\n0,", 0) == 0);
  const auto tb = io::read_csv(s2);
  CHECK(tb.theta == th.theta);
  CHECK(tb.y == th.y);
}

TEST_CASE("csv errors") {
  std::stringstream bad("t,y_1\n0,abc\n");
  try {
    io::read_csv(bad);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::stringstream header("x,y_1\n");
  CHECK_THROWS_AS(io::read_csv(header), Error);
}
