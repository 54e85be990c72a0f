// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "jmlsr/error.hpp"
#include "jmlsr/estimate.hpp"
#include "jmlsr/gbs.hpp"
#include "jmlsr/io.hpp"
#include "jmlsr/jmls.hpp"
#include "jmlsr/repr.hpp"
#include "random_models.hpp"

using namespace jmlsr;
namespace fs = std::filesystem;
using testing::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

/// Corpus shared by criteria 1 and 2: n <= 4, d <= 3, p <= 2.
std::vector<Representation> minimal_corpus() {
  Rng rng(101);
  std::vector<Representation> out;
  for (int k = 0; k < 25; ++k) {
    const Index n = 1 + k % 4;
    const std::size_t d = 1 + static_cast<std::size_t>(k / 4) % 3;
    const Index p = 1 + (k / 2) % 2;
    out.push_back(testing::random_minimal_rep(rng, n, d, p, 1 + static_cast<std::size_t>(k % 3 == 0)));
  }
  return out;
}

Outcome exact_partial_realization() {
  Outcome o;
  double worst = 0.0;
  int iso_fail = 0;
  for (const auto& rep : minimal_corpus()) {
    const Index n = rep.dim();
    const auto nn = static_cast<std::size_t>(n);
    const HankelBlock h = build_hankel(rep, nn + 1, nn);
    const Index r = numeric_rank(h.matrix);
    const auto hk = ho_kalman(h, choose_selection(h, r, kDefaultRankTol, nn));
    for (const auto& w : enumerate_words(rep.letters(), 2 * nn + 1))
      for (std::size_t j = 0; j < rep.indices(); ++j) {
        const Vector a = series_coefficient(rep, j, w), b = series_coefficient(hk, j, w);
        worst = std::max(worst, (a - b).norm() / std::max(1.0, a.norm()));
      }
    try {
      find_isomorphism(hk, rep);
    } catch (const Error&) {
      ++iso_fail;
    }
  }
  o.pass = worst <= 1e-9 && iso_fail == 0;
  o.detail = "max coefficient gap " + fmt("%.2e", worst) + ", isomorphism failures " + std::to_string(iso_fail);
  return o;
}

Outcome minimality_equivalences() {
  Outcome o;
  auto reps = minimal_corpus();
  Rng rng(202);
  const std::size_t minimal = reps.size();
  for (int k = 0; k < 10; ++k) reps.push_back(testing::pad_nonminimal(rng, reps[static_cast<std::size_t>(k)], 1 + k % 2, k));
  int bad = 0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& rep = reps[i];
    const Index rank = hankel_rank(rep);
    const bool min = is_minimal(rep);
    const bool ok = reduce_minimal(rep).dim() == rank && min == (rep.dim() == rank) && min == (i < minimal);
    if (!ok) ++bad;
  }
  o.pass = bad == 0;
  o.detail = std::to_string(reps.size()) + " reps, " + std::to_string(bad) + " violations";
  return o;
}

Outcome stability_square_summability() {
  Outcome o;
  Rng rng(303);
  int bad = 0;
  std::size_t worst_k = 0;
  for (int k = 0; k < 10; ++k) {
    Representation rep = testing::random_stable_rep(rng, 1 + k % 4, 1 + static_cast<std::size_t>(k % 3), 1 + k % 2, 0.95);
    if (k % 2 == 1) {
      Representation padded;
      do {
        padded = testing::pad_nonminimal(rng, rep, 1, k);
      } while (!is_stable(padded));
      rep = padded;
    }
    for (std::size_t j = 0; j < rep.indices(); ++j) {
      const auto l = square_sum_partial(rep, j, 501);
      std::size_t hit = 0;
      while (hit < 500 && !(l[hit + 1] - l[hit] < 1e-6)) ++hit;
      if (hit >= 500) ++bad;
      worst_k = std::max(worst_k, hit);
    }
    if (!is_stable(reduce_minimal(rep))) ++bad;
  }
  o.pass = bad == 0;
  o.detail = "tail below 1e-6 by k = " + std::to_string(worst_k) + ", violations " + std::to_string(bad);
  return o;
}

/// Batch-means standard error of the mean.
double batch_se(const Vector& x, Index batches = 100) {
  const Index len = x.size() / batches;
  Vector means(batches);
  for (Index b = 0; b < batches; ++b) means(b) = x.segment(b * len, len).mean();
  const double m = means.mean();
  return std::sqrt((means.array() - m).square().sum() / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

/// Largest |mean - target| / SE over the entries of E[x x^T w(t)].
double worst_z(const Matrix& states, const Vector& weight, const Matrix& target) {
  double z = 0.0;
  for (Index i = 0; i < target.rows(); ++i)
    for (Index k = i; k < target.cols(); ++k) {
      const Vector s = (states.col(i).array() * states.col(k).array() * weight.array()).matrix();
      z = std::max(z, std::abs(s.mean() - target(i, k)) / batch_se(s));
    }
  return z;
}

Outcome lyapunov() {
  Outcome o;
  Rng rng(404);
  double gbs_res = 0.0, jmls_res = 0.0, embed = 0.0, z = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto g = testing::random_stable_gbs(rng, 1 + k % 4, 1 + static_cast<std::size_t>(k % 3), 1 + k % 2, 1 + k % 2, 0.9);
    gbs_res = std::max(gbs_res, lyapunov_residual(g, solve_state_covariance(g)));
  }
  for (int k = 0; k < 20; ++k) {
    const std::vector<Index> dims = k % 2 ? std::vector<Index>{1, 2, 2} : std::vector<Index>{2, 1};
    const auto h = testing::random_stable_gjmls(rng, dims, 1 + k % 2, 1, 0.9);
    const auto p = gjmls_state_covariance(h);
    jmls_res = std::max(jmls_res, gjmls_covariance_residual(h, p));
    const auto conv = gbs_from_gjmls(h);
    const auto pg = solve_state_covariance(conv.gbs);
    for (std::size_t s = 0; s < conv.letter_pairs.size(); ++s) {
      const auto [q1, q2] = conv.letter_pairs[s];
      const Matrix& i1 = conv.state_embeddings[q1];
      const Matrix expect = h.prob(q1, q2) * i1 * p[q1] * i1.transpose();
      embed = std::max(embed, (pg[s] - expect).cwiseAbs().maxCoeff() / (1.0 + expect.norm()));
    }
  }
  InputProcessSpec iid;
  iid.kind = InputKind::iid_indicator;
  for (int k = 0; k < 2; ++k) {
    const auto g = testing::random_stable_gbs(rng, 2, 2, 1, 1, 0.8);
    const auto p = solve_state_covariance(g);
    const auto ts = simulate(g, iid, 1000000, std::nullopt, 40 + static_cast<std::uint64_t>(k), true);
    for (std::size_t s = 0; s < g.letters(); ++s) {
      const Vector w = ts.u.col(static_cast<Index>(s)).array().square().matrix();
      z = std::max(z, worst_z(ts.state, w, p[s]));
    }
  }
  for (int k = 0; k < 2; ++k) {
    const auto h = testing::random_stable_gjmls(rng, {2, 1}, 1, 1, 0.8);
    const auto p = gjmls_state_covariance(h);
    const auto ts = simulate_gjmls(h, 1000000, std::nullopt, 50 + static_cast<std::uint64_t>(k), true);
    for (std::size_t q = 0; q < h.states(); ++q) {
      Vector w(ts.horizon());
      for (Index t = 0; t < w.size(); ++t) w(t) = ts.theta[static_cast<std::size_t>(t)] == static_cast<int>(q) ? 1.0 : 0.0;
      const Matrix block = ts.state.middleCols(h.offset(q), h.dims[q]);
      z = std::max(z, worst_z(block, w, p[q]));
    }
  }
  o.pass = gbs_res <= 1e-10 && jmls_res <= 1e-10 && embed <= 1e-12 && z <= 4.0;
  o.detail = "GBS residual " + fmt("%.1e", gbs_res) + ", GJMLS residual " + fmt("%.1e", jmls_res) + ", embedding " +
             fmt("%.1e", embed) + ", Monte-Carlo max z " + fmt("%.2f", z);
  return o;
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

Outcome innovation() {
  Outcome o;
  const auto g0 = scalar_chain();
  const auto p0 = solve_state_covariance(g0);
  const auto w0 = innovation_realization(associated_representation(g0, p0), exact_t_diag(g0, p0), g0.weights, g0.language);
  const double k_err = std::abs(w0.K[0](0, 0) - 1.0);

  Rng rng(505);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto g = testing::random_innovation_gbs(rng, 1 + k % 3, 1 + static_cast<std::size_t>(k % 2), 1 + (k / 3) % 2, 0.7);
    const auto p = solve_state_covariance(g);
    const Representation assoc = associated_representation(g, p);
    const Matrix t = testing::gaussian(rng, g.dim(), g.dim()) + 2.0 * Matrix::Identity(g.dim(), g.dim());
    const auto wr = innovation_realization(transform(assoc, t), exact_t_diag(g, p), g.weights, g.language);
    const Matrix s = find_isomorphism(associated_representation(wr.to_gbs(), wr.P), assoc);
    const Matrix si = s.inverse();
    for (std::size_t l = 0; l < g.letters(); ++l) {
      worst = std::max(worst, relative_gap(s * wr.A[l] * si, g.A[l]));
      worst = std::max(worst, relative_gap(s * wr.K[l], g.K[l]));
    }
    worst = std::max(worst, relative_gap(wr.C * si, g.C));
  }
  o.pass = k_err <= 1e-8 && worst <= 1e-7;
  o.detail = "scalar |K - 1| " + fmt("%.1e", k_err) + ", max relation residual " + fmt("%.1e", worst);
  return o;
}

/// Markov parameters C A^{k-1} G of the single-letter model, k = 1..kmax.
std::vector<Matrix> markov_parameters(const GbsModel& g, const std::vector<Matrix>& p, std::size_t kmax) {
  const Representation rep = associated_representation(g, p);
  std::vector<Matrix> out;
  Word w;
  for (std::size_t k = 1; k <= kmax; ++k) {
    Matrix m(rep.outputs(), static_cast<Index>(rep.indices()));
    for (std::size_t j = 0; j < rep.indices(); ++j) m.col(static_cast<Index>(j)) = series_coefficient(rep, j, w);
    out.push_back(m);
    w = w + Letter{0};
  }
  return out;
}

Outcome linear_identification() {
  Outcome o;
  Rng rng(606);
  const auto g = testing::random_stable_gbs(rng, 2, 1, 1, 1, 0.64);
  const auto truth = markov_parameters(g, solve_state_covariance(g), 5);
  InputProcessSpec lin;
  double mean_err = 0.0, worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ts = simulate(g, lin, 1000000, std::nullopt, seed);
    const auto res = realize_from_data(ts, 2, 4, g.alphabet, g.weights, g.language);
    const auto est = markov_parameters(res.model.to_gbs(), res.model.P, 5);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      num += (est[k] - truth[k]).squaredNorm();
      den += truth[k].squaredNorm();
    }
    const double err = std::sqrt(num / den);
    mean_err += err / 5.0;
    worst = std::max(worst, err);
  }
  o.pass = mean_err <= 0.10;
  o.detail = "mean relative error over k <= 5 " + fmt("%.3f", mean_err) + " (worst seed " + fmt("%.3f", worst) + ")";
  return o;
}

Outcome gjmls_identification() {
  Outcome o;
  Rng rng(707);
  const auto h = testing::random_stable_gjmls(rng, {1, 1}, 1, 1, 0.7);
  const CovarianceTable truth = gjmls_exact_covariances(h, 3, 1);
  const Index n = reduce_minimal(associated_representation(plain_output(gbs_from_gjmls(h)))).dim();
  int passed = 0;
  std::string errs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double err = 0.0;
    try {
      const auto ts = simulate_gjmls(h, 1000000, std::nullopt, seed);
      const auto id = identify_gjmls(ts, 2, n, 5, {}, std::vector<Index>{1, 1});
      const CovarianceTable est = gjmls_exact_covariances(id.model, 3, 1);
      double num = 0.0, den = 0.0;
      for (const auto& w : enumerate_admissible(truth.language, 1, 3)) {
        const Matrix& a = truth.lambda_at(w);
        const Matrix b = est.lambda_at(parse_word(to_string(w, truth.alphabet), est.alphabet));
        num += (b - a).squaredNorm();
        den += a.squaredNorm();
      }
      err = std::sqrt(num / den);
    } catch (const std::exception&) {
      err = INFINITY;
    }
    if (err <= 0.10) ++passed;
    errs += (errs.empty() ? "" : " ") + fmt("%.3f", err);
  }
  o.pass = passed >= 4;
  o.detail = std::to_string(passed) + "/5 seeds within 10%, relative errors " + errs;
  return o;
}

Outcome conversion_fidelity() {
  Outcome o;
  Rng rng(808);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::vector<Index> dims = k % 2 ? std::vector<Index>{2, 1} : std::vector<Index>{1, 2, 1};
    const auto h = testing::random_stable_gjmls(rng, dims, 1 + k % 2, 1 + (k / 2) % 2, 0.8);
    const auto conv = gbs_from_gjmls(h);
    const auto ts = simulate_gjmls(h, 1000, 0, 80 + static_cast<std::uint64_t>(k));
    std::vector<int> theta = ts.theta;
    theta.push_back(theta.back());
    const Index t_len = ts.horizon(), m = h.noise_dim(), d = static_cast<Index>(h.states());
    const Matrix v = testing::gaussian(rng, t_len, m);
    Matrix vt = Matrix::Zero(t_len, m * d);
    for (Index t = 0; t < t_len; ++t) vt.block(t, theta[static_cast<std::size_t>(t)] * m, 1, m) = v.row(t);
    const Matrix u = pair_inputs(theta, conv.letter_pairs).topRows(t_len);
    const Matrix y = gjmls_propagate(h, theta, v);
    const Matrix yt = propagate(conv.gbs, u, vt);
    const Matrix ey = (conv.E * yt.transpose()).transpose();
    worst = std::max(worst, (ey - y).cwiseAbs().maxCoeff() / (1.0 + y.cwiseAbs().maxCoeff()));
  }
  o.pass = worst <= 1e-12;
  o.detail = "max pathwise gap " + fmt("%.1e", worst);
  return o;
}

Outcome consistency_rate() {
  Outcome o;
  Rng rng(909);
  const auto g = testing::random_stable_gbs(rng, 2, 2, 1, 1, 0.6);
  const auto p = solve_state_covariance(g);
  const CovarianceTable truth = exact_covariance_table(associated_representation(g, p), exact_t_diag(g, p), g.weights,
                                                       g.language, 2, 1);
  InputProcessSpec iid;
  iid.kind = InputKind::iid_indicator;
  EstimateOptions opts;
  opts.lambda_length = 2;
  opts.tee_length = 1;
  auto error = [&](std::size_t horizon, std::uint64_t seed) {
    const auto ts = simulate(g, iid, horizon, std::nullopt, seed);
    const auto est = estimate_covariance_table(ts, g.alphabet, g.weights, g.language, opts);
    double e = 0.0;
    for (const auto& [w, lam] : truth.lambda) e += (est.lambda_at(w) - lam).squaredNorm();
    return std::sqrt(e);
  };
  const std::size_t base = 20000;
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    small += error(base, 1000 + seed) / 20.0;
    large += error(4 * base, 2000 + seed) / 20.0;
  }
  const double ratio = small / large;
  o.pass = ratio >= 1.2 && ratio <= 3.5;
  o.detail = "mean error " + fmt("%.4f", small) + " at T, " + fmt("%.4f", large) + " at 4T, ratio " + fmt("%.2f", ratio);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool cli_runs_match(std::string& why) {
  const fs::path dir = fs::temp_directory_path() / ("jmlsr_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Rng rng(1010);
  const auto h = testing::random_stable_gjmls(rng, {1, 1}, 1, 1, 0.7);
  io::write_json_file((dir / "h.json").string(), io::to_json(h));
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(JMLSR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  bool ok = true;
  for (const char* tag : {"1", "2"}) {
    const std::string t = tag, d = dir.string() + "/";
    ok = ok && run("--seed 5 simulate " + d + "h.json --T 20000 --out " + d + "y" + t + ".csv");
    ok = ok && run("estimate-cov " + d + "y" + t + ".csv --lambda-length 4 --tee-length 2 --out " + d + "c" + t + ".json");
    ok = ok && run("identify " + d + "y" + t + ".csv --n 2 --N 2 --out " + d + "w" + t + ".json");
  }
  if (!ok) why = "cli invocation failed";
  for (const char* f : {"y", "c", "w"})
    if (ok && slurp(dir / (std::string(f) + "1.csv")) + slurp(dir / (std::string(f) + "1.json")) !=
                  slurp(dir / (std::string(f) + "2.csv")) + slurp(dir / (std::string(f) + "2.json"))) {
      ok = false;
      why = std::string("cli output ") + f + " differs";
    }
  fs::remove_all(dir);
  return ok;
}

bool same_model(const WeakRealization& a, const WeakRealization& b) {
  bool ok = same_bits(a.C, b.C) && same_bits(a.D, b.D);
  for (std::size_t s = 0; s < a.A.size(); ++s)
    ok = ok && same_bits(a.A[s], b.A[s]) && same_bits(a.K[s], b.K[s]) && same_bits(a.P[s], b.P[s]) &&
         same_bits(a.Q[s], b.Q[s]);
  return ok;
}

Outcome determinism() {
  Outcome o;
  std::vector<std::string> failures;
  Rng rng(1111);
  const auto g = testing::random_stable_gbs(rng, 2, 2, 1, 1, 0.7);
  InputProcessSpec iid;
  iid.kind = InputKind::iid_indicator;
  RealizeConfig threaded;
  threaded.threads = 4;
  {
    const auto a = simulate(g, iid, 50000, std::nullopt, 3, true), b = simulate(g, iid, 50000, std::nullopt, 3, true);
    if (!same_bits(a.y, b.y) || !same_bits(a.u, b.u) || !same_bits(a.state, b.state)) failures.push_back("simulate");
    const auto ra = realize_from_data(a, 2, 2, g.alphabet, g.weights, g.language);
    const auto rb = realize_from_data(b, 2, 2, g.alphabet, g.weights, g.language);
    const auto rc = realize_from_data(a, 2, 2, g.alphabet, g.weights, g.language, threaded);
    if (!same_model(ra.model, rb.model)) failures.push_back("realize");
    if (!same_model(ra.model, rc.model)) failures.push_back("realize threaded");
  }
  {
    const auto h = testing::random_stable_gjmls(rng, {1, 1}, 1, 1, 0.7);
    const auto a = simulate_gjmls(h, 50000, std::nullopt, 4), b = simulate_gjmls(h, 50000, std::nullopt, 4);
    if (!same_bits(a.y, b.y) || a.theta != b.theta) failures.push_back("simulate_gjmls");
    const auto ia = identify_gjmls(a, 2, 2, 2, {}, std::vector<Index>{1, 1});
    const auto ib = identify_gjmls(b, 2, 2, 2, {}, std::vector<Index>{1, 1});
    bool same = ia.model.dims == ib.model.dims;
    for (std::size_t i = 0; same && i < ia.model.M.size(); ++i)
      same = same_bits(ia.model.M[i], ib.model.M[i]) && same_bits(ia.model.B[i], ib.model.B[i]);
    for (std::size_t q = 0; same && q < ia.model.C.size(); ++q)
      same = same_bits(ia.model.C[q], ib.model.C[q]) && same_bits(ia.model.Q[q], ib.model.Q[q]);
    if (!same) failures.push_back("identify_gjmls");
  }
  std::string why;
  if (!cli_runs_match(why)) failures.push_back(why);
  o.pass = failures.empty();
  o.detail = failures.empty() ? "library and cli pipelines bitwise identical across runs" : "differs:";
  for (const auto& f : failures) o.detail += " " + f;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact partial realization", exact_partial_realization},
      {"minimality equivalences", minimality_equivalences},
      {"stability implies square summability", stability_square_summability},
      {"state covariance equations", lyapunov},
      {"innovation realization", innovation},
      {"linear system identification", linear_identification},
      {"GJMLS identification", gjmls_identification},
      {"conversion fidelity", conversion_fidelity},
      {"consistency rate", consistency_rate},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %zu: %s  %s: %s [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
