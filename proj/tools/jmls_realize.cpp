#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jmlsr/error.hpp"
#include "jmlsr/estimate.hpp"
#include "jmlsr/gbs.hpp"
#include "jmlsr/io.hpp"
#include "jmlsr/jmls.hpp"
#include "jmlsr/kernels.hpp"
#include "jmlsr/repr.hpp"

using namespace jmlsr;
using io::Json;

namespace {

enum Exit { kOk = 0, kPropertyFails = 1, kInvalid = 2, kUnstable = 3, kRank = 4 };

struct Globals {
  std::uint64_t seed = 0;
  double tol_rank = kDefaultRankTol;
  bool json = false;
  bool quiet = false;
};

unsigned env_threads() {
  const char* s = std::getenv("JMLS_REALIZE_THREADS");
  if (!s || !*s) return 0;
  const long v = std::strtol(s, nullptr, 10);
  return v > 0 ? static_cast<unsigned>(v) : 0;
}

/// Key/value report printed as "key: value" lines or as one JSON object.
class Report {
 public:
  explicit Report(const Globals& g) : g_(g) {}
  void set(const std::string& key, Json value) { data_[key] = std::move(value); }
  void emit() const {
    if (g_.json) {
      std::cout << data_.dump(2) << '\n';
      return;
    }
    if (g_.quiet) return;
    for (const auto& [k, v] : data_.items()) {
      std::cout << k << ": ";
      if (v.is_string()) {
        std::cout << v.get<std::string>();
      } else if (v.is_number_float()) {
        std::cout << io::format_double(v.get<double>());
      } else {
        std::cout << v.dump();
      }
      std::cout << '\n';
    }
  }

 private:
  const Globals& g_;
  Json data_ = Json::object();
};

Json matrices_json(const std::vector<Matrix>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) out.push_back(io::matrix_to_json(m));
  return out;
}

std::map<std::string, Matrix> lambda_by_name(const CovarianceTable& t) {
  std::map<std::string, Matrix> out;
  for (const auto& [w, m] : t.lambda) out.emplace(to_string(w, t.alphabet), m);
  return out;
}

/// Largest relative gap between matching Lambda entries of two tables.
double covariance_diff(const CovarianceTable& a, const CovarianceTable& b) {
  const auto ma = lambda_by_name(a), mb = lambda_by_name(b);
  if (ma.size() != mb.size()) fail(ErrorCode::InconsistentAlphabet, "covariance tables cover different words");
  double worst = 0.0;
  for (const auto& [k, m] : ma) {
    const auto it = mb.find(k);
    if (it == mb.end()) fail(ErrorCode::InconsistentAlphabet, "word '" + k + "' missing after conversion");
    worst = std::max(worst, relative_gap(m, it->second));
  }
  return worst;
}

CovarianceTable exact_table(const GbsModel& g, std::size_t lambda_length, std::size_t tee_length) {
  const auto p = solve_state_covariance(g);
  return exact_covariance_table(associated_representation(g, p), exact_t_diag(g, p), g.weights, g.language,
                                lambda_length, tee_length);
}

MarkovChain chain_from_weights(const GbsModel& g, std::size_t states) {
  Matrix p = Matrix::Zero(static_cast<Index>(states), static_cast<Index>(states));
  for (std::size_t s = 0; s < g.letters(); ++s) {
    const auto pr = parse_pair_letter(g.alphabet.name(static_cast<Letter>(s)));
    if (!pr || pr->first >= states || pr->second >= states)
      fail(ErrorCode::InconsistentAlphabet, "letter '" + g.alphabet.name(static_cast<Letter>(s)) + "' is not a transition");
    p(static_cast<Index>(pr->first), static_cast<Index>(pr->second)) = g.weights[static_cast<Letter>(s)];
  }
  return MarkovChain::from_transitions(p);
}

std::size_t states_in(const GbsModel& g) {
  std::size_t d = 0;
  for (const auto& n : g.alphabet.names()) {
    const auto pr = parse_pair_letter(n);
    if (!pr) fail(ErrorCode::InconsistentAlphabet, "letter '" + n + "' is not of the form q1-q2");
    d = std::max({d, pr->first + 1, pr->second + 1});
  }
  return d;
}

GbsModel load_gbs_like(const Json& j, io::ModelKind kind) {
  if (kind == io::ModelKind::gbs) return io::gbs_from_json(j);
  if (kind == io::ModelKind::weak_realization) return io::weak_realization_from_json(j).to_gbs();
  fail(ErrorCode::InvalidArgument, std::string("expected a GBS model, got ") + io::to_string(kind));
}

/// Letter weights as the sample mean of u_sigma^2.
LetterWeights weights_from_inputs(const Matrix& u) {
  std::vector<double> w;
  for (Index k = 0; k < u.cols(); ++k) w.push_back(u.col(k).squaredNorm() / static_cast<double>(u.rows()));
  return LetterWeights(w);
}

struct DataAlphabet {
  Alphabet alphabet;
  LetterWeights weights;
  AdmissibleLanguage language;
  std::vector<std::string> unidentifiable;
};

DataAlphabet data_alphabet(const TimeSeries& ts, std::size_t states) {
  if (ts.theta_form()) {
    std::size_t d = states;
    if (d == 0)
      for (int q : ts.theta) d = std::max(d, static_cast<std::size_t>(q) + 1);
    auto est = estimate_pair_weights(ts.theta, d);
    return {est.alphabet, est.weights, est.language, est.unidentifiable};
  }
  return {ts.input_alphabet, weights_from_inputs(ts.u), AdmissibleLanguage::full(ts.input_alphabet.size()), {}};
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string model, out, kind = "iid";
  std::size_t horizon = 1000;
  std::optional<std::size_t> burn_in;
  bool record_state = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  const Json j = io::read_json_file(a.model);
  const auto kind = io::detect_kind(j);
  TimeSeries ts;
  double rho = 0.0;
  if (kind == io::ModelKind::gjmls) {
    const GjmlsModel h = io::gjmls_from_json(j);
    rho = jmls_stability_radius(h);
    std::cerr << "stability radius: " << io::format_double(rho) << '\n';
    ts = simulate_gjmls(h, a.horizon, a.burn_in, g.seed, a.record_state);
  } else {
    const GbsModel m = load_gbs_like(j, kind);
    rho = weighted_stability_radius(m);
    std::cerr << "stability radius: " << io::format_double(rho) << '\n';
    InputProcessSpec spec;
    if (a.kind == "linear") {
      spec.kind = InputKind::linear;
    } else if (a.kind == "bilinear") {
      spec.kind = InputKind::bilinear;
    } else if (a.kind == "iid") {
      spec.kind = InputKind::iid_indicator;
    } else if (a.kind == "markov") {
      spec = InputProcessSpec::markov_pair_for(m);
    } else {
      fail(ErrorCode::InvalidArgument, "unknown input kind '" + a.kind + "'");
    }
    ts = simulate(m, spec, a.horizon, a.burn_in, g.seed, a.record_state);
  }
  io::write_csv_file(a.out, ts);
  Report r(g);
  r.set("rows", ts.horizon());
  r.set("stability_radius", rho);
  r.set("seed", g.seed);
  r.set("out", a.out);
  r.emit();
  return kOk;
}

struct EstimateArgs {
  std::string data, exact, out;
  std::size_t lambda_length = 3, tee_length = 2, states = 0;
};

int cmd_estimate(const Globals& g, const EstimateArgs& a) {
  CovarianceTable table;
  if (!a.exact.empty()) {
    const Json j = io::read_json_file(a.exact);
    const auto kind = io::detect_kind(j);
    if (kind == io::ModelKind::gjmls) {
      table = gjmls_exact_covariances(io::gjmls_from_json(j), a.lambda_length, a.tee_length);
    } else {
      table = exact_table(load_gbs_like(j, kind), a.lambda_length, a.tee_length);
    }
  } else {
    if (a.data.empty()) fail(ErrorCode::InvalidArgument, "estimate-cov needs a data file or --exact");
    const TimeSeries ts = io::read_csv_file(a.data);
    const auto da = data_alphabet(ts, a.states);
    table = estimate_covariance_table(ts, da.alphabet, da.weights, da.language,
                                      {a.lambda_length, a.tee_length, env_threads()});
  }
  io::write_json_file(a.out, io::to_json(table));
  Report r(g);
  r.set("lambda_entries", table.lambda.size());
  r.set("tee_entries", table.tee.size());
  r.set("normalization", table.normalization);
  r.set("horizon", table.horizon);
  r.set("isa", kernels::name(kernels::active_isa()));
  r.emit();
  return kOk;
}

struct IdentifyArgs {
  std::string data, out, diagnostics;
  bool exact_cov = false;
  Index n = 1;
  std::size_t past = 1, states = 0;
  double ridge = 0.0;
};

int cmd_identify(const Globals& g, const IdentifyArgs& a) {
  RealizeConfig config;
  config.eps_rank = g.tol_rank;
  config.ridge = a.ridge;
  config.threads = env_threads();
  config.riccati.eps = g.tol_rank;
  RealizeResult res;
  std::vector<std::string> unidentifiable;
  if (a.exact_cov) {
    const CovarianceTable table = io::covariance_table_from_json(io::read_json_file(a.data));
    res = realize_from_table(table, a.n, a.past, config);
  } else {
    const TimeSeries ts = io::read_csv_file(a.data);
    const auto da = data_alphabet(ts, a.states);
    unidentifiable = da.unidentifiable;
    res = realize_from_data(ts, a.n, a.past, da.alphabet, da.weights, da.language, config);
  }
  io::write_json_file(a.out, io::to_json(res.model));
  Json diag = io::to_json(res.diagnostics);
  diag["unidentifiable"] = unidentifiable;
  diag["tol_rank"] = g.tol_rank;
  diag["ridge"] = a.ridge;
  if (!a.diagnostics.empty()) io::write_json_file(a.diagnostics, diag);
  Report r(g);
  r.set("dim", res.model.dim());
  r.set("hankel_condition", res.diagnostics.hankel_condition);
  r.set("gram_condition", res.diagnostics.gram_condition);
  r.set("samples", res.diagnostics.samples);
  r.set("tol_rank", g.tol_rank);
  r.emit();
  return kOk;
}

struct ReduceArgs {
  std::string model, out;
};

int cmd_reduce(const Globals& g, const ReduceArgs& a) {
  const Json j = io::read_json_file(a.model);
  const auto kind = io::detect_kind(j);
  Representation rep = kind == io::ModelKind::representation ? io::representation_from_json(j)
                                                              : associated_representation(load_gbs_like(j, kind));
  const Representation red = reduce_minimal(rep, g.tol_rank);
  if (!a.out.empty()) io::write_json_file(a.out, io::to_json(red));
  Report r(g);
  r.set("input_dim", rep.dim());
  r.set("minimal_dim", red.dim());
  r.set("tol_rank", g.tol_rank);
  r.emit();
  return kOk;
}

struct CheckArgs {
  std::string model;
  bool stability = false, minimality = false, reach = false, obs = false;
};

int cmd_check(const Globals& g, const CheckArgs& a) {
  const Json j = io::read_json_file(a.model);
  const auto kind = io::detect_kind(j);
  Report r(g);
  bool holds = true;
  r.set("type", io::to_string(kind));
  r.set("tol_rank", g.tol_rank);
  const bool any = a.stability || a.minimality || a.reach || a.obs;
  if (kind == io::ModelKind::gjmls) {
    const GjmlsModel h = io::gjmls_from_json(j);
    if (a.stability || !any) {
      const double rho = jmls_stability_radius(h);
      r.set("stability_radius", rho);
      r.set("stable", rho < 1.0 - kDefaultStabilityMargin);
      holds = holds && rho < 1.0 - kDefaultStabilityMargin;
    }
    if (a.reach || a.minimality) {
      const bool ok = gjmls_reach(h, g.tol_rank).full_rank;
      r.set("reachable", ok);
      holds = holds && ok;
    }
    if (a.obs || a.minimality) {
      const bool ok = gjmls_obs(h, g.tol_rank).full_rank;
      r.set("observable", ok);
      holds = holds && ok;
    }
  } else {
    Representation rep;
    std::vector<double> weights;
    std::vector<Matrix> a_mats;
    if (kind == io::ModelKind::representation) {
      rep = io::representation_from_json(j);
      a_mats = rep.A;
    } else {
      const GbsModel m = load_gbs_like(j, kind);
      a_mats = m.A;
      weights = m.weights.values();
      if (a.reach || a.obs || a.minimality) rep = associated_representation(m);
    }
    if (a.stability || !any) {
      const double rho = stability_radius(a_mats, weights);
      r.set("stability_radius", rho);
      r.set("stable", rho < 1.0 - kDefaultStabilityMargin);
      holds = holds && rho < 1.0 - kDefaultStabilityMargin;
    }
    if (a.reach || a.minimality) {
      const bool ok = is_reachable(rep, g.tol_rank);
      r.set("reachable", ok);
      holds = holds && ok;
    }
    if (a.obs || a.minimality) {
      const bool ok = is_observable(rep, g.tol_rank);
      r.set("observable", ok);
      holds = holds && ok;
    }
  }
  r.set("holds", holds);
  r.emit();
  return holds ? kOk : kPropertyFails;
}

struct CompareArgs {
  std::string first, second;
  double tol = 1e-7;
};

int cmd_compare(const Globals& g, const CompareArgs& a) {
  const Json j1 = io::read_json_file(a.first), j2 = io::read_json_file(a.second);
  const auto k1 = io::detect_kind(j1), k2 = io::detect_kind(j2);
  Report r(g);
  r.set("tolerance", a.tol);
  try {
    if (k1 == io::ModelKind::gjmls || k2 == io::ModelKind::gjmls) {
      if (k1 != k2) fail(ErrorCode::NotIsomorphic, "cannot compare a GJMLS with a non-GJMLS model");
      const auto t = gjmls_isomorphism(io::gjmls_from_json(j1), io::gjmls_from_json(j2), a.tol, g.tol_rank);
      r.set("isomorphic", true);
      r.set("T", matrices_json(t));
    } else {
      auto rep_of = [](const Json& j, io::ModelKind k) {
        return k == io::ModelKind::representation ? io::representation_from_json(j)
                                                  : associated_representation(load_gbs_like(j, k));
      };
      const Matrix t = find_isomorphism(rep_of(j1, k1), rep_of(j2, k2), a.tol, g.tol_rank);
      r.set("isomorphic", true);
      r.set("T", io::matrix_to_json(t));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotIsomorphic && e.code() != ErrorCode::NotMinimal) throw;
    r.set("isomorphic", false);
    r.set("reason", e.what());
    r.emit();
    return kPropertyFails;
  }
  r.emit();
  return kOk;
}

struct ConvertArgs {
  std::string model, out;
  bool to_gbs = false, to_gjmls = false, plain_output = false, blocked = false;
  std::size_t states = 0, check_length = 3;
};

int cmd_convert(const Globals& g, const ConvertArgs& a) {
  if (a.to_gbs == a.to_gjmls) fail(ErrorCode::InvalidArgument, "choose exactly one of --to-gbs and --to-gjmls");
  const Json j = io::read_json_file(a.model);
  const auto kind = io::detect_kind(j);
  Report r(g);
  double diff = 0.0;
  if (a.to_gbs) {
    if (kind != io::ModelKind::gjmls) fail(ErrorCode::InvalidArgument, "--to-gbs expects a GJMLS model");
    const GjmlsModel h = io::gjmls_from_json(j);
    const auto conv = gbs_from_gjmls(h);
    const GbsModel plain = plain_output(conv);
    io::write_json_file(a.out, io::to_json(a.plain_output ? plain : conv.gbs));
    diff = covariance_diff(gjmls_exact_covariances(h, a.check_length, 1), exact_table(plain, a.check_length, 1));
    r.set("letters", conv.gbs.letters());
    r.set("dim", conv.gbs.dim());
  } else {
    GbsModel m = load_gbs_like(j, kind);
    const std::size_t d = a.states > 0 ? a.states : states_in(m);
    GjmlsFromGbsOptions opts;
    opts.blocked_output = a.blocked;
    opts.blocked_noise = a.blocked;
    opts.eps = g.tol_rank;
    const GjmlsModel h = gjmls_from_gbs(m, chain_from_weights(m, d), opts);
    io::write_json_file(a.out, io::to_json(h));
    if (a.blocked) {
      const Index p = m.outputs() / static_cast<Index>(d);
      Matrix e(p, m.outputs());
      for (std::size_t q = 0; q < d; ++q) e.middleCols(static_cast<Index>(q) * p, p).setIdentity();
      m.C = e * m.C;
      m.D = e * m.D;
    }
    diff = covariance_diff(exact_table(m, a.check_length, 1), gjmls_exact_covariances(h, a.check_length, 1));
    r.set("dims", h.dims);
  }
  r.set("covariance_diff", diff);
  r.set("checked_length", a.check_length);
  r.emit();
  return kOk;
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnstableModel: return kUnstable;
    case ErrorCode::RankDeficient:
    case ErrorCode::SingularGram:
    case ErrorCode::InnovationNotFullRank:
    case ErrorCode::SingularSelection: return kRank;
    default: return kInvalid;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Realization and identification of generalized bilinear and jump-Markov linear systems"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--tol-rank", g.tol_rank, "relative numeric rank tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--json", g.json, "machine-readable report on standard output");
  app.add_flag("--quiet", g.quiet, "suppress the human-readable report");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate a GBS or GJMLS model to CSV");
  s->add_option("model", sim.model, "model JSON")->required();
  s->add_option("--kind", sim.kind, "GBS input process: linear, bilinear, iid, markov")->capture_default_str();
  s->add_option("--T", sim.horizon, "number of samples")->capture_default_str();
  s->add_option("--burn-in", sim.burn_in, "burn-in steps (default from the stability radius)");
  s->add_option("--out", sim.out, "output CSV")->required();
  s->add_flag("--record-state", sim.record_state, "keep the state trajectory (not written)");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate-cov", "estimate or compute a covariance table");
  e->add_option("data", est.data, "time series CSV");
  e->add_option("--exact", est.exact, "model JSON; compute exact covariances instead");
  e->add_option("--lambda-length", est.lambda_length, "longest word for Lambda")->capture_default_str();
  e->add_option("--tee-length", est.tee_length, "longest word for T")->capture_default_str();
  e->add_option("--states", est.states, "number of modes for theta-form data");
  e->add_option("--out", est.out, "output JSON")->required();

  IdentifyArgs idf;
  auto* i = app.add_subcommand("identify", "weak realization from data or a covariance table");
  i->add_option("data", idf.data, "time series CSV, or covariance JSON with --exact-cov")->required();
  i->add_option("--n", idf.n, "state dimension")->required();
  i->add_option("--N", idf.past, "regression word length")->required();
  i->add_flag("--exact-cov", idf.exact_cov, "input is a covariance table");
  i->add_option("--ridge", idf.ridge, "ridge added to the regression Gram matrix");
  i->add_option("--states", idf.states, "number of modes for theta-form data");
  i->add_option("--out", idf.out, "output model JSON")->required();
  i->add_option("--diagnostics", idf.diagnostics, "output diagnostics JSON");

  ReduceArgs red;
  auto* r = app.add_subcommand("reduce", "minimal representation");
  r->add_option("model", red.model, "representation or GBS JSON")->required();
  r->add_option("--out", red.out, "output JSON");

  CheckArgs chk;
  auto* c = app.add_subcommand("check", "stability and minimality checks");
  c->add_option("model", chk.model, "model JSON")->required();
  c->add_flag("--stability", chk.stability);
  c->add_flag("--minimality", chk.minimality);
  c->add_flag("--reach", chk.reach);
  c->add_flag("--obs", chk.obs);

  CompareArgs cmp;
  auto* m = app.add_subcommand("compare", "isomorphism between two models");
  m->add_option("first", cmp.first)->required();
  m->add_option("second", cmp.second)->required();
  m->add_option("--tol", cmp.tol, "relation tolerance")->capture_default_str();

  ConvertArgs cnv;
  auto* v = app.add_subcommand("convert", "GJMLS to GBS and back");
  v->add_option("model", cnv.model, "model JSON")->required();
  v->add_flag("--to-gbs", cnv.to_gbs);
  v->add_flag("--to-gjmls", cnv.to_gjmls);
  v->add_flag("--plain-output", cnv.plain_output, "with --to-gbs: output y instead of the per-mode blocks");
  v->add_flag("--blocked", cnv.blocked, "with --to-gjmls: input output and noise are per-mode blocks");
  v->add_option("--states", cnv.states, "number of modes (default from the letter names)");
  v->add_option("--check-length", cnv.check_length, "word length for the covariance check")->capture_default_str();
  v->add_option("--out", cnv.out, "output JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (s->parsed()) return cmd_simulate(g, sim);
    if (e->parsed()) return cmd_estimate(g, est);
    if (i->parsed()) return cmd_identify(g, idf);
    if (r->parsed()) return cmd_reduce(g, red);
    if (c->parsed()) return cmd_check(g, chk);
    if (m->parsed()) return cmd_compare(g, cmp);
    if (v->parsed()) return cmd_convert(g, cnv);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return exit_for(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
