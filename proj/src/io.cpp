#include "jmlsr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "jmlsr/error.hpp"

namespace jmlsr::io {

namespace {

[[noreturn]] void parse_fail(const std::string& what) { fail(ErrorCode::ParseError, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) parse_fail(where + ": non-finite value");
  return x;
}

Index integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) parse_fail(where + ": expected a nonnegative integer");
  return static_cast<Index>(j.get<std::int64_t>());
}

Json names_json(const Alphabet& a) {
  Json out = Json::array();
  for (const auto& n : a.names()) out.push_back(n);
  return out;
}

Alphabet alphabet_from(const Json& j) {
  if (!j.is_array()) parse_fail("alphabet must be an array of strings");
  std::vector<std::string> names;
  for (const auto& e : j) {
    if (!e.is_string()) parse_fail("alphabet must be an array of strings");
    names.push_back(e.get<std::string>());
  }
  try {
    return Alphabet(std::move(names));
  } catch (const Error& e) {
    parse_fail(e.what());
  }
}

Json letter_map(const Alphabet& a, const std::vector<Matrix>& ms) {
  Json out = Json::object();
  for (std::size_t s = 0; s < ms.size(); ++s) out[a.name(static_cast<Letter>(s))] = matrix_to_json(ms[s]);
  return out;
}

std::vector<Matrix> letter_matrices(const Json& j, const Alphabet& a, Index rows, Index cols, const char* what) {
  if (!j.is_object()) parse_fail(std::string(what) + " must be an object keyed by letter");
  std::vector<Matrix> out;
  for (const auto& name : a.names()) {
    if (!j.contains(name)) parse_fail(std::string(what) + " has no entry for letter '" + name + "'");
    out.push_back(matrix_from_json(j.at(name), rows, cols));
  }
  if (j.size() != a.size()) parse_fail(std::string(what) + " has entries for unknown letters");
  return out;
}

Json weights_json(const Alphabet& a, const LetterWeights& w) {
  Json out = Json::object();
  for (std::size_t s = 0; s < a.size(); ++s) out[a.name(static_cast<Letter>(s))] = w[static_cast<Letter>(s)];
  return out;
}

LetterWeights weights_from(const Json& j, const Alphabet& a) {
  if (!j.contains("weights")) return LetterWeights::ones(a.size());
  const Json& w = j.at("weights");
  std::vector<double> p;
  for (const auto& name : a.names()) {
    if (!w.contains(name)) parse_fail("weights has no entry for letter '" + name + "'");
    p.push_back(number(w.at(name), "weights"));
  }
  try {
    return LetterWeights(std::move(p));
  } catch (const Error& e) {
    parse_fail(e.what());
  }
}

Json language_json(const Alphabet& a, const AdmissibleLanguage& lang) {
  Json out = Json::array();
  for (const auto& [x, y] : lang.pairs()) out.push_back(Json::array({a.name(x), a.name(y)}));
  return out;
}

AdmissibleLanguage language_from(const Json& j, const Alphabet& a) {
  if (!j.contains("language_pairs")) return AdmissibleLanguage::full(a.size());
  std::vector<std::pair<Letter, Letter>> pairs;
  for (const auto& e : j.at("language_pairs")) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      parse_fail("language_pairs entries must be [letter, letter]");
    try {
      pairs.emplace_back(a.at(e[0].get<std::string>()), a.at(e[1].get<std::string>()));
    } catch (const Error& err) {
      parse_fail(err.what());
    }
  }
  return AdmissibleLanguage::from_pairs(a.size(), pairs);
}

Index optional_dim(const Json& j, const char* key) { return j.contains(key) ? integer(j.at(key), key) : -1; }

Index rows_of(const Json& j) { return j.is_array() ? static_cast<Index>(j.size()) : -1; }

Index cols_of(const Json& j) {
  return j.is_array() && !j.empty() && j[0].is_array() ? static_cast<Index>(j[0].size()) : -1;
}

template <class F>
auto wrap(F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    parse_fail(e.what());
  }
}

std::string pair_key(std::size_t q1, std::size_t q2) { return std::to_string(q1 + 1) + "," + std::to_string(q2 + 1); }

void line_col(const std::string& text, std::size_t byte, std::size_t& line, std::size_t& col) {
  line = 1;
  col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(std::move(row));
  }
  return out;
}

Matrix matrix_from_json(const Json& j, Index rows, Index cols) {
  if (!j.is_array()) parse_fail("matrix must be an array of rows");
  const Index r = static_cast<Index>(j.size());
  Index c = cols;
  if (r > 0) {
    if (!j[0].is_array()) parse_fail("matrix rows must be arrays");
    c = static_cast<Index>(j[0].size());
  }
  if (c < 0) c = 0;
  if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols))
    parse_fail("matrix has shape " + std::to_string(r) + "x" + std::to_string(c) + ", expected " +
               std::to_string(rows) + "x" + std::to_string(cols));
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) parse_fail("matrix rows have unequal length");
    for (Index k = 0; k < c; ++k) m(i, k) = number(row[static_cast<std::size_t>(k)], "matrix entry");
  }
  return m;
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::representation: return "representation";
    case ModelKind::gbs: return "gbs";
    case ModelKind::gjmls: return "gjmls";
    case ModelKind::weak_realization: return "weak_realization";
    case ModelKind::covariance_table: return "covariance_table";
  }
  return "unknown";
}

ModelKind detect_kind(const Json& j) {
  if (!j.is_object()) parse_fail("expected a JSON object");
  if (j.contains("type")) {
    const std::string t = j.at("type").is_string() ? j.at("type").get<std::string>() : "";
    for (auto k : {ModelKind::representation, ModelKind::gbs, ModelKind::gjmls, ModelKind::weak_realization,
                   ModelKind::covariance_table})
      if (t == to_string(k)) return k;
    parse_fail("unknown model type '" + t + "'");
  }
  if (j.contains("lambda")) return ModelKind::covariance_table;
  if (j.contains("states")) return ModelKind::gjmls;
  if (j.contains("P") && j.contains("K")) return ModelKind::weak_realization;
  if (j.contains("K")) return ModelKind::gbs;
  return ModelKind::representation;
}

Json to_json(const Representation& rep) {
  Json out;
  out["type"] = "representation";
  out["alphabet"] = names_json(rep.alphabet);
  out["dim"] = rep.dim();
  out["p"] = rep.outputs();
  out["A"] = letter_map(rep.alphabet, rep.A);
  Json b = Json::object();
  for (std::size_t j = 0; j < rep.indices(); ++j) {
    Json col = Json::array();
    for (Index i = 0; i < rep.dim(); ++i) col.push_back(rep.B(i, static_cast<Index>(j)));
    b[rep.index_labels[j]] = std::move(col);
  }
  out["B"] = std::move(b);
  out["C"] = matrix_to_json(rep.C);
  return out;
}

Representation representation_from_json(const Json& j) {
  return wrap([&] {
    Representation rep;
    rep.alphabet = alphabet_from(field(j, "alphabet"));
    const Index n = integer(field(j, "dim"), "dim");
    const Index p = optional_dim(j, "p");
    rep.C = matrix_from_json(field(j, "C"), p, n);
    rep.A = letter_matrices(field(j, "A"), rep.alphabet, n, n, "A");
    const Json& b = field(j, "B");
    if (!b.is_object()) parse_fail("B must be an object keyed by index");
    rep.B = Matrix(n, static_cast<Index>(b.size()));
    Index col = 0;
    for (const auto& [label, v] : b.items()) {
      if (!v.is_array() || static_cast<Index>(v.size()) != n) parse_fail("B['" + label + "'] must have dim entries");
      for (Index i = 0; i < n; ++i) rep.B(i, col) = number(v[static_cast<std::size_t>(i)], "B");
      rep.index_labels.push_back(label);
      ++col;
    }
    rep.validate();
    return rep;
  });
}

Json to_json(const GbsModel& model) {
  Json out;
  out["type"] = "gbs";
  out["alphabet"] = names_json(model.alphabet);
  out["dim"] = model.dim();
  out["p"] = model.outputs();
  out["m"] = model.noise_dim();
  out["weights"] = weights_json(model.alphabet, model.weights);
  out["A"] = letter_map(model.alphabet, model.A);
  out["K"] = letter_map(model.alphabet, model.K);
  out["C"] = matrix_to_json(model.C);
  out["D"] = matrix_to_json(model.D);
  out["Q"] = letter_map(model.alphabet, model.Q);
  out["language_pairs"] = language_json(model.alphabet, model.language);
  return out;
}

GbsModel gbs_from_json(const Json& j) {
  return wrap([&] {
    GbsModel g;
    g.alphabet = alphabet_from(field(j, "alphabet"));
    const Index n = integer(field(j, "dim"), "dim");
    Index p = optional_dim(j, "p"), m = optional_dim(j, "m");
    if (p < 0) p = rows_of(field(j, "C"));
    if (m < 0) m = cols_of(field(j, "D"));
    g.C = matrix_from_json(field(j, "C"), p, n);
    g.D = matrix_from_json(field(j, "D"), p, m);
    m = g.D.cols();
    g.A = letter_matrices(field(j, "A"), g.alphabet, n, n, "A");
    g.K = letter_matrices(field(j, "K"), g.alphabet, n, m, "K");
    g.Q = letter_matrices(field(j, "Q"), g.alphabet, m, m, "Q");
    g.weights = weights_from(j, g.alphabet);
    g.language = language_from(j, g.alphabet);
    g.validate();
    return g;
  });
}

Json to_json(const WeakRealization& model) {
  Json out = to_json(model.to_gbs());
  out["type"] = "weak_realization";
  out["P"] = letter_map(model.alphabet, model.P);
  return out;
}

WeakRealization weak_realization_from_json(const Json& j) {
  return wrap([&] {
    const GbsModel g = gbs_from_json(j);
    WeakRealization wr{g.alphabet, g.weights, g.language, g.A, g.K, {}, g.Q, g.C, g.D};
    wr.P = letter_matrices(field(j, "P"), g.alphabet, g.dim(), g.dim(), "P");
    return wr;
  });
}

Json to_json(const GjmlsModel& model) {
  Json out;
  const std::size_t d = model.states();
  out["type"] = "gjmls";
  out["states"] = d;
  out["P"] = matrix_to_json(model.chain.P);
  out["dims"] = model.dims;
  out["p"] = model.outputs();
  out["m"] = model.noise_dim();
  Json mm = Json::object(), bb = Json::object(), cc = Json::object(), dd = Json::object(), qq = Json::object();
  for (std::size_t q1 = 0; q1 < d; ++q1)
    for (std::size_t q2 = 0; q2 < d; ++q2) {
      if (model.prob(q1, q2) <= 0.0) continue;
      mm[pair_key(q1, q2)] = matrix_to_json(model.m(q1, q2));
      bb[pair_key(q1, q2)] = matrix_to_json(model.b(q1, q2));
    }
  for (std::size_t q = 0; q < d; ++q) {
    const std::string k = std::to_string(q + 1);
    cc[k] = matrix_to_json(model.C[q]);
    dd[k] = matrix_to_json(model.D[q]);
    qq[k] = matrix_to_json(model.Q[q]);
  }
  out["M"] = std::move(mm);
  out["B"] = std::move(bb);
  out["C"] = std::move(cc);
  out["D"] = std::move(dd);
  out["Q"] = std::move(qq);
  return out;
}

GjmlsModel gjmls_from_json(const Json& j) {
  return wrap([&] {
    GjmlsModel h;
    const auto d = static_cast<std::size_t>(integer(field(j, "states"), "states"));
    if (d == 0) parse_fail("states must be positive");
    const Matrix p = matrix_from_json(field(j, "P"), static_cast<Index>(d), static_cast<Index>(d));
    try {
      h.chain = MarkovChain::from_transitions(p);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Reducible) throw;
      parse_fail(e.what());
    }
    const Json& dims = field(j, "dims");
    if (!dims.is_array() || dims.size() != d) parse_fail("dims must list one dimension per mode");
    for (const auto& e : dims) h.dims.push_back(integer(e, "dims"));
    const Json& cj = field(j, "C");
    const Json& dj = field(j, "D");
    const Json& qj = field(j, "Q");
    auto mode_entry = [&](const Json& obj, std::size_t q, const char* what) -> const Json& {
      const std::string k = std::to_string(q + 1);
      if (!obj.is_object() || !obj.contains(k)) parse_fail(std::string(what) + " has no entry for mode " + k);
      return obj.at(k);
    };
    Index pdim = optional_dim(j, "p"), m = optional_dim(j, "m");
    if (pdim < 0) pdim = rows_of(mode_entry(dj, 0, "D"));
    if (m < 0) m = cols_of(mode_entry(dj, 0, "D"));
    for (std::size_t q = 0; q < d; ++q) {
      h.C.push_back(matrix_from_json(mode_entry(cj, q, "C"), pdim, h.dims[q]));
      h.D.push_back(matrix_from_json(mode_entry(dj, q, "D"), pdim, m));
      m = h.D.back().cols();
      h.Q.push_back(matrix_from_json(mode_entry(qj, q, "Q"), m, m));
    }
    const Json& mj = field(j, "M");
    const Json& bj = field(j, "B");
    for (std::size_t q1 = 0; q1 < d; ++q1)
      for (std::size_t q2 = 0; q2 < d; ++q2) {
        const std::string k = pair_key(q1, q2);
        if (h.prob(q1, q2) <= 0.0) {
          h.M.push_back(Matrix::Zero(h.dims[q2], h.dims[q1]));
          h.B.push_back(Matrix::Zero(h.dims[q2], m));
          continue;
        }
        if (!mj.contains(k) || !bj.contains(k)) parse_fail("M and B need an entry for transition " + k);
        h.M.push_back(matrix_from_json(mj.at(k), h.dims[q2], h.dims[q1]));
        h.B.push_back(matrix_from_json(bj.at(k), h.dims[q2], m));
      }
    h.validate();
    return h;
  });
}

Json to_json(const CovarianceTable& table) {
  Json out;
  out["type"] = "covariance_table";
  Json lam = Json::object();
  for (const auto& [w, m] : table.lambda) lam[to_string(w, table.alphabet)] = matrix_to_json(m);
  Json tee = Json::object();
  for (const auto& [k, m] : table.tee)
    tee[to_string(k.first, table.alphabet) + "|" + to_string(k.second, table.alphabet)] = matrix_to_json(m);
  out["lambda"] = std::move(lam);
  out["tee"] = std::move(tee);
  Json meta;
  meta["alphabet"] = names_json(table.alphabet);
  meta["weights"] = weights_json(table.alphabet, table.weights);
  meta["language_pairs"] = language_json(table.alphabet, table.language);
  meta["p"] = table.outputs;
  meta["normalization"] = table.normalization;
  meta["horizon"] = table.horizon;
  out["meta"] = std::move(meta);
  return out;
}

CovarianceTable covariance_table_from_json(const Json& j) {
  return wrap([&] {
    CovarianceTable t;
    const Json& meta = field(j, "meta");
    t.alphabet = alphabet_from(field(meta, "alphabet"));
    t.weights = weights_from(meta, t.alphabet);
    t.language = language_from(meta, t.alphabet);
    t.outputs = integer(field(meta, "p"), "p");
    if (meta.contains("normalization")) t.normalization = meta.at("normalization").get<std::string>();
    if (meta.contains("horizon")) t.horizon = meta.at("horizon").get<std::int64_t>();
    auto word = [&](const std::string& s) {
      try {
        return parse_word(s, t.alphabet);
      } catch (const Error& e) {
        parse_fail(e.what());
      }
    };
    const Json& lam = field(j, "lambda");
    for (const auto& [k, v] : lam.items()) {
      const Word w = word(k);
      const Index p = t.outputs;
      t.lambda.emplace(w, matrix_from_json(v, p, p));
    }
    const Json& tee = field(j, "tee");
    for (const auto& [k, v] : tee.items()) {
      const auto bar = k.find('|');
      if (bar == std::string::npos) parse_fail("tee keys must be 'v|w'");
      t.tee.emplace(std::make_pair(word(k.substr(0, bar)), word(k.substr(bar + 1))),
                    matrix_from_json(v, t.outputs, t.outputs));
    }
    return t;
  });
}

Json to_json(const RealizeDiagnostics& diag) {
  auto vec_json = [](const Vector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
  };
  Json out;
  out["hankel_singular_values"] = vec_json(diag.hankel_singular_values);
  out["gram_eigenvalues"] = vec_json(diag.gram_eigenvalues);
  out["hankel_condition"] = diag.hankel_condition;
  out["gram_condition"] = diag.gram_condition;
  out["samples"] = diag.samples;
  out["regression_words"] = diag.regression_words;
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 0, col = 0;
    line_col(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    parse_fail("JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

std::string dump(const Json& j) { return j.dump(2); }

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << dump(j) << '\n';
}

void write_csv(std::ostream& out, const TimeSeries& ts) {
  ts.validate();
  out << 't';
  for (Index k = 0; k < ts.outputs(); ++k) out << ",y_" << k + 1;
  if (ts.theta_form()) {
    out << ",theta";
  } else {
    for (const auto& n : ts.input_alphabet.names()) out << ",u_" << n;
  }
  out << '\n';
  for (Index t = 0; t < ts.horizon(); ++t) {
    out << t;
    for (Index k = 0; k < ts.outputs(); ++k) out << ',' << format_double(ts.y(t, k));
    if (ts.theta_form()) {
      out << ',' << ts.theta[static_cast<std::size_t>(t)] + 1;
    } else {
      for (Index k = 0; k < ts.u.cols(); ++k) out << ',' << format_double(ts.u(t, k));
    }
    out << '\n';
  }
}

TimeSeries read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) parse_fail("CSV is empty");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "t") parse_fail("CSV line 1, column 1: header must start with 't'");
  Index p = 0;
  std::size_t c = 1;
  while (c < header.size() && header[c] == "y_" + std::to_string(p + 1)) {
    ++p;
    ++c;
  }
  bool theta = false;
  std::vector<std::string> inputs;
  if (c < header.size() && header[c] == "theta" && c + 1 == header.size()) {
    theta = true;
  } else {
    for (; c < header.size(); ++c) {
      if (header[c].rfind("u_", 0) != 0)
        parse_fail("CSV line 1, field " + std::to_string(c + 1) + ": unexpected column '" + header[c] + "'");
      inputs.push_back(header[c].substr(2));
    }
  }
  if (p == 0) parse_fail("CSV line 1: no output columns");

  std::vector<double> y, u;
  TimeSeries ts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      parse_fail("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
    for (std::size_t k = 1; k < cells.size(); ++k) {
      const std::string& s = cells[k];
      double x = 0.0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), x);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(x))
        parse_fail("CSV line " + std::to_string(lineno) + ", field " + std::to_string(k + 1) + ": bad number '" + s + "'");
      if (k <= static_cast<std::size_t>(p)) {
        y.push_back(x);
      } else if (theta) {
        if (x < 1.0 || x != std::floor(x))
          parse_fail("CSV line " + std::to_string(lineno) + ": theta must be a positive integer");
        ts.theta.push_back(static_cast<int>(x) - 1);
      } else {
        u.push_back(x);
      }
    }
  }
  const Index t_len = static_cast<Index>(y.size()) / p;
  ts.y = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(y.data(), t_len, p);
  if (!theta) {
    try {
      ts.input_alphabet = Alphabet(inputs);
    } catch (const Error& e) {
      parse_fail(e.what());
    }
    const auto d = static_cast<Index>(inputs.size());
    ts.u = d == 0 ? Matrix(t_len, 0)
                  : Matrix(Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                        u.data(), t_len, d));
  }
  ts.validate();
  return ts;
}

void write_csv_file(const std::string& path, const TimeSeries& ts) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  write_csv(out, ts);
}

TimeSeries read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace jmlsr::io
