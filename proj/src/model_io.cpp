#include "gpf/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gpf {

using nlohmann::json;

namespace {

std::string child(const std::string& path, const std::string& key) {
  // JSON pointer escaping
  std::string escaped;
  for (char c : key) {
    if (c == '~') escaped += "~0";
    else if (c == '/') escaped += "~1";
    else escaped += c;
  }
  return path + "/" + escaped;
}

std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

[[noreturn]] void fail(const std::string& path, const std::string& message,
                       ErrorCode code = ErrorCode::ValidationError) {
  throw Error(code, "at " + (path.empty() ? std::string("/") : path) + ": " + message);
}

// Re-raises library invariant violations as validation errors located at `path`.
template <typename F>
auto located(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ValidationError || e.code() == ErrorCode::DanglingReference) throw;
    fail(path, e.what());
  }
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

const json& object_at(const json& value, const std::string& path) {
  if (!value.is_object()) fail(path, "expected an object");
  return value;
}

std::string string_at(const json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

double number_at(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

std::int64_t integer_at(const json& value, const std::string& path) {
  if (!value.is_number_integer()) fail(path, "expected an integer");
  return value.get<std::int64_t>();
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(child(path, key), "unknown field");
  }
}

std::complex<double> complex_at(const json& value, const std::string& path) {
  if (value.is_number()) return {value.get<double>(), 0.0};
  if (!value.is_array() || value.size() != 2) fail(path, "expected a complex number [re, im]");
  return {number_at(value[0], child(path, 0)), number_at(value[1], child(path, 1))};
}

ComplexMatrix<double> matrix_at(const json& value, const std::string& path) {
  if (!value.is_array() || value.empty()) fail(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Index>(value.size());
  ComplexMatrix<double> m(rows, rows);
  for (Index r = 0; r < rows; ++r) {
    const auto rp = child(path, static_cast<std::size_t>(r));
    const json& row = value[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != rows) fail(rp, "expected a square matrix");
    for (Index c = 0; c < rows; ++c)
      m(r, c) = complex_at(row[static_cast<std::size_t>(c)], child(rp, static_cast<std::size_t>(c)));
  }
  return m;
}

ComplexMatrix<double> rect_matrix_at(const json& value, Index rows, Index cols, const std::string& path) {
  if (!value.is_array() || static_cast<Index>(value.size()) != rows)
    fail(path, "expected " + std::to_string(rows) + " rows");
  ComplexMatrix<double> m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto rp = child(path, static_cast<std::size_t>(r));
    const json& row = value[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      fail(rp, "expected " + std::to_string(cols) + " columns");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = complex_at(row[static_cast<std::size_t>(c)], child(rp, static_cast<std::size_t>(c)));
  }
  return m;
}

ComplexVector<double> vector_at(const json& value, const std::string& path) {
  if (!value.is_array() || value.empty()) fail(path, "expected a non-empty array");
  ComplexVector<double> v(static_cast<Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) v(static_cast<Index>(i)) = complex_at(value[i], child(path, i));
  return v;
}

template <typename Map>
const typename Map::mapped_type& lookup(const Map& m, const std::string& name, const char* kind,
                                        const std::string& path = {}) {
  auto it = m.find(name);
  if (it == m.end()) {
    const std::string msg = std::string("no ") + kind + " named '" + name + "'";
    if (path.empty()) throw Error(ErrorCode::DanglingReference, msg);
    fail(path, msg, ErrorCode::DanglingReference);
  }
  return it->second;
}

// Weights keyed by atom label; missing labels are zero.
Vector<double> labelled_weights(const json& value, const FiniteSpace& space, const std::string& path) {
  object_at(value, path);
  Vector<double> w = Vector<double>::Zero(space.size());
  for (const auto& [label, x] : value.items()) {
    auto i = space.find(label);
    if (!i) fail(child(path, label), "unknown atom '" + label + "'");
    w(*i) = number_at(x, child(path, label));
  }
  return w;
}

// Stochastic rows keyed by input label; validated row by row so that errors
// point at the offending row.
Matrix<double> stochastic_rows(const json& value, const FiniteSpace& input, const FiniteSpace& columns,
                               const std::string& path) {
  object_at(value, path);
  const double tol = default_tolerances().weight;
  Matrix<double> m(input.size(), columns.size());
  for (const auto& [label, _] : value.items())
    if (!input.find(label)) fail(child(path, label), "unknown input atom '" + label + "'");
  for (Index t = 0; t < input.size(); ++t) {
    const auto rp = child(path, input.label(t));
    auto it = value.find(input.label(t));
    if (it == value.end()) fail(rp, "missing row");
    Vector<double> row = labelled_weights(*it, columns, rp);
    if ((row.array() < -tol).any() || (row.array() > 1.0 + tol).any()) fail(rp, "entries must lie in [0, 1]");
    if (std::abs(row.sum() - 1.0) > tol) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", row.sum());
      fail(rp, std::string("row sums to ") + buf + ", not 1");
    }
    m.row(t) = row.transpose();
  }
  return m;
}

void parse_quantum(const json& q, ModelFile& model) {
  const std::string base = "/quantum";
  object_at(q, base);
  only_keys(q, {"dim", "densities", "povms", "qeos", "superoperators"}, base);
  auto& out = model.quantum;
  if (q.contains("dim")) {
    out.dim = integer_at(q["dim"], child(base, "dim"));
    if (*out.dim < 1) fail(child(base, "dim"), "dimension must be positive");
  }
  auto check_dim = [&](Index d, const std::string& path) {
    if (out.dim && d != *out.dim) fail(path, "dimension " + std::to_string(d) + " differs from quantum.dim");
  };

  if (q.contains("densities")) {
    const auto sp = child(base, "densities");
    for (const auto& [name, value] : object_at(q["densities"], sp).items()) {
      const auto p = child(sp, name);
      auto m = matrix_at(value, p);
      check_dim(m.rows(), p);
      out.densities.emplace(name, located(p, [&] { return DensityMatrix(m); }));
    }
  }
  if (q.contains("povms")) {
    const auto sp = child(base, "povms");
    for (const auto& [name, value] : object_at(q["povms"], sp).items()) {
      const auto p = child(sp, name);
      only_keys(value, {"outcome", "effects"}, p);
      const auto outcome_name = string_at(field(value, "outcome", p), child(p, "outcome"));
      const FiniteSpace& outcome = lookup(model.spaces, outcome_name, "space", child(p, "outcome"));
      const auto ep = child(p, "effects");
      const json& effects = object_at(field(value, "effects", p), ep);
      std::vector<ComplexMatrix<double>> mats;
      for (const auto& label : outcome.atoms()) {
        auto it = effects.find(label);
        if (it == effects.end()) fail(ep, "missing effect for outcome '" + label + "'");
        mats.push_back(matrix_at(*it, child(ep, label)));
        check_dim(mats.back().rows(), child(ep, label));
      }
      for (const auto& [label, _] : effects.items())
        if (!outcome.find(label)) fail(child(ep, label), "unknown outcome '" + label + "'");
      out.povms.emplace(name, PovmEntry{outcome_name, located(p, [&] {
                                          try {
                                            return POVM(outcome, mats);
                                          } catch (const Error& e) {
                                            throw Error(e.code(), "povm '" + name + "': " + e.detail());
                                          }
                                        })});
    }
  }
  if (q.contains("qeos")) {
    const auto sp = child(base, "qeos");
    for (const auto& [name, value] : object_at(q["qeos"], sp).items()) {
      const auto p = child(sp, name);
      only_keys(value, {"outcome", "prepared", "operators"}, p);
      const auto outcome_name = string_at(field(value, "outcome", p), child(p, "outcome"));
      const FiniteSpace& outcome = lookup(model.spaces, outcome_name, "space", child(p, "outcome"));
      const auto pp = child(p, "prepared");
      const json& prepared_json = field(value, "prepared", p);
      if (!prepared_json.is_array() || prepared_json.empty()) fail(pp, "expected a non-empty array of vectors");
      std::vector<PureState> prepared;
      for (std::size_t j = 0; j < prepared_json.size(); ++j)
        prepared.push_back(located(child(pp, j), [&] { return PureState(vector_at(prepared_json[j], child(pp, j))); }));
      const auto op = child(p, "operators");
      const json& ops = object_at(field(value, "operators", p), op);
      for (const auto& [label, _] : ops.items())
        if (!outcome.find(label)) fail(child(op, label), "unknown outcome '" + label + "'");
      std::vector<std::vector<ComplexMatrix<double>>> operators;
      for (const auto& label : outcome.atoms()) {
        const auto lp = child(op, label);
        auto it = ops.find(label);
        if (it == ops.end()) fail(op, "missing operators for outcome '" + label + "'");
        if (!it->is_array() || it->size() != prepared.size())
          fail(lp, "expected one operator per prepared state");
        auto& row = operators.emplace_back();
        for (std::size_t j = 0; j < prepared.size(); ++j) {
          row.push_back(matrix_at((*it)[j], child(lp, j)));
          check_dim(row.back().rows(), child(lp, j));
        }
      }
      out.qeos.emplace(name, QeoEntry{outcome_name, located(p, [&] {
                                        return QuantumExtendedObservable(outcome, prepared, operators);
                                      })});
    }
  }
  if (q.contains("superoperators")) {
    const auto sp = child(base, "superoperators");
    for (const auto& [name, value] : object_at(q["superoperators"], sp).items()) {
      const auto p = child(sp, name);
      only_keys(value, {"dim_in", "dim_out", "action"}, p);
      const auto din = integer_at(field(value, "dim_in", p), child(p, "dim_in"));
      const auto dout = integer_at(field(value, "dim_out", p), child(p, "dim_out"));
      if (din < 1 || dout < 1) fail(p, "dimensions must be positive");
      auto action = rect_matrix_at(field(value, "action", p), dout * dout, din * din, child(p, "action"));
      out.superoperators.emplace(name, located(p, [&] { return SuperOperator(din, dout, action); }));
    }
  }
}

}  // namespace

ModelFile parse_model(const json& doc) {
  ModelFile model;
  object_at(doc, "");
  only_keys(doc, {"spaces", "states", "maps", "kernels", "extended", "embeddings", "quantum"}, "");

  if (doc.contains("spaces")) {
    for (const auto& [name, value] : object_at(doc["spaces"], "/spaces").items()) {
      const auto p = child("/spaces", name);
      if (!value.is_array()) fail(p, "expected an array of atom labels");
      std::vector<std::string> atoms;
      for (std::size_t i = 0; i < value.size(); ++i) atoms.push_back(string_at(value[i], child(p, i)));
      model.spaces.emplace(name, located(p, [&] { return FiniteSpace(atoms); }));
    }
  }
  auto space_ref = [&](const json& obj, const char* key, const std::string& p) -> std::pair<std::string, FiniteSpace> {
    auto name = string_at(field(obj, key, p), child(p, key));
    return {name, lookup(model.spaces, name, "space", child(p, key))};
  };

  if (doc.contains("states")) {
    for (const auto& [name, value] : object_at(doc["states"], "/states").items()) {
      const auto p = child("/states", name);
      only_keys(value, {"space", "weights"}, p);
      auto [sname, space] = space_ref(value, "space", p);
      auto w = labelled_weights(field(value, "weights", p), space, child(p, "weights"));
      model.states.emplace(name, StateEntry{sname, located(child(p, "weights"), [&] { return InformationState(space, w); })});
    }
  }
  if (doc.contains("maps")) {
    for (const auto& [name, value] : object_at(doc["maps"], "/maps").items()) {
      const auto p = child("/maps", name);
      only_keys(value, {"source", "target", "assign"}, p);
      auto [src_name, src] = space_ref(value, "source", p);
      auto [dst_name, dst] = space_ref(value, "target", p);
      const auto ap = child(p, "assign");
      const json& assign = object_at(field(value, "assign", p), ap);
      std::vector<Index> a;
      for (const auto& label : src.atoms()) {
        auto it = assign.find(label);
        if (it == assign.end()) fail(ap, "atom '" + label + "' is not assigned");
        const auto target_label = string_at(*it, child(ap, label));
        auto t = dst.find(target_label);
        if (!t) fail(child(ap, label), "unknown target atom '" + target_label + "'");
        a.push_back(*t);
      }
      for (const auto& [label, _] : assign.items())
        if (!src.find(label)) fail(child(ap, label), "unknown source atom '" + label + "'");
      model.maps.emplace(name, MapEntry{src_name, dst_name, MeasurableMap(src, dst, a)});
    }
  }
  if (doc.contains("kernels")) {
    for (const auto& [name, value] : object_at(doc["kernels"], "/kernels").items()) {
      const auto p = child("/kernels", name);
      only_keys(value, {"input", "outcome", "rows"}, p);
      auto [in_name, in] = space_ref(value, "input", p);
      auto [out_name, out] = space_ref(value, "outcome", p);
      auto m = stochastic_rows(field(value, "rows", p), in, out, child(p, "rows"));
      model.kernels.emplace(name, KernelEntry{in_name, out_name, located(p, [&] { return Kernel(in, out, m); })});
    }
  }
  if (doc.contains("extended")) {
    for (const auto& [name, value] : object_at(doc["extended"], "/extended").items()) {
      const auto p = child("/extended", name);
      only_keys(value, {"input", "outcome", "output", "rows"}, p);
      auto [in_name, in] = space_ref(value, "input", p);
      auto [w_name, w] = space_ref(value, "outcome", p);
      auto [o_name, o] = space_ref(value, "output", p);
      const FiniteSpace compound = located(p, [&] { return FiniteSpace::product(w, o); });
      auto m = stochastic_rows(field(value, "rows", p), in, compound, child(p, "rows"));
      model.extended.emplace(
          name, ExtendedEntry{in_name, w_name, o_name, located(p, [&] { return ExtendedKernel(in, w, o, m); })});
    }
  }
  if (doc.contains("embeddings")) {
    for (const auto& [name, value] : object_at(doc["embeddings"], "/embeddings").items()) {
      const auto p = child("/embeddings", name);
      only_keys(value, {"space", "vectors", "normalization"}, p);
      auto [sname, space] = space_ref(value, "space", p);
      const auto vp = child(p, "vectors");
      const json& vectors = object_at(field(value, "vectors", p), vp);
      Matrix<double> cols;
      for (Index t = 0; t < space.size(); ++t) {
        const auto& label = space.label(t);
        auto it = vectors.find(label);
        if (it == vectors.end()) fail(vp, "missing vector for atom '" + label + "'");
        if (!it->is_array() || it->empty()) fail(child(vp, label), "expected a non-empty array");
        if (t == 0) cols.resize(static_cast<Index>(it->size()), space.size());
        if (static_cast<Index>(it->size()) != cols.rows()) fail(child(vp, label), "inconsistent dimension");
        for (std::size_t i = 0; i < it->size(); ++i)
          cols(static_cast<Index>(i), t) = number_at((*it)[i], child(child(vp, label), i));
      }
      for (const auto& [label, _] : vectors.items())
        if (!space.find(label)) fail(child(vp, label), "unknown atom '" + label + "'");
      std::optional<Vector<double>> norm;
      if (value.contains("normalization")) {
        const auto np = child(p, "normalization");
        const json& n = value["normalization"];
        if (!n.is_array() || static_cast<Index>(n.size()) != cols.rows()) fail(np, "wrong length");
        norm = Vector<double>(cols.rows());
        for (std::size_t i = 0; i < n.size(); ++i) (*norm)(static_cast<Index>(i)) = number_at(n[i], child(np, i));
      }
      model.embeddings.emplace(name, EmbeddingEntry{sname, located(p, [&] { return Embedding(space, cols, norm); })});
    }
  }
  if (doc.contains("quantum")) parse_quantum(doc["quantum"], model);
  return model;
}

ModelFile parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return parse_model(doc);
}

ModelFile parse_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

const FiniteSpace& ModelFile::space(const std::string& n) const { return lookup(spaces, n, "space"); }
const StateEntry& ModelFile::state(const std::string& n) const { return lookup(states, n, "state"); }
const MapEntry& ModelFile::map(const std::string& n) const { return lookup(maps, n, "map"); }
const KernelEntry& ModelFile::kernel(const std::string& n) const { return lookup(kernels, n, "kernel"); }
const ExtendedEntry& ModelFile::extended_kernel(const std::string& n) const {
  return lookup(extended, n, "extended kernel");
}
const EmbeddingEntry& ModelFile::embedding(const std::string& n) const { return lookup(embeddings, n, "embedding"); }
const DensityMatrix& ModelFile::density(const std::string& n) const { return lookup(quantum.densities, n, "density"); }
const PovmEntry& ModelFile::povm(const std::string& n) const { return lookup(quantum.povms, n, "povm"); }
const QeoEntry& ModelFile::qeo(const std::string& n) const { return lookup(quantum.qeos, n, "qeo"); }
const SuperOperator& ModelFile::superoperator(const std::string& n) const {
  return lookup(quantum.superoperators, n, "superoperator");
}

json complex_to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

json matrix_to_json(const ComplexMatrix<double>& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json weights_to_json(const FiniteSpace& space, const Vector<double>& weights) {
  json obj = json::object();
  for (Index i = 0; i < space.size(); ++i) obj[space.label(i)] = weights(i);
  return obj;
}

namespace {

json rows_to_json(const FiniteSpace& input, const FiniteSpace& columns, const Matrix<double>& m) {
  json rows = json::object();
  for (Index t = 0; t < input.size(); ++t) {
    json row = json::object();
    for (Index c = 0; c < columns.size(); ++c)
      if (m(t, c) != 0.0) row[columns.label(c)] = m(t, c);
    rows[input.label(t)] = std::move(row);
  }
  return rows;
}

json vector_to_json(const ComplexVector<double>& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(complex_to_json(v(i)));
  return arr;
}

}  // namespace

json to_json(const ModelFile& model) {
  json doc = json::object();
  if (!model.spaces.empty()) {
    json& s = doc["spaces"] = json::object();
    for (const auto& [name, space] : model.spaces) s[name] = space.atoms();
  }
  if (!model.states.empty()) {
    json& s = doc["states"] = json::object();
    for (const auto& [name, e] : model.states)
      s[name] = {{"space", e.space}, {"weights", weights_to_json(e.state.space(), e.state.weights())}};
  }
  if (!model.maps.empty()) {
    json& s = doc["maps"] = json::object();
    for (const auto& [name, e] : model.maps) {
      json assign = json::object();
      for (Index i = 0; i < e.map.source().size(); ++i) assign[e.map.source().label(i)] = e.map.target().label(e.map(i));
      s[name] = {{"source", e.source}, {"target", e.target}, {"assign", std::move(assign)}};
    }
  }
  if (!model.kernels.empty()) {
    json& s = doc["kernels"] = json::object();
    for (const auto& [name, e] : model.kernels)
      s[name] = {{"input", e.input},
                 {"outcome", e.outcome},
                 {"rows", rows_to_json(e.kernel.input(), e.kernel.outcome(), e.kernel.matrix())}};
  }
  if (!model.extended.empty()) {
    json& s = doc["extended"] = json::object();
    for (const auto& [name, e] : model.extended)
      s[name] = {{"input", e.input},
                 {"outcome", e.outcome},
                 {"output", e.output},
                 {"rows", rows_to_json(e.kernel.input(), e.kernel.as_kernel().outcome(), e.kernel.matrix())}};
  }
  if (!model.embeddings.empty()) {
    json& s = doc["embeddings"] = json::object();
    for (const auto& [name, e] : model.embeddings) {
      json vectors = json::object();
      for (Index t = 0; t < e.embedding.space().size(); ++t) {
        json v = json::array();
        for (Index i = 0; i < e.embedding.dimension(); ++i) v.push_back(e.embedding.vectors()(i, t));
        vectors[e.embedding.space().label(t)] = std::move(v);
      }
      json entry = {{"space", e.space}, {"vectors", std::move(vectors)}};
      if (e.embedding.normalization()) {
        json n = json::array();
        for (Index i = 0; i < e.embedding.normalization()->size(); ++i) n.push_back((*e.embedding.normalization())(i));
        entry["normalization"] = std::move(n);
      }
      s[name] = std::move(entry);
    }
  }
  const auto& q = model.quantum;
  json quantum = json::object();
  if (q.dim) quantum["dim"] = *q.dim;
  if (!q.densities.empty()) {
    json& s = quantum["densities"] = json::object();
    for (const auto& [name, rho] : q.densities) s[name] = matrix_to_json(rho.matrix());
  }
  if (!q.povms.empty()) {
    json& s = quantum["povms"] = json::object();
    for (const auto& [name, e] : q.povms) {
      json effects = json::object();
      for (Index k = 0; k < e.povm.outcome().size(); ++k) effects[e.povm.outcome().label(k)] = matrix_to_json(e.povm.effect(k));
      s[name] = {{"outcome", e.outcome}, {"effects", std::move(effects)}};
    }
  }
  if (!q.qeos.empty()) {
    json& s = quantum["qeos"] = json::object();
    for (const auto& [name, e] : q.qeos) {
      json prepared = json::array();
      for (const auto& p : e.qeo.prepared()) prepared.push_back(vector_to_json(p.vector()));
      json ops = json::object();
      for (Index k = 0; k < e.qeo.outcome().size(); ++k) {
        json list = json::array();
        for (Index j = 0; j < e.qeo.prepared_count(); ++j) list.push_back(matrix_to_json(e.qeo.op(k, j)));
        ops[e.qeo.outcome().label(k)] = std::move(list);
      }
      s[name] = {{"outcome", e.outcome}, {"prepared", std::move(prepared)}, {"operators", std::move(ops)}};
    }
  }
  if (!q.superoperators.empty()) {
    json& s = quantum["superoperators"] = json::object();
    for (const auto& [name, w] : q.superoperators)
      s[name] = {{"dim_in", w.input_dimension()}, {"dim_out", w.output_dimension()}, {"action", matrix_to_json(w.action())}};
  }
  if (!quantum.empty()) doc["quantum"] = std::move(quantum);
  return doc;
}

json to_json(const SimulationReport& report) {
  json out = json::object();
  out["kind"] = report.kind == SimulationReport::Kind::Classical ? "classical" : "quantum";
  out["trials"] = report.trials;
  out["seed"] = report.seed;
  out["outcomes"] = report.outcome.atoms();
  json counts = json::object();
  for (Index w = 0; w < report.outcome.size(); ++w)
    counts[report.outcome.label(w)] = report.outcome_counts[static_cast<std::size_t>(w)];
  out["outcome_counts"] = std::move(counts);
  out["frequencies"] = weights_to_json(report.outcome, report.frequencies);
  out["exact_law"] = weights_to_json(report.outcome, report.exact_law);
  out["law_distance"] = report.law_distance;
  json conditionals = json::array();
  for (const auto& c : report.conditionals) {
    json entry = json::object();
    entry["event"] = c.event.labels();
    entry["count"] = c.count;
    entry["empirical"] = c.count > 0 ? weights_to_json(report.output, c.empirical) : json(nullptr);
    entry["exact"] = c.exact ? weights_to_json(report.output, *c.exact) : json(nullptr);
    entry["distance"] = c.distance ? json(*c.distance) : json(nullptr);
    if (report.kind == SimulationReport::Kind::Quantum) {
      entry["empirical_density"] = c.empirical_density ? matrix_to_json(*c.empirical_density) : json(nullptr);
      entry["exact_density"] = c.exact_density ? matrix_to_json(*c.exact_density) : json(nullptr);
    }
    conditionals.push_back(std::move(entry));
  }
  out["conditionals"] = std::move(conditionals);
  if (!report.records.empty()) {
    json records = json::array();
    for (const auto& r : report.records)
      records.push_back({{"index", r.index},
                         {"input", r.input && report.input ? json(report.input->label(*r.input)) : json(nullptr)},
                         {"outcome", report.outcome.label(r.outcome)},
                         {"output", report.output.label(r.output)}});
    out["records"] = std::move(records);
  }
  return out;
}

namespace {

void dump_into(const json& v, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // std::map: sorted keys
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        dump_into(it.value(), indent + 2, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      const bool scalars = std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); });
      if (scalars) {
        out += "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ", ";
          dump_into(v[i], indent, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_into(v[i], indent + 2, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      std::string s(buf);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string canonical_dump(const json& value) {
  std::string out;
  dump_into(value, 0, out);
  out += "\n";
  return out;
}

}  // namespace gpf
