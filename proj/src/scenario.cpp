#include "qot/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qot/generators.hpp"
#include "qot/optimize.hpp"
#include "qot/random.hpp"
#include "qot/transport.hpp"

namespace qot {

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Schema, where + ": " + what);
}

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where + "." + key, "missing");
  return *it;
}

const Json* optional_field(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) schema_error(where, "expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) schema_error(where, "expected an integer");
  return j.get<int>();
}

bool boolean(const Json& j, const std::string& where) {
  if (!j.is_boolean()) schema_error(where, "expected true or false");
  return j.get<bool>();
}

std::string string(const Json& j, const std::string& where) {
  if (!j.is_string()) schema_error(where, "expected a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array");
  return j;
}

std::string at(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

Json complex_to_json(cdouble z) { return Json::array({z.real(), z.imag()}); }

bool is_scalar(const Json& j) {
  return j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number());
}

RMat parse_real_matrix(const Json& j, const std::string& where) {
  const Mat m = parse_matrix(j, where);
  if (m.imag().cwiseAbs().maxCoeff() > 0) schema_error(where, "expected real entries");
  return m.real();
}

std::vector<double> parse_real_vector(const Json& j, const std::string& where) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(j, where).size(); ++i) out.push_back(number(j[i], at(where, i)));
  return out;
}

BlockAlgebra parse_blocks(const Json& j, const std::string& where) {
  std::vector<int> dims;
  for (std::size_t i = 0; i < array(j, where).size(); ++i) {
    const int n = integer(j[i], at(where, i));
    if (n < 1) schema_error(at(where, i), "block dimension must be positive");
    dims.push_back(n);
  }
  if (dims.empty()) schema_error(where, "at least one block required");
  return BlockAlgebra(dims);
}

AlgElement parse_element(const BlockAlgebra& alg, const Json& j, const std::string& where) {
  array(j, where);
  if (j.size() != static_cast<std::size_t>(alg.num_blocks()))
    schema_error(where, "expected " + std::to_string(alg.num_blocks()) + " entries, one per block");
  std::vector<Mat> blocks;
  if (alg.abelian()) {
    bool scalars = true;
    for (const Json& e : j) scalars = scalars && is_scalar(e);
    if (scalars) {
      for (std::size_t i = 0; i < j.size(); ++i) blocks.push_back(Mat::Constant(1, 1, parse_complex(j[i], at(where, i))));
      return AlgElement(std::move(blocks));
    }
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    Mat m = parse_matrix(j[i], at(where, i));
    const int n = alg.block_dim(static_cast<int>(i));
    if (m.rows() != n || m.cols() != n)
      schema_error(at(where, i), "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    blocks.push_back(std::move(m));
  }
  return AlgElement(std::move(blocks));
}

MapFlags parse_flags(const Json* j, MapFlags defaults, const std::string& where) {
  if (!j) return defaults;
  if (!j->is_object()) schema_error(where, "expected an object");
  MapFlags f = defaults;
  for (auto it = j->begin(); it != j->end(); ++it) {
    const std::string w = where + "." + it.key();
    if (it.key() == "unital") f.unital = boolean(*it, w);
    else if (it.key() == "positive") f.positive = boolean(*it, w);
    else if (it.key() == "cp") f.cp = boolean(*it, w);
    else if (it.key() == "anti") f.anti = boolean(*it, w);
    else schema_error(w, "unknown flag");
  }
  return f;
}

Json flags_to_json(const MapFlags& f) {
  return {{"unital", f.unital}, {"positive", f.positive}, {"cp", f.cp}, {"anti", f.anti}};
}

SuperOp parse_superop_matrix(const BlockAlgebra& alg, const Json& obj, MapFlags defaults, const std::string& where) {
  const Mat m = parse_matrix(field(obj, "superop", where), where + ".superop");
  if (m.rows() != alg.element_dim() || m.cols() != alg.element_dim())
    schema_error(where + ".superop", "expected a " + std::to_string(alg.element_dim()) + "x" +
                                         std::to_string(alg.element_dim()) + " matrix");
  return SuperOp(alg, alg, m, parse_flags(optional_field(obj, "flags"), defaults, where + ".flags"));
}

int total_dim(const BlockAlgebra& alg) {
  int n = 0;
  for (int d : alg.dims()) n += d;
  return n;
}

Dynamics parse_dynamics(const BlockAlgebra& alg, const Json& j, std::size_t index, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
  Dynamics d;
  d.name = optional_field(j, "name") ? string(j["name"], where + ".name") : "alpha" + std::to_string(index);
  const int forms = static_cast<int>(j.contains("superop")) + static_cast<int>(j.contains("kraus")) +
                    static_cast<int>(j.contains("transition"));
  if (forms != 1) schema_error(where, "give exactly one of superop, kraus, transition");
  if (j.contains("superop")) {
    d.map = parse_superop_matrix(alg, j, {true, true, true, false}, where);
  } else if (j.contains("kraus")) {
    const Json& ks = array(j["kraus"], where + ".kraus");
    const int n = total_dim(alg);
    std::vector<Mat> ops;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      Mat k = parse_matrix(ks[i], at(where + ".kraus", i));
      if (k.rows() != n || k.cols() != n)
        schema_error(at(where + ".kraus", i), "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
      ops.push_back(std::move(k));
    }
    if (ops.empty()) schema_error(where + ".kraus", "at least one operator required");
    d.map = pinched_kraus(alg, alg, ops)
                .with_flags(parse_flags(optional_field(j, "flags"), {true, true, true, false}, where + ".flags"));
  } else {
    if (!alg.abelian()) schema_error(where + ".transition", "only valid on abelian algebras");
    const RMat t = parse_real_matrix(j["transition"], where + ".transition");
    if (t.rows() != alg.num_blocks() || t.cols() != alg.num_blocks())
      schema_error(where + ".transition", "expected a square matrix of the point count");
    d.map = SuperOp::transition(t);
    if (const Json* f = optional_field(j, "flags")) d.map = d.map.with_flags(parse_flags(f, d.map.flags(), where + ".flags"));
  }
  return d;
}

void reject_unknown(const Json& obj, const std::set<std::string>& keys, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!keys.count(it.key())) schema_error(where + "." + it.key(), "unknown field");
}

SystemVN parse_classical(const Json& j, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
  reject_unknown(j, {"p", "T", "coords", "reversing"}, where);
  const std::vector<double> p = parse_real_vector(field(j, "p", where), where + ".p");
  if (p.empty()) schema_error(where + ".p", "at least one point required");
  const Json& tj = field(j, "T", where);
  std::vector<RMat> ts;
  // A single real matrix or a list of them.
  if (tj.is_array() && !tj.empty() && tj[0].is_array() && !tj[0].empty() && tj[0][0].is_array()) {
    for (std::size_t i = 0; i < tj.size(); ++i) ts.push_back(parse_real_matrix(tj[i], at(where + ".T", i)));
  } else {
    ts.push_back(parse_real_matrix(tj, where + ".T"));
  }
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i].rows() != static_cast<Eigen::Index>(p.size()) || ts[i].cols() != static_cast<Eigen::Index>(p.size()))
      schema_error(where + ".T", "expected " + std::to_string(p.size()) + "x" + std::to_string(p.size()) + " matrices");
  std::vector<std::vector<double>> coords;
  const Json& cj = field(j, "coords", where);
  for (std::size_t i = 0; i < array(cj, where + ".coords").size(); ++i) {
    coords.push_back(parse_real_vector(cj[i], at(where + ".coords", i)));
    if (coords.back().size() != p.size()) schema_error(at(where + ".coords", i), "length differs from p");
  }
  const bool rev = optional_field(j, "reversing") ? boolean(j["reversing"], where + ".reversing") : true;
  return SystemVN::classical(p, ts, coords, rev);
}

SystemVN parse_random(const Json& j, const std::string& where, std::uint64_t seed) {
  if (!j.is_object()) schema_error(where, "expected an object");
  reject_unknown(j, {"blocks", "coords", "dynamics", "kraus", "reversible", "sqdb", "lazy", "modular_time", "seed"}, where);
  SystemSpec spec;
  spec.algebra = parse_blocks(field(j, "blocks", where), where + ".blocks");
  if (const Json* v = optional_field(j, "coords")) spec.coords = integer(*v, where + ".coords");
  if (const Json* v = optional_field(j, "dynamics")) spec.dynamics = integer(*v, where + ".dynamics");
  if (const Json* v = optional_field(j, "kraus")) spec.kraus = integer(*v, where + ".kraus");
  if (const Json* v = optional_field(j, "reversible")) spec.reversible = boolean(*v, where + ".reversible");
  if (const Json* v = optional_field(j, "sqdb")) spec.sqdb = boolean(*v, where + ".sqdb");
  if (const Json* v = optional_field(j, "lazy")) spec.lazy = number(*v, where + ".lazy");
  if (const Json* v = optional_field(j, "modular_time")) spec.modular_time = number(*v, where + ".modular_time");
  if (spec.coords < 0 || spec.dynamics < 0 || spec.kraus < 1) schema_error(where, "counts must be non-negative");
  std::uint64_t local = 0;
  if (const Json* v = optional_field(j, "seed")) local = static_cast<std::uint64_t>(integer(*v, where + ".seed"));
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + local);
  return random_system(spec, rng);
}

}  // namespace

bool Scenario::has(const std::string& name) const {
  for (const auto& [n, s] : systems)
    if (n == name) return true;
  return false;
}

const SystemVN& Scenario::system(const std::string& name) const {
  for (const auto& [n, s] : systems)
    if (n == name) return s;
  throw Error(ErrorKind::Schema, "unknown system '" + name + "'");
}

cdouble parse_complex(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  schema_error(where, "expected a number or [re, im]");
}

Mat parse_matrix(const Json& j, const std::string& where) {
  array(j, where);
  if (j.empty()) schema_error(where, "empty matrix");
  const std::size_t cols = array(j[0], at(where, 0)).size();
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Json& row = array(j[r], at(where, r));
    if (row.size() != cols) schema_error(at(where, r), "ragged row");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_complex(row[c], at(at(where, r), c));
  }
  return m;
}

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json element_to_json(const AlgElement& a) {
  Json out = Json::array();
  for (const Mat& b : a.blocks()) out.push_back(matrix_to_json(b));
  return out;
}

Json coupling_to_json(const Coupling& c) {
  Json out = Json::array();
  for (int i = 0; i < c.left().num_blocks(); ++i)
    for (int j = 0; j < c.right().num_blocks(); ++j)
      out.push_back({{"left", i}, {"right", j}, {"matrix", matrix_to_json(c.block(i, j))}});
  return out;
}

Json superop_to_json(const SuperOp& e) {
  return {{"superop", matrix_to_json(e.matrix())}, {"flags", flags_to_json(e.flags())}};
}

SystemVN parse_system(const Json& j, const std::string& where, std::uint64_t seed) {
  if (!j.is_object()) schema_error(where, "expected an object");
  if (j.contains("classical")) {
    reject_unknown(j, {"classical"}, where);
    return parse_classical(j["classical"], where + ".classical");
  }
  if (j.contains("random")) {
    reject_unknown(j, {"random"}, where);
    return parse_random(j["random"], where + ".random", seed);
  }
  reject_unknown(j, {"blocks", "state", "dynamics", "reversing", "coords"}, where);
  const BlockAlgebra alg = parse_blocks(field(j, "blocks", where), where + ".blocks");

  const Json& sj = field(j, "state", where);
  FaithfulState state;
  if (sj.is_string()) {
    if (sj.get<std::string>() != "tracial") schema_error(where + ".state", "only \"tracial\" is a named state");
    state = FaithfulState::tracial(alg);
  } else {
    state = FaithfulState(parse_element(alg, sj, where + ".state"));
  }

  std::vector<Dynamics> dyn;
  if (const Json* dj = optional_field(j, "dynamics")) {
    for (std::size_t i = 0; i < array(*dj, where + ".dynamics").size(); ++i)
      dyn.push_back(parse_dynamics(alg, (*dj)[i], i, at(where + ".dynamics", i)));
  }

  std::optional<SuperOp> rev;
  if (const Json* rj = optional_field(j, "reversing"); rj && !rj->is_null()) {
    const std::string w = where + ".reversing";
    if (rj->is_string()) {
      if (rj->get<std::string>() != "transpose") schema_error(w, "expected \"transpose\", null or a superop");
      rev = SuperOp::transpose(alg);
    } else {
      if (!rj->is_object()) schema_error(w, "expected \"transpose\", null or a superop");
      reject_unknown(*rj, {"superop", "flags"}, w);
      rev = parse_superop_matrix(alg, *rj, {false, true, false, true}, w);
    }
  }

  std::vector<AlgElement> coords;
  const Json& cj = field(j, "coords", where);
  for (std::size_t i = 0; i < array(cj, where + ".coords").size(); ++i)
    coords.push_back(parse_element(alg, cj[i], at(where + ".coords", i)));

  return SystemVN(std::move(state), std::move(dyn), std::move(rev), std::move(coords));
}

Json serialize_system(const SystemVN& s) {
  Json out;
  out["blocks"] = s.algebra().dims();
  out["state"] = element_to_json(s.state().rho());
  Json dyn = Json::array();
  for (const Dynamics& d : s.dynamics()) {
    Json e = superop_to_json(d.map);
    e["name"] = d.name;
    dyn.push_back(std::move(e));
  }
  out["dynamics"] = std::move(dyn);
  out["reversing"] = s.reversing() ? superop_to_json(*s.reversing()) : Json(nullptr);
  Json coords = Json::array();
  for (const AlgElement& k : s.coords()) coords.push_back(element_to_json(k));
  out["coords"] = std::move(coords);
  return out;
}

namespace {

const std::set<std::string> kTaskKinds{"distance", "plan", "dual", "check-db", "bound", "deviation", "paper-example"};

void check_system_ref(const Scenario& sc, const Json& t, const char* key, const std::string& where) {
  const std::string name = string(field(t, key, where), where + "." + key);
  if (!sc.has(name)) schema_error(where + "." + key, "unknown system '" + name + "'");
}

void check_class(const Json& t, const std::string& where) {
  if (const Json* c = optional_field(t, "class")) {
    const std::string s = string(*c, where + ".class");
    if (s != "plain" && s != "modular" && s != "kms") schema_error(where + ".class", "expected plain, modular or kms");
  }
}

void check_task(const Scenario& sc, const Json& t, const std::string& where) {
  const std::string kind = string(field(t, "kind", where), where + ".kind");
  if (!kTaskKinds.count(kind)) schema_error(where + ".kind", "unknown task kind '" + kind + "'");
  if (kind == "distance" || kind == "plan") {
    reject_unknown(t, {"kind", "id", "from", "to", "class", "solver", "assert"}, where);
    check_system_ref(sc, t, "from", where);
    check_system_ref(sc, t, "to", where);
    check_class(t, where);
    if (const Json* s = optional_field(t, "solver")) {
      try {
        solver_from_string(string(*s, where + ".solver"));
      } catch (const Error&) {
        schema_error(where + ".solver", "unknown solver");
      }
    }
    if (const Json* a = optional_field(t, "assert")) {
      if (!a->is_object()) schema_error(where + ".assert", "expected an object");
      reject_unknown(*a, {"W_max", "W_min"}, where + ".assert");
      for (auto it = a->begin(); it != a->end(); ++it) number(*it, where + ".assert." + it.key());
    }
  } else if (kind == "dual") {
    reject_unknown(t, {"kind", "id", "system", "dual"}, where);
    check_system_ref(sc, t, "system", where);
    const std::string d = string(field(t, "dual", where), where + ".dual");
    if (d != "commutant" && d != "kms" && d != "reverse")
      schema_error(where + ".dual", "expected commutant, kms or reverse");
  } else if (kind == "check-db") {
    reject_unknown(t, {"kind", "id", "system", "expect"}, where);
    check_system_ref(sc, t, "system", where);
    if (const Json* e = optional_field(t, "expect")) boolean(*e, where + ".expect");
  } else if (kind == "bound") {
    reject_unknown(t, {"kind", "id", "A", "B", "class"}, where);
    check_system_ref(sc, t, "A", where);
    check_system_ref(sc, t, "B", where);
    check_class(t, where);
    if (t.contains("class") && t["class"] == "plain") schema_error(where + ".class", "bound needs modular or kms");
  } else if (kind == "deviation") {
    reject_unknown(t, {"kind", "id", "A", "B"}, where);
    check_system_ref(sc, t, "A", where);
    check_system_ref(sc, t, "B", where);
  } else {
    reject_unknown(t, {"kind", "id", "name", "grid"}, where);
    const std::string n = string(field(t, "name", where), where + ".name");
    if (n != "classical_4x2" && n != "classical_4x2_eps" && n != "spin_half")
      schema_error(where + ".name", "expected classical_4x2, classical_4x2_eps or spin_half");
    if (const Json* g = optional_field(t, "grid"))
      if (integer(*g, where + ".grid") < 1) schema_error(where + ".grid", "must be positive");
  }
}

}  // namespace

Scenario parse_scenario(const Json& j, std::uint64_t seed) {
  if (!j.is_object()) schema_error("scenario", "expected an object");
  reject_unknown(j, {"schema", "systems", "tasks"}, "scenario");
  if (const Json* v = optional_field(j, "schema"))
    if (string(*v, "schema") != kScenarioSchema) schema_error("schema", std::string("expected \"") + kScenarioSchema + "\"");
  Scenario sc;
  const Json& sys = field(j, "systems", "scenario");
  if (!sys.is_object()) schema_error("systems", "expected an object");
  for (auto it = sys.begin(); it != sys.end(); ++it)
    sc.systems.emplace_back(it.key(), parse_system(*it, "systems." + it.key(), seed));
  const Json& tasks = field(j, "tasks", "scenario");
  for (std::size_t i = 0; i < array(tasks, "tasks").size(); ++i) {
    check_task(sc, tasks[i], at("tasks", i));
    sc.tasks.push_back({tasks[i]["kind"].get<std::string>(), tasks[i]});
  }
  return sc;
}

Scenario load_scenario(const std::string& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Schema, path + ": cannot open");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Schema, path + ": " + e.what());
  }
  return parse_scenario(j, seed);
}

Json serialize_scenario(const Scenario& s) {
  Json systems = Json::object();
  for (const auto& [name, sys] : s.systems) systems[name] = serialize_system(sys);
  Json tasks = Json::array();
  for (const Task& t : s.tasks) tasks.push_back(t.spec);
  return {{"schema", kScenarioSchema}, {"systems", std::move(systems)}, {"tasks", std::move(tasks)}};
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qot
