#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <memory>
#include <string>

#include "qot/catalog.hpp"
#include "qot/generators.hpp"
#include "qot/runner.hpp"

using namespace qot;

namespace {

const std::string kSource = QOT_SOURCE_DIR;
const std::string kBinary = QOT_BINARY;

std::string scenario_path(const char* name) { return kSource + "/scenarios/" + name; }

std::string run_all(const Scenario& sc, const RunFlags& flags) {
  std::string out;
  for (const Outcome& o : run_jobs(scenario_jobs(sc, flags), flags.parallel)) out += o.report.dump() + "\n";
  return out;
}

int run_code(const Json& j, const RunFlags& flags = {}) {
  const Scenario sc = parse_scenario(j);
  return exit_code(run_jobs(scenario_jobs(sc, flags), 1));
}

std::string schema_message(const Json& j) {
  try {
    parse_scenario(j);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) return e.what();
    return std::string("kind ") + std::string(to_string(e.kind()));
  }
  return "accepted";
}

struct Shell {
  std::string out;
  int code = -1;
};

Shell shell(const std::string& cmd) {
  Shell s;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) s.out.append(buf.data(), n);
  const int status = pclose(p);
  s.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return s;
}

Json chain_json() {
  return Json::parse(R"({"classical": {"p": [0.5, 0.5], "T": [[0.5, 0.5], [0.5, 0.5]], "coords": [[1, 0]]}})");
}

}  // namespace

TEST_CASE("complex entries and matrices") {
  CHECK(parse_complex(Json(1.5), "x") == cdouble(1.5, 0));
  CHECK(parse_complex(Json::array({1, -2}), "x") == cdouble(1, -2));
  const Mat m = parse_matrix(Json::parse("[[1, [0, 1]], [[0, -1], 2]]"), "m");
  CHECK(m(0, 1) == cdouble(0, 1));
  CHECK((parse_matrix(matrix_to_json(m), "m") - m).norm() == 0.0);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(hex_digest(fnv1a("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("systems round trip through the canonical form") {
  Rng rng(21);
  std::vector<SystemVN> systems{spin_half(0.3, 1.0, 2.0, 0.7), chain2(0.2, 0.6, 2),
                                chain4(perturbed_alpha4(0.05), std::vector<double>(4, 0.25))};
  for (const BlockAlgebra& alg : {BlockAlgebra::matrix(2), BlockAlgebra({1, 2}), BlockAlgebra::classical(3)}) {
    SystemSpec s{alg, 2, 2, 2, false};
    systems.push_back(random_system(s, rng));
    s.sqdb = true;
    s.reversible = true;
    systems.push_back(random_system(s, rng));
  }
  for (const SystemVN& s : systems) {
    const Json j = serialize_system(s);
    const SystemVN back = parse_system(Json::parse(j.dump()), "s");
    CHECK(system_distance(s, back) <= 1e-12);
    CHECK(serialize_system(back).dump() == j.dump());
  }
  for (const char* f : {"classical_4x2.json", "self_distance.json"}) {
    const Scenario sc = load_scenario(scenario_path(f));
    const Scenario again = parse_scenario(Json::parse(serialize_scenario(sc).dump()));
    REQUIRE(again.systems.size() == sc.systems.size());
    for (const auto& [name, sys] : sc.systems) CHECK(system_distance(sys, again.system(name)) <= 1e-12);
    CHECK(again.tasks.size() == sc.tasks.size());
  }
}

TEST_CASE("reports are deterministic") {
  const Scenario sc = load_scenario(scenario_path("self_distance.json"), 5);
  RunFlags flags;
  flags.seed = 5;
  const std::string first = run_all(sc, flags);
  CHECK(first == run_all(load_scenario(scenario_path("self_distance.json"), 5), flags));
  flags.parallel = 3;
  CHECK(first == run_all(sc, flags));
  // A different seed changes the random system and hence its digest.
  const Scenario other = load_scenario(scenario_path("self_distance.json"), 6);
  CHECK(system_distance(sc.system("mixed"), other.system("mixed")) > 1e-6);
  CHECK(system_distance(sc.system("qubit"), other.system("qubit")) == 0.0);
}

TEST_CASE("schema errors name the field") {
  Json j = {{"systems", {{"A", chain_json()}}}, {"tasks", Json::array()}};
  CHECK(schema_message(j) == "accepted");

  Json bad = j;
  bad["tasks"] = Json::parse(R"([{"kind": "distance", "from": "A", "to": "Z"}])");
  CHECK(schema_message(bad).find("tasks[0].to") != std::string::npos);

  bad = j;
  bad["tasks"] = Json::parse(R"([{"kind": "distance", "from": "A", "to": "A", "class": "sideways"}])");
  CHECK(schema_message(bad).find("tasks[0].class") != std::string::npos);

  bad = j;
  bad["tasks"] = Json::parse(R"([{"kind": "teleport"}])");
  CHECK(schema_message(bad).find("tasks[0].kind") != std::string::npos);

  bad = j;
  bad["systems"]["A"]["classical"]["T"] = Json::parse("[[0.5, 0.5]]");
  CHECK(schema_message(bad).find("systems.A.classical.T") != std::string::npos);

  bad = j;
  bad["systems"]["Q"] = Json::parse(R"({"blocks": [2], "state": [[[0.5, 0], [0, 0.5]]], "coords": [[[[1, 0]]]]})");
  CHECK(schema_message(bad).find("systems.Q.coords[0][0]") != std::string::npos);

  bad = j;
  bad["systems"]["Q"] = Json::parse(R"({"blocks": [2], "state": "tracial", "coords": [], "dynamics": [{"kraus": [[[1, 0], ["x", 1]]]}]})");
  CHECK(schema_message(bad).find("systems.Q.dynamics[0].kraus[0][1][0]") != std::string::npos);

  bad = j;
  bad["schema"] = "qot-scenario/0";
  CHECK(schema_message(bad).find("schema") != std::string::npos);

  // Construction failures keep their own kind.
  bad = j;
  bad["systems"]["A"]["classical"]["p"] = {0.9, 0.1};
  CHECK(schema_message(bad) == "kind InvarianceViolated");
  bad = j;
  bad["systems"]["A"]["classical"]["p"] = {1.0, 0.0};
  CHECK(schema_message(bad) == "kind NotFaithful");
}

TEST_CASE("exit codes") {
  Json j = {{"systems", {{"A", chain_json()}, {"Q", Json::parse(R"({"random": {"blocks": [2], "lazy": 0.5, "coords": 2}})")}}}};
  j["tasks"] = Json::parse(R"([{"kind": "distance", "from": "A", "to": "A", "assert": {"W_max": 1e-6}}])");
  CHECK(run_code(j) == kExitOk);
  j["tasks"] = Json::parse(R"([{"kind": "distance", "from": "A", "to": "A", "assert": {"W_min": 0.5}}])");
  CHECK(run_code(j) == kExitAssertion);
  j["tasks"] = Json::parse(R"([{"kind": "distance", "from": "Q", "to": "Q", "solver": "splitting"}])");
  RunFlags few;
  few.solve.max_iter = 3;
  CHECK(run_code(j, few) == kExitNotConverged);
  j["tasks"] = Json::parse(R"([{"kind": "dual", "system": "A", "dual": "reverse"},
                               {"kind": "distance", "from": "A", "to": "A", "assert": {"W_min": 0.5}}])");
  CHECK(run_code(j) == kExitAssertion);
  j["systems"]["A"]["classical"]["reversing"] = false;
  CHECK(run_code(j) == kExitConstruction);  // first failure in task order wins
}

TEST_CASE("built-in example rows") {
  RunFlags flags;
  std::vector<Outcome> rows = run_jobs(paper_example_jobs("classical_4x2", 2, flags), 1);
  REQUIRE(rows.size() == 3);
  CHECK(exit_code(rows) == kExitOk);
  CHECK(rows[0].report["result"]["cost_vector"] == Json::parse("[0.0,1.0,0.0,1.0,1.0,0.0,1.0,0.0]"));
  rows = run_jobs(paper_example_jobs("spin_half", 2, flags), 1);
  REQUIRE(rows.size() == 8);
  const Outcome summary = spin_half_summary(rows);
  CHECK(summary.report["result"]["witness_below_one"] == true);
  CHECK(exit_code(rows) == kExitOk);
}

TEST_CASE("command line binary") {
  const Shell a = shell(kBinary + " run " + scenario_path("classical_4x2.json"));
  const Shell b = shell(kBinary + " run " + scenario_path("classical_4x2.json") + " --parallel 2");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 7);
  CHECK(shell(kBinary + " run " + scenario_path("self_distance.json")).code == 0);
  CHECK(shell(kBinary + " run /nonexistent.json").code == kExitSchema);
  CHECK(shell(kBinary + " paper-examples --name nothing").code == kExitSchema);
  const Shell t = shell(kBinary + " paper-examples --name spin_half --grid 3");
  CHECK(t.code == 0);
  CHECK(std::count(t.out.begin(), t.out.end(), '\n') == 28);
}
