// qot: run transport scenarios and the built-in example families.
//
//   qot run <scenario.json> [flags]
//   qot paper-examples --name classical_4x2|classical_4x2_eps|spin_half [--grid N] [flags]
//
// Reports go to stdout as JSON lines, a summary to stderr.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "qot/runner.hpp"

namespace {

void add_common(CLI::App* app, qot::RunFlags& flags, std::string& cls, std::string& solver) {
  app->add_option("--tol-feas", flags.solve.tol_feas, "feasibility tolerance")->capture_default_str();
  app->add_option("--tol-gap", flags.solve.tol_gap, "duality gap tolerance")->capture_default_str();
  app->add_option("--max-iter", flags.solve.max_iter, "iteration cap, 0 for the solver default")->capture_default_str();
  app->add_option("--seed", flags.seed, "seed for random systems and random example rows")->capture_default_str();
  app->add_option("--class", cls, "default plan class")->check(CLI::IsMember({"plain", "modular", "kms"}));
  app->add_option("--solver", solver, "auto, interior_point, splitting, conditional_gradient or simplex");
  app->add_flag("--oracle", flags.oracle, "cross-check against the brute-force oracle where sizes permit");
  app->add_option("--parallel", flags.parallel, "worker threads")->check(CLI::PositiveNumber);
}

int emit(const std::vector<qot::Outcome>& outcomes) {
  for (const qot::Outcome& o : outcomes) {
    std::cout << o.report.dump() << '\n';
    std::cerr << o.summary << '\n';
  }
  std::cout.flush();
  const int code = qot::exit_code(outcomes);
  std::cerr << outcomes.size() << " reports, exit " << code << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein distances between finite quantum dynamical systems"};
  app.require_subcommand(1);

  qot::RunFlags flags;
  std::string cls, solver, path, name;
  int grid = 0;

  CLI::App* run = app.add_subcommand("run", "execute the tasks of a scenario file");
  run->add_option("scenario", path, "scenario JSON")->required();
  add_common(run, flags, cls, solver);

  CLI::App* ex = app.add_subcommand("paper-examples", "built-in example families");
  ex->add_option("--name", name, "family")->required()->check(
      CLI::IsMember({"classical_4x2", "classical_4x2_eps", "spin_half"}));
  ex->add_option("--grid", grid, "grid size or number of random rows")->check(CLI::PositiveNumber);
  add_common(ex, flags, cls, solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), qot::kExitSchema);
  }

  try {
    if (!cls.empty()) flags.cls = qot::plan_class_from_string(cls);
    if (!solver.empty()) flags.solve.solver = qot::solver_from_string(solver);
    if (*run) {
      const qot::Scenario sc = qot::load_scenario(path, flags.seed);
      return emit(qot::run_jobs(qot::scenario_jobs(sc, flags), flags.parallel));
    }
    const int n = grid > 0 ? grid : qot::default_grid(name);
    std::vector<qot::Outcome> rows = qot::run_jobs(qot::paper_example_jobs(name, n, flags), flags.parallel);
    if (name == "spin_half") {
      rows.push_back(qot::spin_half_summary(rows));
      rows.back().report["task"] = rows.size() - 1;
    }
    return emit(rows);
  } catch (const qot::Error& e) {
    const bool schema = e.kind() == qot::ErrorKind::Schema || e.kind() == qot::ErrorKind::InvalidArgument;
    std::cerr << (schema ? "schema error: " : "construction error: ") << e.what();
    if (!schema) std::cerr << " [" << qot::to_string(e.kind()) << ", residual " << e.residual() << "]";
    std::cerr << '\n';
    return schema ? qot::kExitSchema : qot::kExitConstruction;
  }
}
