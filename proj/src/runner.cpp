#include "qot/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "qot/catalog.hpp"
#include "qot/random.hpp"

namespace qot {

namespace {

constexpr double kOracleTolAbelian = 1e-6;
constexpr double kOracleTolQuantum = 1e-5;
constexpr double kBoundSlack = 1e-6;
constexpr double kSpinHalfOff = 0.1;      // |condition| at which W >= 1 is asserted
constexpr double kSpinHalfWTol = 1e-4;
constexpr double kSpinHalfZero = 1e-12;  // |condition| treated as vanishing

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int code_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Schema: return kExitSchema;
    case ErrorKind::NotConverged:
    case ErrorKind::SolverFailure: return kExitNotConverged;
    default: return kExitConstruction;
  }
}

Json residuals_json(const std::map<std::string, double>& r) {
  Json out = Json::object();
  for (const auto& [k, v] : r) out[k] = v;
  return out;
}

struct Asserts {
  Json list = Json::array();
  bool ok = true;

  void add(const std::string& name, double lhs, const std::string& op, double rhs, bool holds) {
    list.push_back({{"name", name}, {"lhs", lhs}, {"op", op}, {"rhs", rhs}, {"holds", holds}});
    ok = ok && holds;
  }
  void le(const std::string& name, double lhs, double rhs) { add(name, lhs, "<=", rhs, lhs <= rhs); }
  void ge(const std::string& name, double lhs, double rhs) { add(name, lhs, ">=", rhs, lhs >= rhs); }
};

Json solve_json(const SolveReport& r) {
  return {{"W", r.W}, {"cost", r.cost}, {"lower_bound", r.lower_bound}, {"gap", r.gap}};
}

Json diagnostics_json(const SolveReport& r) {
  return {{"solver", to_string(r.solver)}, {"iterations", r.iterations}, {"status", to_string(r.status)}};
}

/// Fills the bookkeeping fields and maps failure states to exit codes.
Outcome finish(Json rep, const Asserts& as, bool converged, std::string summary) {
  rep["assertions"] = as.list;
  Outcome o;
  o.code = !converged ? kExitNotConverged : (as.ok ? kExitOk : kExitAssertion);
  rep["ok"] = o.code == kExitOk;
  o.summary = std::move(summary) + (o.code == kExitOk ? " ok" : (converged ? " ASSERTION FAILED" : " NOT CONVERGED"));
  o.report = std::move(rep);
  return o;
}

/// Runs `body`, turning library errors into error reports.
Outcome guarded(Json rep, const std::string& label, const std::function<Outcome(Json&)>& body) {
  try {
    return body(rep);
  } catch (const Error& e) {
    rep["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}, {"residual", e.residual()}};
    rep["ok"] = false;
    Outcome o;
    o.code = code_of(e.kind());
    o.summary = label + " error " + std::string(to_string(e.kind())) + ": " + e.what();
    o.report = std::move(rep);
    return o;
  }
}

PlanClass task_class(const Json& t, const RunFlags& flags, PlanClass fallback) {
  if (t.contains("class")) return plan_class_from_string(t["class"].get<std::string>());
  return flags.cls.value_or(fallback);
}

std::string digest_of(const Json& inputs) { return hex_digest(fnv1a(inputs.dump())); }

Json base_report(const std::string& kind, const Json& inputs) {
  Json rep;
  rep["kind"] = kind;
  rep["inputs"] = inputs;
  rep["digest"] = digest_of(inputs);
  return rep;
}

Job distance_job(const Scenario& sc, const Task& t, const RunFlags& flags) {
  return [&sc, &t, flags]() {
    const std::string from = t.spec["from"], to = t.spec["to"];
    const PlanClass cls = task_class(t.spec, flags, PlanClass::Plain);
    SolveOptions opts = flags.solve;
    if (t.spec.contains("solver")) opts.solver = solver_from_string(t.spec["solver"].get<std::string>());
    const SystemVN& a = sc.system(from);
    const SystemVN& b = sc.system(to);
    Json inputs = {{"task", t.spec}, {"class", to_string(cls)}, {"from", serialize_system(a)}, {"to", serialize_system(b)}};
    const std::string label = t.kind + " " + from + " -> " + to + " (" + to_string(cls) + ")";
    return guarded(base_report(t.kind, inputs), label, [&](Json& rep) {
      const SolveReport r = wasserstein(a, b, cls, opts);
      rep["result"] = solve_json(r);
      rep["residuals"] = residuals_json(r.residuals);
      rep["diagnostics"] = diagnostics_json(r);
      Asserts as;
      if (flags.oracle) {
        try {
          const double w = brute_oracle(a, b, cls);
          const bool abel = a.algebra().abelian() && b.algebra().abelian();
          rep["diagnostics"]["oracle_W"] = w;
          as.le("oracle_agreement", std::abs(w - r.W), abel ? kOracleTolAbelian : kOracleTolQuantum);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::TooLarge) throw;
          rep["diagnostics"]["oracle_W"] = nullptr;
        }
      }
      if (t.spec.contains("assert")) {
        const Json& a_ = t.spec["assert"];
        if (a_.contains("W_max")) as.le("W_max", r.W, a_["W_max"].get<double>());
        if (a_.contains("W_min")) as.ge("W_min", r.W, a_["W_min"].get<double>());
      }
      if (t.kind == "plan") {
        rep["result"]["plan"] = coupling_to_json(r.plan);
        if (r.status == SolveStatus::Converged && r.W <= 1e-5) {
          const IsoReport iso = extract_isomorphism(r, a, b);
          rep["result"]["isomorphism"] = {{"homomorphism", iso.homomorphism_residual},
                                          {"coordinate_match", iso.coordinate_match_residual},
                                          {"invertibility", iso.invertibility_residual},
                                          {"intertwining", iso.intertwining_residual}};
        }
      }
      return finish(rep, as, r.status == SolveStatus::Converged, label + ": W=" + fmt("%.9g", r.W));
    });
  };
}

Job dual_job(const Scenario& sc, const Task& t) {
  return [&sc, &t]() {
    const std::string name = t.spec["system"], kind = t.spec["dual"];
    const SystemVN& s = sc.system(name);
    Json inputs = {{"task", t.spec}, {"system", serialize_system(s)}};
    const std::string label = "dual " + kind + " of " + name;
    return guarded(base_report(t.kind, inputs), label, [&](Json& rep) {
      auto op = [&](const SystemVN& x) {
        if (kind == "commutant") return dual_system(x);
        if (kind == "kms") return kms_dual_system(x);
        return reverse_system(x);
      };
      const SystemVN d = op(s);
      const double inv = system_distance(op(d), s);
      rep["result"] = {{"system", serialize_system(d)}, {"involution_residual", inv}};
      Asserts as;
      as.le("involution", inv, 1e-10);
      return finish(rep, as, true, label + ": involution residual " + fmt("%.3g", inv));
    });
  };
}

Job check_db_job(const Scenario& sc, const Task& t) {
  return [&sc, &t]() {
    const std::string name = t.spec["system"];
    const SystemVN& s = sc.system(name);
    Json inputs = {{"task", t.spec}, {"system", serialize_system(s)}};
    const std::string label = "check-db " + name;
    return guarded(base_report(t.kind, inputs), label, [&](Json& rep) {
      const BalanceReport b = check_detailed_balance(s);
      rep["result"] = {{"classical", b.classical}, {"residual", b.residual}, {"holds", b.holds}};
      Asserts as;
      if (t.spec.contains("expect")) {
        const bool want = t.spec["expect"].get<bool>();
        as.add("expect", b.holds ? 1.0 : 0.0, "==", want ? 1.0 : 0.0, b.holds == want);
      }
      return finish(rep, as, true, label + ": " + (b.holds ? "balanced" : "not balanced") +
                                       " (residual " + fmt("%.3g", b.residual) + ")");
    });
  };
}

Job bound_job(const Scenario& sc, const Task& t, const RunFlags& flags) {
  return [&sc, &t, flags]() {
    const std::string an = t.spec["A"], bn = t.spec["B"];
    PlanClass cls = task_class(t.spec, flags, PlanClass::Modular);
    if (cls == PlanClass::Plain) cls = PlanClass::Modular;
    const SystemVN& a = sc.system(an);
    const SystemVN& b = sc.system(bn);
    Json inputs = {{"task", t.spec}, {"class", to_string(cls)}, {"A", serialize_system(a)}, {"B", serialize_system(b)}};
    const std::string label = "bound " + an + " via " + bn + " (" + to_string(cls) + ")";
    return guarded(base_report(t.kind, inputs), label, [&](Json& rep) {
      const SqdbBoundReport r = sqdb_bound_check(a, b, cls, flags.solve);
      Asserts as;
      Json pairs = Json::array();
      for (const BoundPair& p : r.pairs) {
        pairs.push_back({{"label", p.label}, {"lhs", p.lhs}, {"rhs", p.rhs}, {"holds", p.holds}});
        as.add(p.label, p.lhs, "<=", p.rhs + kBoundSlack, p.holds);
      }
      rep["result"] = {{"pairs", pairs}, {"holds", r.holds}};
      return finish(rep, as, true, label);
    });
  };
}

Json deviation_json(const DeviationReport& d) {
  return {{"f", d.f}, {"W", d.W}, {"r", d.r}, {"s", d.s}, {"bound", d.bound}, {"holds", d.holds},
          {"unit_sum", d.unit_sum}, {"unit_holds", d.unit_holds}};
}

void deviation_asserts(const DeviationReport& d, Asserts& as) {
  as.add("f_bound", d.f, "<=", d.bound + kBoundSlack, d.holds);
  if (d.unit_sum) as.add("f_bound_unit_sum", d.f, "<=", 4 * d.W * d.W + kBoundSlack, d.unit_holds);
}

Job deviation_job(const Scenario& sc, const Task& t, const RunFlags& flags) {
  return [&sc, &t, flags]() {
    const std::string an = t.spec["A"], bn = t.spec["B"];
    const SystemVN& a = sc.system(an);
    const SystemVN& b = sc.system(bn);
    Json inputs = {{"task", t.spec}, {"A", serialize_system(a)}, {"B", serialize_system(b)}};
    const std::string label = "deviation " + an + " vs " + bn;
    return guarded(base_report(t.kind, inputs), label, [&](Json& rep) {
      const DeviationReport d = example_4x2_deviation(a, b, flags.solve);
      rep["result"] = deviation_json(d);
      Asserts as;
      deviation_asserts(d, as);
      return finish(rep, as, true, label + ": f=" + fmt("%.6g", d.f) + " bound=" + fmt("%.6g", d.bound));
    });
  };
}

Job paper_example_task_job(const Task& t, const RunFlags& flags) {
  return [&t, flags]() {
    const std::string name = t.spec["name"];
    const int grid = t.spec.contains("grid") ? t.spec["grid"].get<int>() : default_grid(name);
    RunFlags inner = flags;
    inner.parallel = 1;
    std::vector<Outcome> rows = run_jobs(paper_example_jobs(name, grid, inner), 1);
    if (name == "spin_half") rows.push_back(spin_half_summary(rows));
    Json rep = base_report(t.kind, {{"task", t.spec}, {"grid", grid}, {"seed", flags.seed}});
    Json table = Json::array();
    for (Outcome& o : rows) table.push_back(std::move(o.report));
    rep["result"] = {{"rows", std::move(table)}};
    Outcome o;
    o.code = exit_code(rows);
    rep["ok"] = o.code == kExitOk;
    o.summary = "paper-example " + name + " (" + std::to_string(rows.size()) + " rows)" + (o.code ? " FAILED" : " ok");
    o.report = std::move(rep);
    return o;
  };
}

// ------------------------------------------------------------- built-in examples

RMat column_order_plan(const Coupling& c) {
  // (w11, w21, w31, w41, w12, ...) with the first index on the 4-point chain.
  RMat out(1, 8);
  for (int p = 0; p < 4; ++p)
    for (int r = 0; r < 2; ++r) out(0, r * 4 + p) = c.block(p, r)(0, 0).real();
  return out;
}

Json row_vector(const RMat& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Job classical_zero_job(const RunFlags& flags) {
  return [flags]() {
    const std::vector<double> mu(4, 0.25);
    const SystemVN a = chain4(uniform_alpha4(), mu), b = chain2(0.5, 0.5);
    Json inputs = {{"name", "classical_4x2"}, {"row", "zero_instance"}};
    return guarded(base_report("classical_4x2", inputs), "classical_4x2 zero instance", [&](Json& rep) {
      const CostFunctional c = build_cost(a, b);
      RMat cv(1, 8);
      for (int p = 0; p < 4; ++p)
        for (int r = 0; r < 2; ++r) cv(0, r * 4 + p) = c.direct(p * 2 + r);
      const RMat want_c = (RMat(1, 8) << 0, 1, 0, 1, 1, 0, 1, 0).finished();
      const RMat want_plan = (RMat(1, 8) << mu[0], 0, mu[2], 0, 0, mu[1], 0, mu[3]).finished();
      const SolveReport r = wasserstein(a, b, PlanClass::Plain, flags.solve);
      const RMat plan = column_order_plan(r.plan);
      const DeviationReport d = example_4x2_deviation(a, b, flags.solve);
      rep["result"] = {{"cost_vector", row_vector(cv)}, {"W", r.W}, {"plan", row_vector(plan)},
                       {"deviation", deviation_json(d)}};
      rep["residuals"] = residuals_json(r.residuals);
      rep["diagnostics"] = diagnostics_json(r);
      Asserts as;
      as.le("cost_vector_exact", (cv - want_c).cwiseAbs().maxCoeff(), 0.0);
      as.le("W_zero", r.W, 1e-6);
      as.le("plan_unique", (plan - want_plan).cwiseAbs().maxCoeff(), 1e-6);
      deviation_asserts(d, as);
      return finish(rep, as, r.status == SolveStatus::Converged, "classical_4x2 zero instance: W=" + fmt("%.3g", r.W));
    });
  };
}

Job classical_random_job(int row, const RunFlags& flags) {
  return [row, flags]() {
    Rng rng(flags.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(row));
    const bool unit = row % 2 == 0;
    const Chain4x2 c = random_chain4x2(rng, unit);
    Json inputs = {{"name", "classical_4x2"}, {"row", row}, {"seed", flags.seed}, {"unit_sum", unit}};
    const std::string label = "classical_4x2 random row " + std::to_string(row);
    return guarded(base_report("classical_4x2", inputs), label, [&](Json& rep) {
      const DeviationReport d = example_4x2_deviation(c.a, c.b, flags.solve);
      rep["result"] = deviation_json(d);
      Asserts as;
      deviation_asserts(d, as);
      return finish(rep, as, true, label + ": f=" + fmt("%.6g", d.f) + " bound=" + fmt("%.6g", d.bound));
    });
  };
}

Job classical_eps_job(double eps, const RunFlags& flags) {
  return [eps, flags]() {
    const std::vector<double> mu(4, 0.25);
    const SystemVN a = chain4(perturbed_alpha4(eps), mu), b = chain2(0.5, 0.5);
    Json inputs = {{"name", "classical_4x2_eps"}, {"eps", eps}};
    const std::string label = "classical_4x2_eps eps=" + fmt("%.4g", eps);
    return guarded(base_report("classical_4x2_eps", inputs), label, [&](Json& rep) {
      const SolveReport ab = wasserstein(a, b, PlanClass::Plain, flags.solve);
      const SolveReport ba = wasserstein(b, a, PlanClass::Plain, flags.solve);
      rep["result"] = {{"eps", eps}, {"W_AB", ab.W}, {"W_BA", ba.W}};
      rep["diagnostics"] = {{"AB", diagnostics_json(ab)}, {"BA", diagnostics_json(ba)}};
      Asserts as;
      as.le("W_BA_zero", ba.W, 1e-6);
      if (flags.oracle) {
        const double w = brute_oracle(a, b, PlanClass::Plain);
        rep["diagnostics"]["oracle_W_AB"] = w;
        as.le("oracle_agreement", std::abs(w - ab.W), kOracleTolAbelian);
      }
      const bool conv = ab.status == SolveStatus::Converged && ba.status == SolveStatus::Converged;
      return finish(rep, as, conv, label + ": W(A,B)=" + fmt("%.6g", ab.W) + " W(B,A)=" + fmt("%.3g", ba.W));
    });
  };
}

double linspace(double lo, double hi, int k, int n) { return n == 1 ? lo : lo + (hi - lo) * k / (n - 1); }

// The 2-point chain used in the spin-half table.
constexpr double kSpinR = 1.0, kSpinS = 1.0, kSpinMu1 = 0.5;

Job spin_half_job(double lambda, double eta, double phi, const RunFlags& flags) {
  return [=]() {
    const PlanClass cls = flags.cls.value_or(PlanClass::Plain);
    Json inputs = {{"name", "spin_half"}, {"lambda", lambda}, {"eta", eta}, {"phi", phi}, {"mu1", kSpinMu1},
                   {"r", kSpinR}, {"s", kSpinS}, {"class", to_string(cls)}};
    const std::string label = "spin_half lambda=" + fmt("%.4g", lambda) + " eta=" + fmt("%.4g", eta) +
                              " phi=" + fmt("%.4g", phi);
    return guarded(base_report("spin_half", inputs), label, [&](Json& rep) {
      const double cond = spin_half_condition(lambda, eta, phi);
      const std::string zone = std::abs(cond) <= kSpinHalfZero ? "zero" : (std::abs(cond) >= kSpinHalfOff ? "off" : "near");
      const SolveReport r = wasserstein(spin_half(lambda, eta, phi, kSpinMu1), chain2(kSpinR, kSpinS, 3), cls, flags.solve);
      rep["result"] = {{"lambda", lambda}, {"eta", eta}, {"phi", phi}, {"condition", cond}, {"zone", zone}, {"W", r.W}};
      rep["residuals"] = residuals_json(r.residuals);
      rep["diagnostics"] = diagnostics_json(r);
      Asserts as;
      if (zone == "off" && kSpinR + kSpinS >= 0.5) as.ge("W_at_least_one", r.W, 1 - kSpinHalfWTol);
      return finish(rep, as, r.status == SolveStatus::Converged,
                    label + ": cond=" + fmt("%.3f", cond) + " " + zone + " W=" + fmt("%.6f", r.W));
    });
  };
}

}  // namespace

std::vector<Outcome> run_jobs(const std::vector<Job>& jobs, int parallel) {
  std::vector<Outcome> out(jobs.size());
  const int threads = std::max(1, std::min<int>(parallel, static_cast<int>(jobs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) out[i] = jobs[i]();
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].report["task"] = i;
  return out;
}

int exit_code(const std::vector<Outcome>& outcomes) {
  for (const Outcome& o : outcomes)
    if (o.code != kExitOk) return o.code;
  return kExitOk;
}

std::vector<Job> scenario_jobs(const Scenario& sc, const RunFlags& flags) {
  std::vector<Job> jobs;
  for (const Task& t : sc.tasks) {
    Job j;
    if (t.kind == "distance" || t.kind == "plan") j = distance_job(sc, t, flags);
    else if (t.kind == "dual") j = dual_job(sc, t);
    else if (t.kind == "check-db") j = check_db_job(sc, t);
    else if (t.kind == "bound") j = bound_job(sc, t, flags);
    else if (t.kind == "deviation") j = deviation_job(sc, t, flags);
    else j = paper_example_task_job(t, flags);
    if (t.spec.contains("id")) {
      j = [j, id = t.spec["id"]]() {
        Outcome o = j();
        o.report["id"] = id;
        return o;
      };
    }
    jobs.push_back(std::move(j));
  }
  return jobs;
}

int default_grid(const std::string& name) {
  if (name == "spin_half") return 8;
  if (name == "classical_4x2") return 10;
  return 5;
}

std::vector<Job> paper_example_jobs(const std::string& name, int grid, const RunFlags& flags) {
  if (grid < 1) throw Error(ErrorKind::Schema, "--grid: must be positive");
  std::vector<Job> jobs;
  if (name == "classical_4x2") {
    jobs.push_back(classical_zero_job(flags));
    for (int k = 1; k <= grid; ++k) jobs.push_back(classical_random_job(k, flags));
  } else if (name == "classical_4x2_eps") {
    for (int k = 0; k < grid; ++k) jobs.push_back(classical_eps_job(grid == 1 ? 0.05 : linspace(0, 0.2, k, grid), flags));
  } else if (name == "spin_half") {
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j)
        for (int k = 0; k < grid; ++k)
          jobs.push_back(spin_half_job(linspace(0, 1, i, grid), 2 * M_PI * j / grid, 2 * M_PI * k / grid, flags));
  } else {
    throw Error(ErrorKind::Schema, "--name: expected classical_4x2, classical_4x2_eps or spin_half");
  }
  return jobs;
}

Outcome spin_half_summary(const std::vector<Outcome>& rows) {
  double best = INFINITY;
  int zero_rows = 0, off_rows = 0, off_ok = 0;
  for (const Outcome& o : rows) {
    if (!o.report.contains("result")) continue;
    const Json& r = o.report["result"];
    if (r["zone"] == "zero") {
      ++zero_rows;
      best = std::min(best, r["W"].get<double>());
    } else if (r["zone"] == "off") {
      ++off_rows;
      off_ok += o.code == kExitOk;
    }
  }
  const bool witness = best < 1.0;
  Outcome o;
  o.report = {{"kind", "spin_half_summary"},
              {"result",
               {{"zero_rows", zero_rows},
                {"off_rows", off_rows},
                {"off_rows_with_W_at_least_one", off_ok},
                {"min_W_on_zero_rows", zero_rows ? Json(best) : Json(nullptr)},
                {"witness_below_one", witness}}}};
  o.report["ok"] = true;
  o.summary = "spin_half summary: " + std::to_string(off_ok) + "/" + std::to_string(off_rows) +
              " off-condition rows with W >= 1; min W on condition rows " + (zero_rows ? fmt("%.6f", best) : "n/a");
  return o;
}

}  // namespace qot
