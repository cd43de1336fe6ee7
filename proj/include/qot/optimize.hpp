#pragma once

// Minimization of the transport cost over T(A,B), T_sigma(A,B) or
// T_sigmasigma(A,B), plus brute-force oracles and post-solve checks.

#include <map>
#include <string>

#include "qot/transport.hpp"

namespace qot {

enum class SolveStatus { Converged, MaxIter, Infeasible };
std::string to_string(SolveStatus s);

enum class SolverKind {
  Auto,         // simplex for abelian pairs, interior point for small SDPs, splitting beyond
  InteriorPoint,
  Splitting,    // ADMM with over-relaxation
  ConditionalGradient,
  Simplex,
};
std::string to_string(SolverKind s);
SolverKind solver_from_string(const std::string& s);

struct SolveOptions {
  SolverKind solver = SolverKind::Auto;
  double tol_feas = 1e-8;
  double tol_gap = 1e-6;
  /// 0 picks the solver's own default.
  int max_iter = 0;
};

struct SolveReport {
  double W = 0.0;
  double cost = 0.0;
  Coupling plan;
  std::map<std::string, double> residuals;
  double gap = 0.0;
  double lower_bound = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIter;
  SolverKind solver = SolverKind::Auto;
  PlanClass cls = PlanClass::Plain;
};

/// W = sqrt(max(cost, 0)); costs in [-1e-9, 0) are clamped, anything more
/// negative raises SolverFailure.
double clamp_sqrt(double cost);

SolveReport wasserstein(const SystemVN& a, const SystemVN& b, PlanClass cls, const SolveOptions& opts = {});
/// Dense two-phase simplex; NotAbelian unless both algebras are abelian.
SolveReport classical_lp(const SystemVN& a, const SystemVN& b, PlanClass cls, const SolveOptions& opts = {});

/// Lower-level entry points on an assembled problem.
SolveReport solve_interior_point(const ConstraintSet& cs, const CostFunctional& cost, const SolveOptions& opts);
SolveReport solve_splitting(const ConstraintSet& cs, const CostFunctional& cost, const SolveOptions& opts);
SolveReport solve_conditional_gradient(const ConstraintSet& cs, const CostFunctional& cost, const SolveOptions& opts);
SolveReport solve_simplex(const ConstraintSet& cs, const CostFunctional& cost, const SolveOptions& opts);

/// Independent optimum for tests. Abelian pairs with m n <= 12: vertex
/// enumeration over constraints rebuilt from scalar formulas. Quantum pairs
/// with total coupling dimension <= 16: conditional gradient. TooLarge otherwise.
double brute_oracle(const SystemVN& a, const SystemVN& b, PlanClass cls);

struct IsoReport {
  double homomorphism_residual = 0.0;
  double coordinate_match_residual = 0.0;
  double invertibility_residual = 0.0;
  double intertwining_residual = 0.0;
};

/// Residuals of E_omega as a *-homomorphism on the coordinate algebra;
/// NotConverged unless the report converged.
IsoReport extract_isomorphism(const SolveReport& report, const SystemVN& a, const SystemVN& b);

struct BoundPair {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;  // lhs <= rhs + 1e-6
};

struct SqdbBoundReport {
  PlanClass cls = PlanClass::Modular;
  std::vector<BoundPair> pairs;
  bool holds = false;
};

/// W(A, A^<-) <= 2 W(A, B) and W(A^<-, A) <= 2 W(B, A) for the given class.
/// SqdbViolated unless B satisfies theta_B-sqdb at 1e-9.
SqdbBoundReport sqdb_bound_check(const SystemVN& a, const SystemVN& b, PlanClass cls, const SolveOptions& opts = {});

struct DeviationReport {
  double f = 0.0;
  double W = 0.0;
  double r = 0.0, s = 0.0;
  double bound = 0.0;  // 4 (1 + |1 - r - s|) W^2
  bool holds = false;
  bool unit_sum = false;   // r + s = 1 within 1e-12
  bool unit_holds = true;  // f <= 4 W^2 + 1e-6 when unit_sum
};

/// Deviation f from the zero-cost balance conditions and its bound, for a
/// 4-point chain A and a 2-point chain B. WrongShape otherwise.
DeviationReport example_4x2_deviation(const SystemVN& a, const SystemVN& b, const SolveOptions& opts = {});

}  // namespace qot
