#pragma once

// Affine constraint systems for T(A,B), T_sigma(A,B), T_sigmasigma(A,B) and the
// quadratic coordinate cost, both over the real coordinates of a Coupling.

#include <map>
#include <string>
#include <vector>

#include "qot/systems.hpp"

namespace qot {

enum class PlanClass { Plain, Modular, Kms };

std::string to_string(PlanClass c);
PlanClass plan_class_from_string(const std::string& s);

/// Rows A x = b over coupling coordinates x, tagged per row. Construction also
/// compresses the system: `null_basis` is an orthonormal basis of ker A from a
/// column-pivoted QR of A^T at relative tolerance 1e-11, and `x0` is the
/// product plan, which is always feasible.
struct ConstraintSet {
  BlockAlgebra left, right;
  RMat matrix;
  RVec rhs;
  std::vector<std::string> tags;
  int rank = 0;
  RMat null_basis;
  RVec x0;
  /// max |A x0 - b|; nonzero values indicate a modelling error.
  double x0_residual = 0.0;

  int num_vars() const { return static_cast<int>(matrix.cols()); }
  /// max-norm residual per tag.
  std::map<std::string, double> residuals(const RVec& x) const;
  double max_residual(const RVec& x) const;
};

/// Dynamics are paired by position (DimensionMismatch on a count mismatch).
/// A reversing operation contributes a "balance:reversing" block when both
/// systems carry one.
ConstraintSet build_constraints(const SystemVN& a, const SystemVN& b, PlanClass cls);

/// Linear map Coupling -> channel, one SuperOp per coupling coordinate.
std::vector<SuperOp> channel_basis(const BlockAlgebra& left, const FaithfulState& nu);

/// cost(x) = constant + linear . x on couplings with the right marginals.
struct CostFunctional {
  RVec linear;
  double constant = 0.0;
  /// Homogeneous form cost(x) = direct . x, i.e. sum_ij tr(Omega_ij C_ij) with
  /// C = sum_i |k_i (x) 1 - 1 (x) l~_i|^2 and l~ = (rho_nu^{-1/2} l rho_nu^{1/2})^T.
  RVec direct;

  double operator()(const RVec& x) const { return constant + linear.dot(x); }
};

/// Throws DimensionMismatch when the coordinate counts differ.
CostFunctional build_cost(const SystemVN& a, const SystemVN& b);

/// sum_i mu(k_i^* k_i) + nu(l_i^* l_i) - 2 Re nu(l_i^* E(k_i)); MarginalMismatch
/// if the plan is not in T(mu, nu).
double cost(const Coupling& plan, const SystemVN& a, const SystemVN& b);
/// Evaluation of the homogeneous |k (x) 1 - 1 (x) l~|^2 form.
double cost_direct(const Coupling& plan, const SystemVN& a, const SystemVN& b);

struct CostParts {
  double mismatch = 0.0;     // sum nu(|l_i - E(k_i)|^2)
  double dissipation = 0.0;  // sum nu(E(k_i^* k_i) - E(k_i)^* E(k_i))
};
CostParts cost_parts(const Coupling& plan, const SystemVN& a, const SystemVN& b);

/// Per-tag max residuals plus "psd" (negative part of the smallest eigenvalue)
/// and "trace".
std::map<std::string, double> feasibility_residual(const Coupling& plan, const SystemVN& a, const SystemVN& b,
                                                   PlanClass cls);
bool is_feasible(const std::map<std::string, double>& residuals, double tol = 1e-8);

/// omega' in T(B', A') from E_{omega'} = (E_omega)'.
Coupling dual_plan(const Coupling& plan, const SystemVN& a, const SystemVN& b);
/// omega^sigma in T(B^sigma, A^sigma) from E_{omega^sigma} = (E_omega)^sigma.
Coupling kms_plan(const Coupling& plan, const SystemVN& a, const SystemVN& b);
/// Plan of E_omega^<- = theta_A o E^sigma o theta_B, an element of T(B^<-, A^<-).
Coupling reverse_plan(const Coupling& plan, const SystemVN& a, const SystemVN& b);
/// Plan of E_psi o E_omega for omega in T(A,B), psi in T(B,C).
Coupling compose_plans(const Coupling& omega, const Coupling& psi, const SystemVN& a, const SystemVN& b,
                       const SystemVN& c);

/// V_XY = Tr(alpha^*(X) Y) - Tr(X Y) for the state-picture action alpha^*.
/// Throws NotDensity when X or Y is not a density matrix at 1e-10.
double flow_deviation_V(const SuperOp& alpha_state_action, const AlgElement& x, const AlgElement& y);

}  // namespace qot
