#pragma once

// Dynamical systems (A, alpha, mu, k): an algebra with a faithful state, a
// finite named list of state-preserving unital positive maps, optional
// reversing operation, and coordinates.

#include <optional>
#include <string>
#include <vector>

#include "qot/finalg.hpp"

namespace qot {

struct Dynamics {
  std::string name;
  SuperOp map;
};

class SystemVN {
 public:
  SystemVN() = default;
  /// Validates invariance, unitality and declared flags at 1e-10 and the
  /// reversing axioms; throws InvarianceViolated, NotUnital, NotCP or NotReversing.
  SystemVN(FaithfulState state, std::vector<Dynamics> dynamics, std::optional<SuperOp> reversing,
           std::vector<AlgElement> coords);

  /// Classical chain sugar: point masses p, transition matrices, real coordinates.
  static SystemVN classical(const std::vector<double>& p, const std::vector<RMat>& transitions,
                            const std::vector<std::vector<double>>& coords, bool with_reversing = true);

  const BlockAlgebra& algebra() const { return state_.algebra(); }
  const FaithfulState& state() const { return state_; }
  const std::vector<Dynamics>& dynamics() const { return dynamics_; }
  const std::optional<SuperOp>& reversing() const { return reversing_; }
  const std::vector<AlgElement>& coords() const { return coords_; }
  int num_coords() const { return static_cast<int>(coords_.size()); }

 private:
  FaithfulState state_;
  std::vector<Dynamics> dynamics_;
  std::optional<SuperOp> reversing_;
  std::vector<AlgElement> coords_;
};

/// Blockwise transpose when it preserves the state (rho real), otherwise empty.
std::optional<SuperOp> default_reversing(const FaithfulState& state);

/// (A', alpha', mu', k') in the commutant encoding: state rho^T, dynamics
/// dual_channel, coordinates j(k_i^*) = conj(k_i), reversing theta'.
SystemVN dual_system(const SystemVN& s);
/// (A, alpha^sigma, mu, k).
SystemVN kms_dual_system(const SystemVN& s);
/// (A, alpha^<-, mu, k); throws NoReversingOperation.
SystemVN reverse_system(const SystemVN& s);

struct BalanceReport {
  bool classical = false;  // residual is max |nu_r b_rs - nu_s b_sr|
  double residual = 0.0;   // otherwise max ||alpha^<- - alpha||
  bool holds = false;      // residual <= 1e-9
};

/// Classical detailed balance on abelian systems, theta-sqdb otherwise.
BalanceReport check_detailed_balance(const SystemVN& s);
/// max over dynamics of ||alpha^<- - alpha||; throws NoReversingOperation.
double sqdb_residual(const SystemVN& s);
/// Coordinate set closed under adjoint (1e-12).
bool is_hermitian(const SystemVN& s);

/// Largest difference in state, coordinates, dynamics and reversing operation;
/// infinity on structural mismatch.
double system_distance(const SystemVN& a, const SystemVN& b);

}  // namespace qot
