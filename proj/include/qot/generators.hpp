#pragma once

// Random systems for property tests. All generators draw from the caller's
// seeded engine only.

#include "qot/random.hpp"
#include "qot/systems.hpp"

namespace qot {

struct SystemSpec {
  BlockAlgebra algebra;
  int coords = 1;
  int dynamics = 1;
  int kraus = 2;
  /// Real Kraus data rotated so the state is diagonal; reversing op = transpose.
  bool reversible = false;
  /// Replace every map by (alpha + alpha^<-)/2. Implies a reversing operation.
  bool sqdb = false;
  /// Smallest admissible state eigenvalue; draws below are rejected.
  double floor = 0.05;
  /// When >= 0, every map is lazy sigma_tau + (1 - lazy) mu(.)1 for a drawn
  /// state (diagonal when reversible), so T(A,B) is not reduced to the
  /// product plan. tau = modular_time.
  double lazy = -1.0;
  double modular_time = 0.0;
};

/// Random system. Abelian algebras get random stochastic
/// matrices and theta = identity; the state is the invariant state of the
/// first map (later maps are mixed toward it).
SystemVN random_system(const SystemSpec& spec, Rng& rng);

/// Same state, reversing operation and dynamics, new random Hermitian coordinates.
SystemVN with_random_coords(const SystemVN& s, int d, Rng& rng);
SystemVN with_coords(const SystemVN& s, std::vector<AlgElement> coords);

/// (alpha + alpha^<-)/2 for every dynamics entry.
SystemVN sqdb_symmetrize(const SystemVN& s);

}  // namespace qot
