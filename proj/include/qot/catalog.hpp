#pragma once

// Built-in example families: a 4-point chain against a 2-point chain, and a
// spin-half system against a 2-point chain.

#include "qot/random.hpp"
#include "qot/systems.hpp"

namespace qot {

/// Coordinate (1/2, -1/2, 1/2, -1/2) on the 4-point chain.
SystemVN chain4(const RMat& alpha, const std::vector<double>& mu);
/// Transitions [[1-r, r], [s, 1-s]] with stationary state (s, r)/(r+s), or
/// the uniform state when r = s = 0. `coords` copies of l = (1/2, -1/2).
SystemVN chain2(double r, double s, int coords = 1);

RMat uniform_alpha4();
/// Uniform alpha with rows 1 and 2 shifted by (eps, 0, -eps, 0) and (-eps, 0, eps, 0).
RMat perturbed_alpha4(double eps);

struct Chain4x2 {
  SystemVN a, b;
};
/// Random stochastic alpha with its stationary state, and random (r, s).
/// When unit_sum is set, s = 1 - r.
Chain4x2 random_chain4x2(Rng& rng, bool unit_sum = false);

/// alpha(a) = lambda U_eta^* a U_eta + (1 - lambda) U_phi^* a U_phi with
/// U = diag(1, e^{i t}), state diag(mu1, 1 - mu1), reversing = transpose and
/// coordinates the Pauli matrices over 2.
SystemVN spin_half(double lambda, double eta, double phi, double mu1);
/// lambda sin(eta) + (1 - lambda) sin(phi)
double spin_half_condition(double lambda, double eta, double phi);
/// Schroedinger action X -> lambda U_eta X U_eta^* + (1 - lambda) U_phi X U_phi^*.
SuperOp spin_half_state_action(double lambda, double eta, double phi);
/// W against chain2(r, s, 3) when only the product plan is feasible.
double spin_half_product_distance(double mu1, double r, double s);

}  // namespace qot
