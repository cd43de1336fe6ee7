#pragma once

// Seeded generators for property tests and the CLI.

#include <random>

#include "qot/finalg.hpp"

namespace qot {

using Rng = std::mt19937_64;

/// Entries standard complex Gaussian.
Mat random_gaussian(int rows, int cols, Rng& rng);
/// Hermitian matrix with Gaussian entries.
Mat random_hermitian(int n, Rng& rng);
AlgElement random_element(const BlockAlgebra& alg, Rng& rng);
AlgElement random_hermitian_element(const BlockAlgebra& alg, Rng& rng);

/// Faithful state whose smallest eigenvalue is at least `floor`.
FaithfulState random_state(const BlockAlgebra& alg, Rng& rng, double floor = 0.05);
/// Random real diagonal faithful state.
FaithfulState random_diagonal_state(const BlockAlgebra& alg, Rng& rng, double floor = 0.05);

/// Unital CP map a -> P(sum K_i^* a K_i) with sum K_i^* K_i = 1 on the direct sum
/// space and P the pinching onto the target blocks.
SuperOp random_unital_cp(const BlockAlgebra& source, const BlockAlgebra& target, int kraus, Rng& rng);
/// a -> P(sum K_i^* a K_i) for Kraus operators K_i : C^{N_B} -> C^{N_A} on the
/// direct-sum spaces, P the pinching onto the blocks of B. No normalization.
SuperOp pinched_kraus(const BlockAlgebra& source, const BlockAlgebra& target, const std::vector<Mat>& ks);
/// Row-stochastic matrix with entries bounded below by `floor`.
RMat random_stochastic(int rows, int cols, Rng& rng, double floor = 0.0);

/// Invariant state of a unital map alpha: A -> A (mu o alpha = mu) by power
/// iteration on the state-picture action, polished by a null-space solve.
/// Throws NotConverged if the state is not unique or not faithful.
FaithfulState stationary_state(const SuperOp& alpha, int max_iter = 20000);

/// Random element of T(mu, nu): a Wishart matrix of the given rank on each
/// tensor block, scaled to the marginals by alternating operator Sinkhorn steps.
Coupling random_plan(const FaithfulState& mu, const FaithfulState& nu, Rng& rng, int rank = 0);
/// Unital CP map E: A -> B with nu o E = mu, the channel of random_plan.
SuperOp random_channel_between(const FaithfulState& mu, const FaithfulState& nu, Rng& rng, int rank = 0);

}  // namespace qot
