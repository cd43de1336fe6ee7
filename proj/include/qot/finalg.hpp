#pragma once

// Finite-dimensional *-algebra kernel.
//
// Every algebra is a direct sum of full matrix blocks M_{n_1} + ... + M_{n_B};
// the abelian case has all n_i = 1. Elements, states and linear maps are dense
// complex block matrices. The standard form of (A, mu) is the Hilbert-Schmidt
// space of A with Lambda_mu = rho^{1/2}; A acts by left multiplication
// (pi(a) X = a X) and the commutant by right multiplication with the transpose
// convention pi'(c) X = X c^T. Commutant elements are stored as elements of A
// interpreted through pi'.
//
// Coordinates. Each block M_n carries a fixed orthonormal Hermitian basis
// (with respect to tr(X^* Y)), ordered as
//   e_kk                          k = 0..n-1
//   (e_ab + e_ba) / sqrt(2)       pair t = (a<b) in lexicographic order, index n + 2t
//   i (e_ab - e_ba) / sqrt(2)     index n + 2t + 1
// The coordinates of X are z_k = tr(B_k X). Hermitian elements have real
// coordinates and Hermiticity-preserving maps have real matrices.

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qot/errors.hpp"

namespace qot {

using cdouble = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kFaithfulFloor = 1e-10;

/// Direct sum of full complex matrix blocks.
class BlockAlgebra {
 public:
  BlockAlgebra() = default;
  explicit BlockAlgebra(std::vector<int> block_dims);

  static BlockAlgebra classical(int points);
  static BlockAlgebra matrix(int n);

  const std::vector<int>& dims() const { return dims_; }
  int num_blocks() const { return static_cast<int>(dims_.size()); }
  int block_dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
  /// Complex dimension of the algebra, sum of n_i^2.
  int element_dim() const { return element_dim_; }
  /// Offset of block i inside the coordinate vector.
  int block_offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  bool abelian() const;

  bool operator==(const BlockAlgebra& other) const { return dims_ == other.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  int element_dim_ = 0;
};

/// Kronecker product, index (p, q) -> p * b.rows() + q.
Mat kron(const Mat& a, const Mat& b);
/// tr_1 of an (n m) x (n m) matrix, result m x m.
Mat partial_trace_first(const Mat& x, int n, int m);
/// tr_2 of an (n m) x (n m) matrix, result n x n.
Mat partial_trace_second(const Mat& x, int n, int m);
/// f applied to the spectrum of a Hermitian matrix.
Mat hermitian_function(const Mat& h, const std::function<double(double)>& f);
Mat hermitian_part(const Mat& x);
double min_hermitian_eigenvalue(const Mat& x);

/// Number of basis elements of M_n.
inline int hs_dim(int n) { return n * n; }
/// k-th Hermitian basis matrix of M_n (see file comment).
Mat hs_basis(int n, int k);
/// Coordinates tr(B_k X) of an n x n matrix.
CVec hs_coords(const Mat& x);
Mat hs_from_coords(int n, const Eigen::Ref<const CVec>& z);

/// Element of a block algebra, one square matrix per block.
class AlgElement {
 public:
  AlgElement() = default;
  explicit AlgElement(std::vector<Mat> blocks) : blocks_(std::move(blocks)) {}

  static AlgElement zero(const BlockAlgebra& alg);
  static AlgElement identity(const BlockAlgebra& alg);
  static AlgElement from_coords(const BlockAlgebra& alg, const Eigen::Ref<const CVec>& z);
  /// Abelian convenience: one value per point.
  static AlgElement diagonal(const std::vector<cdouble>& values);
  /// Basis element k of the algebra in the global coordinate order.
  static AlgElement basis(const BlockAlgebra& alg, int k);

  BlockAlgebra algebra() const;
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const Mat& block(int i) const { return blocks_[static_cast<std::size_t>(i)]; }
  Mat& block(int i) { return blocks_[static_cast<std::size_t>(i)]; }
  const std::vector<Mat>& blocks() const { return blocks_; }

  CVec coords() const;
  AlgElement adjoint() const;
  AlgElement transpose() const;
  AlgElement conjugate() const;

  AlgElement operator+(const AlgElement& o) const;
  AlgElement operator-(const AlgElement& o) const;
  AlgElement operator*(const AlgElement& o) const;
  AlgElement operator*(cdouble s) const;

  /// Hilbert-Schmidt norm over all blocks.
  double norm() const;
  double max_abs() const;
  /// Smallest eigenvalue of the Hermitian part over all blocks.
  double min_eigenvalue() const;
  cdouble trace() const;
  bool same_shape(const AlgElement& o) const;

 private:
  std::vector<Mat> blocks_;
};

double distance(const AlgElement& a, const AlgElement& b);

/// Faithful state given by a blockwise density matrix.
class FaithfulState {
 public:
  FaithfulState() = default;
  /// Validates Hermiticity, unit trace (1e-12) and the faithfulness floor;
  /// throws Error(NotFaithful) otherwise.
  explicit FaithfulState(AlgElement rho);

  static FaithfulState classical(const std::vector<double>& p);
  static FaithfulState tracial(const BlockAlgebra& alg);

  const BlockAlgebra& algebra() const { return alg_; }
  const AlgElement& rho() const { return rho_; }
  const AlgElement& sqrt_rho() const { return sqrt_; }
  const AlgElement& inv_sqrt_rho() const { return inv_sqrt_; }
  const AlgElement& log_rho() const { return log_; }

  /// mu(a) = sum_i tr(rho_i a_i).
  cdouble operator()(const AlgElement& a) const;
  /// State of the encoded commutant, rho^T.
  FaithfulState transposed() const;
  bool diagonal(double tol = 1e-14) const;
  bool real(double tol = 1e-14) const;

 private:
  BlockAlgebra alg_;
  AlgElement rho_, sqrt_, inv_sqrt_, log_;
};

struct MapFlags {
  bool unital = false;
  bool positive = false;
  bool cp = false;
  bool anti = false;
};

/// Linear map between two block algebras, stored as its matrix in the
/// Hermitian bases: M(l, k) = tr(B'_l E(B_k)).
class SuperOp {
 public:
  SuperOp() = default;
  SuperOp(BlockAlgebra source, BlockAlgebra target, Mat matrix, MapFlags flags = {});

  static SuperOp identity(const BlockAlgebra& alg);
  static SuperOp from_function(const BlockAlgebra& source, const BlockAlgebra& target,
                               const std::function<AlgElement(const AlgElement&)>& f,
                               MapFlags flags = {});
  /// Heisenberg-picture Kraus map a -> sum K_i^* a K_i on a single block M_n.
  static SuperOp kraus(const std::vector<Mat>& ops, MapFlags flags = {true, true, true, false});
  /// Abelian Markov operator (T a)_p = sum_q T_pq a_q.
  static SuperOp transition(const RMat& t);
  /// Blockwise transpose of A, the default reversing operation.
  static SuperOp transpose(const BlockAlgebra& alg);

  const BlockAlgebra& source() const { return source_; }
  const BlockAlgebra& target() const { return target_; }
  const Mat& matrix() const { return matrix_; }
  const MapFlags& flags() const { return flags_; }
  SuperOp with_flags(MapFlags flags) const;

  AlgElement operator()(const AlgElement& a) const;
  /// this o inner.
  SuperOp compose(const SuperOp& inner) const;
  /// Adjoint for the bilinear pairing tr(E(a) x) = tr(a E^dag(x)).
  SuperOp trace_adjoint() const;
  SuperOp operator+(const SuperOp& o) const;
  SuperOp operator-(const SuperOp& o) const;
  SuperOp operator*(double s) const;

  /// Choi matrix sum_{pq} e_pq (x) E(e_pq)_j for source block i, target block j.
  Mat choi_block(int i, int j) const;
  /// Most negative Choi eigenvalue (0 when PSD).
  double cp_violation() const;
  double unital_residual() const;
  /// max |theta(x y) - theta(y) theta(x)| over basis pairs.
  double anti_residual() const;
  double hermiticity_residual() const;
  /// Checks every declared flag at 1e-10 and throws on failure.
  void verify_flags() const;

 private:
  BlockAlgebra source_, target_;
  Mat matrix_;
  MapFlags flags_;
};

/// max |M - M'| entrywise; throws DimensionMismatch on shape mismatch.
double distance(const SuperOp& a, const SuperOp& b);

/// Transport plan: a density matrix on each tensor block C^{n_i} (x) C^{m_j},
/// Kronecker index (p, q) -> p * m_j + q. The pairing with a in A and the
/// commutant element pi'(c) is omega(a (x) pi'(c)) = sum_ij tr(Omega_ij (a_i (x) c_j)).
/// In this convention the second marginal of a plan in T(mu, nu) is rho_nu^T.
class Coupling {
 public:
  Coupling() = default;
  Coupling(BlockAlgebra left, BlockAlgebra right);

  static Coupling product(const FaithfulState& mu, const FaithfulState& nu);
  static int coord_dim(const BlockAlgebra& left, const BlockAlgebra& right);
  static Coupling from_coords(const BlockAlgebra& left, const BlockAlgebra& right,
                              const Eigen::Ref<const RVec>& x);
  /// Real coordinates in the Hermitian basis of each tensor block.
  RVec coords() const;

  const BlockAlgebra& left() const { return left_; }
  const BlockAlgebra& right() const { return right_; }
  const Mat& block(int i, int j) const;
  Mat& block(int i, int j);
  /// Offset of block (i, j) inside coords().
  int coord_offset(int i, int j) const;

  cdouble pair(const AlgElement& a, const AlgElement& c) const;
  /// Partial trace over the second leg, an element of A.
  AlgElement left_marginal() const;
  /// Partial trace over the first leg, an element of B.
  AlgElement right_marginal() const;
  /// max |left - rho_mu| and max |right - rho_nu^T|.
  double marginal_residual(const FaithfulState& mu, const FaithfulState& nu) const;
  double trace() const;
  double min_eigenvalue() const;
  double hermiticity_residual() const;

 private:
  BlockAlgebra left_, right_;
  std::vector<Mat> blocks_;
};

double distance(const Coupling& a, const Coupling& b);

/// Lambda_mu = rho^{1/2}.
AlgElement standard_vector(const FaithfulState& state);

/// delta_nu(b (x) pi'(c)) = tr(rho^{1/2} b rho^{1/2} c^T); rank one on each
/// diagonal block pair, eigenvector vec(rho_i^{1/2}).
Coupling delta_state(const FaithfulState& state);

/// E_omega(a) = rho_nu^{-1/2} K_a^T rho_nu^{-1/2}, K_a = tr_1(Omega (a (x) 1)).
/// Throws MarginalMismatch when the plan's marginals are off by more than 1e-6.
SuperOp channel_of_plan(const Coupling& plan, const FaithfulState& mu, const FaithfulState& nu);
/// Same map without the marginal check; linear in the plan.
SuperOp channel_of_plan_unchecked(const Coupling& plan, const FaithfulState& nu);

/// Inverse of channel_of_plan; throws NotCP if the result is not PSD.
Coupling plan_of_channel(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu);
/// Unchecked version (PSD only when E is completely positive).
Coupling plan_of_channel_unchecked(const SuperOp& e, const FaithfulState& nu);

/// max_k |nu(E(B_k)) - mu(B_k)|.
double invariance_residual(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu);

/// Dual E': B' -> A' in the commutant encoding, as a map B -> A:
/// E'(pi'(c)) = pi'(F(c)) with F(c) = [rho_mu^{-1/2} E^dag(rho_nu^{1/2} c^T rho_nu^{1/2}) rho_mu^{-1/2}]^T.
/// The encoded dual algebras carry the states rho^T. Throws InvarianceViolated.
SuperOp dual_channel(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu);

/// E^sigma = j_A o E' o j_B : B -> A,
/// E^sigma(b) = rho_mu^{-1/2} E^dag(rho_nu^{1/2} b rho_nu^{1/2}) rho_mu^{-1/2}.
SuperOp kms_dual(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu);
/// Literal composition j_A o E' o j_B through dual_channel; used to validate kms_dual.
SuperOp kms_dual_by_composition(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu);

/// Largest violation among anti-multiplicativity, involutivity, *-preservation
/// and state preservation.
double reversing_residual(const SuperOp& theta, const FaithfulState& state);

/// E^<- = theta_mu o E^sigma o theta_nu. Throws NotReversing if either theta
/// fails the reversing axioms beyond 1e-10.
SuperOp theta_kms_dual(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu,
                       const SuperOp& theta_mu, const SuperOp& theta_nu);

/// Derivation D(a) = i [log rho, a] generating the modular group.
SuperOp modular_generator(const FaithfulState& state);
/// sigma_t(a) = rho^{it} a rho^{-it}.
SuperOp modular_group(const FaithfulState& state, double t);
/// exp(t M) for a square SuperOp from A to A.
SuperOp exp_superop(const SuperOp& generator, double t);

}  // namespace qot
