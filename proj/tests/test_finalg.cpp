#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qot/finalg.hpp"
#include "qot/random.hpp"

using namespace qot;

namespace {

FaithfulState m2_diag(double p) {
  Mat r = Mat::Zero(2, 2);
  r(0, 0) = p;
  r(1, 1) = 1 - p;
  return FaithfulState(AlgElement({r}));
}

Mat unit(int n, int p, int q) {
  Mat e = Mat::Zero(n, n);
  e(p, q) = 1.0;
  return e;
}

std::vector<BlockAlgebra> sample_algebras() {
  return {BlockAlgebra::classical(3), BlockAlgebra::matrix(2), BlockAlgebra({1, 2}), BlockAlgebra({2, 2})};
}

}  // namespace

TEST_CASE("hilbert-schmidt basis is orthonormal and Hermitian") {
  for (int n : {1, 2, 3, 4}) {
    for (int k = 0; k < n * n; ++k) {
      const Mat bk = hs_basis(n, k);
      CHECK((bk - bk.adjoint()).norm() < 1e-15);
      for (int l = 0; l < n * n; ++l) {
        const cdouble ip = (bk.adjoint() * hs_basis(n, l)).trace();
        CHECK(std::abs(ip - (k == l ? 1.0 : 0.0)) < 1e-15);
      }
    }
    Rng rng(1);
    const Mat x = random_gaussian(n, n, rng);
    CHECK((hs_from_coords(n, hs_coords(x)) - x).norm() < 1e-13);
    CHECK(hs_coords(random_hermitian(n, rng)).imag().norm() < 1e-14);
  }
}

TEST_CASE("block algebra bookkeeping") {
  BlockAlgebra a({1, 2, 3});
  CHECK(a.element_dim() == 14);
  CHECK(a.block_offset(2) == 5);
  CHECK_FALSE(a.abelian());
  CHECK(BlockAlgebra::classical(4).abelian());
  CHECK_THROWS_AS(BlockAlgebra({2, 0}), Error);
}

TEST_CASE("faithful state validation") {
  CHECK_THROWS_AS(FaithfulState::classical({1.0, 0.0}), Error);
  CHECK_THROWS_AS(FaithfulState::classical({0.5, 0.6}), Error);
  try {
    FaithfulState::classical({1.0 - 1e-12, 1e-12});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotFaithful);
  }
  Rng rng(3);
  for (const auto& alg : sample_algebras()) {
    const FaithfulState s = random_state(alg, rng);
    CHECK(distance(s.sqrt_rho() * s.sqrt_rho(), s.rho()) < 1e-12);
    CHECK(distance(s.inv_sqrt_rho() * s.sqrt_rho(), AlgElement::identity(alg)) < 1e-12);
  }
}

TEST_CASE("standard vector") {
  CHECK(distance(standard_vector(FaithfulState::classical({1.0})), AlgElement::diagonal({1.0})) < 1e-15);
  CHECK(distance(standard_vector(FaithfulState::classical({0.64, 0.36})), AlgElement::diagonal({0.8, 0.6})) < 1e-15);
  const FaithfulState t = FaithfulState::tracial(BlockAlgebra::matrix(2));
  CHECK(distance(standard_vector(t), AlgElement({Mat::Identity(2, 2) / std::sqrt(2.0)})) < 1e-15);
}

TEST_CASE("delta state") {
  Rng rng(5);
  for (const auto& alg : sample_algebras()) {
    const FaithfulState mu = random_state(alg, rng);
    const Coupling d = delta_state(mu);
    CHECK(d.marginal_residual(mu, mu) < 1e-13);
    for (int k = 0; k < 20; ++k) {
      const AlgElement a = random_element(alg, rng);
      CHECK(std::abs(d.pair(a, AlgElement::identity(alg)) - mu(a)) < 1e-12);
      const AlgElement c = random_element(alg, rng);
      const cdouble expect = (mu.sqrt_rho() * a * mu.sqrt_rho() * c.transpose()).trace();
      CHECK(std::abs(d.pair(a, c) - expect) < 1e-12);
    }
  }
  // Rank one with eigenvector vec(rho^{1/2}).
  const FaithfulState mu = m2_diag(0.3);
  const Mat om = delta_state(mu).block(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(om);
  CHECK(std::abs(es.eigenvalues()(3) - 1.0) < 1e-14);
  CHECK(es.eigenvalues().head(3).cwiseAbs().maxCoeff() < 1e-14);
  CVec v = CVec::Zero(4);
  v(0) = std::sqrt(0.3);
  v(3) = std::sqrt(0.7);
  CHECK(std::abs(std::abs(es.eigenvectors().col(3).dot(v)) - 1.0) < 1e-14);
  // Classical: diagonal coupling.
  const FaithfulState p = FaithfulState::classical({0.1, 0.2, 0.7});
  const Coupling dc = delta_state(p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(dc.block(i, j)(0, 0) - (i == j ? p.rho().block(i)(0, 0) : 0.0)) < 1e-15);
}

TEST_CASE("channel of plan") {
  Rng rng(7);
  for (const auto& alg : sample_algebras()) {
    const FaithfulState mu = random_state(alg, rng);
    CHECK(distance(channel_of_plan(delta_state(mu), mu, mu), SuperOp::identity(alg)) < 1e-12);
    for (const auto& alg2 : sample_algebras()) {
      const FaithfulState nu = random_state(alg2, rng);
      const SuperOp e = channel_of_plan(Coupling::product(mu, nu), mu, nu);
      const AlgElement a = random_element(alg, rng);
      CHECK(distance(e(a), AlgElement::identity(alg2) * mu(a)) < 1e-12);
      // Defining relation omega(a (x) pi'(c)) = delta_nu(E(a) (x) pi'(c)) on a basis.
      const Coupling plan = random_plan(mu, nu, rng);
      const SuperOp f = channel_of_plan(plan, mu, nu);
      CHECK(f.unital_residual() < 1e-10);
      CHECK(invariance_residual(f, mu, nu) < 1e-10);
      CHECK(f.cp_violation() < 1e-10);
      const Coupling dn = delta_state(nu);
      for (int k = 0; k < alg.element_dim(); ++k)
        for (int l = 0; l < alg2.element_dim(); ++l) {
          const AlgElement bk = AlgElement::basis(alg, k), bl = AlgElement::basis(alg2, l);
          CHECK(std::abs(plan.pair(bk, bl) - dn.pair(f(bk), bl)) < 1e-11);
        }
    }
  }
  // Classical 4x2 collapsing plan, solved by hand.
  const std::vector<double> m{0.1, 0.2, 0.3, 0.4};
  const FaithfulState mu = FaithfulState::classical(m);
  const FaithfulState nu = FaithfulState::classical({0.4, 0.6});
  Coupling plan(mu.algebra(), nu.algebra());
  plan.block(0, 0)(0, 0) = m[0];
  plan.block(2, 0)(0, 0) = m[2];
  plan.block(1, 1)(0, 0) = m[1];
  plan.block(3, 1)(0, 0) = m[3];
  const SuperOp e = channel_of_plan(plan, mu, nu);
  const AlgElement a = AlgElement::diagonal({1.0, -2.0, 3.0, 5.0});
  const AlgElement ea = e(a);
  CHECK(std::abs(ea.block(0)(0, 0) - (m[0] * 1.0 + m[2] * 3.0) / (m[0] + m[2])) < 1e-14);
  CHECK(std::abs(ea.block(1)(0, 0) - (m[1] * -2.0 + m[3] * 5.0) / (m[1] + m[3])) < 1e-14);
  // Wrong marginals.
  plan.block(0, 0)(0, 0) += 0.05;
  plan.block(2, 0)(0, 0) -= 0.05;
  CHECK_THROWS_AS(channel_of_plan(plan, mu, nu), Error);
}

TEST_CASE("plan of channel") {
  Rng rng(11);
  for (const auto& alg : sample_algebras()) {
    const FaithfulState mu = random_state(alg, rng);
    CHECK(distance(plan_of_channel(SuperOp::identity(alg), mu, mu), delta_state(mu)) < 1e-13);
    for (const auto& alg2 : sample_algebras()) {
      const FaithfulState nu = random_state(alg2, rng);
      const SuperOp c = SuperOp::from_function(alg, alg2, [&](const AlgElement& a) {
        return AlgElement::identity(alg2) * mu(a);
      });
      CHECK(distance(plan_of_channel(c, mu, nu), Coupling::product(mu, nu)) < 1e-13);
      for (int rep = 0; rep < 5; ++rep) {
        const SuperOp e = random_channel_between(mu, nu, rng, rep + 1);
        const Coupling w = plan_of_channel(e, mu, nu);
        CHECK(distance(channel_of_plan(w, mu, nu), e) < 1e-10);
        CHECK(distance(plan_of_channel(channel_of_plan(w, mu, nu), mu, nu), w) < 1e-10);
      }
    }
  }
  // The transpose is positive but not CP.
  const FaithfulState t = FaithfulState::tracial(BlockAlgebra::matrix(2));
  try {
    plan_of_channel(SuperOp::transpose(t.algebra()), t, t);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotCP);
  }
}

TEST_CASE("dual channel") {
  const FaithfulState mu = FaithfulState::classical({0.75, 0.25});
  RMat a(2, 2);
  a << 0.8, 0.2, 0.6, 0.4;
  const SuperOp alpha = SuperOp::transition(a);
  CHECK(distance(dual_channel(alpha, mu, mu), alpha) < 1e-14);

  const FaithfulState u3 = FaithfulState::tracial(BlockAlgebra::classical(3));
  RMat perm = RMat::Zero(3, 3);
  perm(0, 1) = perm(1, 2) = perm(2, 0) = 1.0;
  CHECK(distance(dual_channel(SuperOp::transition(perm), u3, u3), SuperOp::transition(perm.transpose())) < 1e-14);
  CHECK(distance(dual_channel(SuperOp::identity(u3.algebra()), u3, u3), SuperOp::identity(u3.algebra())) < 1e-14);

  // Invariance violated.
  try {
    dual_channel(alpha, FaithfulState::classical({0.5, 0.5}), FaithfulState::classical({0.5, 0.5}));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvarianceViolated);
  }

  Rng rng(13);
  for (const auto& alg : sample_algebras())
    for (const auto& alg2 : sample_algebras()) {
      const FaithfulState m = random_state(alg, rng), n = random_state(alg2, rng);
      const SuperOp e = random_channel_between(m, n, rng);
      const SuperOp d = dual_channel(e, m, n);
      CHECK(d.unital_residual() < 1e-10);
      CHECK(invariance_residual(d, n.transposed(), m.transposed()) < 1e-10);
      CHECK(d.cp_violation() < 1e-10);
      CHECK(distance(dual_channel(d, n.transposed(), m.transposed()), e) < 1e-10);
      // <Lambda_mu, a E'(b') Lambda_mu> = <Lambda_nu, E(a) b' Lambda_nu> with b' = pi'(c).
      for (int k = 0; k < alg.element_dim(); ++k)
        for (int l = 0; l < alg2.element_dim(); ++l) {
          const AlgElement x = AlgElement::basis(alg, k), c = AlgElement::basis(alg2, l);
          const cdouble lhs = (m.sqrt_rho() * x * m.sqrt_rho() * d(c).transpose()).trace();
          const cdouble rhs = (n.sqrt_rho() * e(x) * n.sqrt_rho() * c.transpose()).trace();
          CHECK(std::abs(lhs - rhs) < 1e-11);
        }
    }
}

TEST_CASE("unitality and invariance are dual") {
  Rng rng(17);
  const BlockAlgebra alg = BlockAlgebra::matrix(2);
  const FaithfulState m = random_state(alg, rng), n = random_state(alg, rng);
  const SuperOp e = random_channel_between(m, n, rng);
  // Break unitality but keep invariance: add a traceless-for-nu perturbation.
  const SuperOp d = dual_channel(e, m, n);
  CHECK(d.unital_residual() < 1e-10);
  CHECK(invariance_residual(d, n.transposed(), m.transposed()) < 1e-10);
}

TEST_CASE("kms dual") {
  Rng rng(19);
  for (const auto& alg : sample_algebras())
    for (const auto& alg2 : sample_algebras()) {
      const FaithfulState m = random_state(alg, rng), n = random_state(alg2, rng);
      const SuperOp e = random_channel_between(m, n, rng);
      const SuperOp k = kms_dual(e, m, n);
      CHECK(distance(k, kms_dual_by_composition(e, m, n)) < 1e-11);
      CHECK(distance(kms_dual(k, n, m), e) < 1e-10);
      CHECK(invariance_residual(k, n, m) < 1e-10);
      CHECK(k.unital_residual() < 1e-10);
      if (alg.abelian() && alg2.abelian()) CHECK(distance(k, dual_channel(e, m, n)) < 1e-12);
      // tr(s_mu a s_mu E^sigma(b)) = tr(s_nu E(a) s_nu b).
      for (int i = 0; i < alg.element_dim(); ++i)
        for (int j = 0; j < alg2.element_dim(); ++j) {
          const AlgElement a = AlgElement::basis(alg, i), b = AlgElement::basis(alg2, j);
          const cdouble lhs = (m.sqrt_rho() * a * m.sqrt_rho() * k(b)).trace();
          const cdouble rhs = (n.sqrt_rho() * e(a) * n.sqrt_rho() * b).trace();
          CHECK(std::abs(lhs - rhs) < 1e-11);
        }
    }
  const FaithfulState m = m2_diag(0.3);
  CHECK(distance(kms_dual(SuperOp::identity(m.algebra()), m, m), SuperOp::identity(m.algebra())) < 1e-14);
  Mat u = Mat::Zero(2, 2);
  u(0, 0) = std::polar(1.0, 0.7);
  u(1, 1) = std::polar(1.0, -1.9);
  const SuperOp e = SuperOp::kraus({u});
  const SuperOp expect = SuperOp::kraus({Mat(u.adjoint())});
  CHECK(distance(kms_dual(e, m, m), expect) < 1e-14);
  // With commuting data the plain trace identity mu(a E^sigma(b)) = mu(E(a) b) holds.
  const SuperOp k = kms_dual(e, m, m);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const AlgElement a = AlgElement::basis(m.algebra(), i), b = AlgElement::basis(m.algebra(), j);
      CHECK(std::abs(m(a * k(b)) - m(e(a) * b)) < 1e-14);
    }
}

TEST_CASE("theta kms dual") {
  Rng rng(23);
  const BlockAlgebra m2 = BlockAlgebra::matrix(2);
  const SuperOp th = SuperOp::transpose(m2);
  for (int rep = 0; rep < 10; ++rep) {
    const FaithfulState m = random_diagonal_state(m2, rng);
    const FaithfulState n = random_diagonal_state(m2, rng);
    const SuperOp e = random_channel_between(m, n, rng);
    const SuperOp r = theta_kms_dual(e, m, n, th, th);
    CHECK(distance(r, dual_channel(e, m, n)) < 1e-12);
    CHECK(distance(theta_kms_dual(r, n, m, th, th), e) < 1e-10);
    CHECK(distance(theta_kms_dual(th, m, m, th, th), th) < 1e-12);
  }
  const BlockAlgebra c3 = BlockAlgebra::classical(3);
  const SuperOp id = SuperOp::identity(c3).with_flags({true, true, true, true});
  const FaithfulState p = random_state(c3, rng);
  const SuperOp e = random_channel_between(p, p, rng);
  CHECK(distance(theta_kms_dual(e, p, p, id, id), dual_channel(e, p, p)) < 1e-12);
  CHECK(distance(theta_kms_dual(e, p, p, id, id), kms_dual(e, p, p)) < 1e-12);
  // The identity of M_2 is not anti-multiplicative.
  const FaithfulState t = FaithfulState::tracial(m2);
  try {
    theta_kms_dual(SuperOp::identity(m2), t, t, SuperOp::identity(m2), th);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::NotReversing);
  }
  // A transpose does not preserve a non-real state.
  const FaithfulState z = random_state(m2, rng);
  CHECK(reversing_residual(th, z) > 1e-6);
}

TEST_CASE("modular generator") {
  CHECK(modular_generator(FaithfulState::tracial(BlockAlgebra::matrix(3))).matrix().cwiseAbs().maxCoeff() < 1e-14);
  CHECK(modular_generator(FaithfulState::classical({0.2, 0.3, 0.5})).matrix().cwiseAbs().maxCoeff() < 1e-14);
  const double p = 0.3;
  const SuperOp d = modular_generator(m2_diag(p));
  const AlgElement e12({unit(2, 0, 1)});
  CHECK(distance(d(e12), e12 * cdouble(0, std::log(p / (1 - p)))) < 1e-14);
  Rng rng(29);
  for (const auto& alg : sample_algebras()) {
    const FaithfulState s = random_state(alg, rng);
    const SuperOp g = modular_generator(s);
    CHECK(g.hermiticity_residual() < 1e-14);
    for (double t : {0.3, 1.0, -0.7}) CHECK(distance(exp_superop(g, t), modular_group(s, t)) < 1e-8);
  }
}

TEST_CASE("kadison inequality") {
  Rng rng(31);
  for (const auto& alg : sample_algebras())
    for (const auto& alg2 : sample_algebras()) {
      const FaithfulState m = random_state(alg, rng), n = random_state(alg2, rng);
      const SuperOp e = random_channel_between(m, n, rng, 1);
      for (int k = 0; k < 5; ++k) {
        const AlgElement a = random_element(alg, rng);
        CHECK((e(a.adjoint() * a) - e(a).adjoint() * e(a)).min_eigenvalue() > -1e-10);
      }
    }
}

TEST_CASE("stationary state of a random unital map") {
  Rng rng(37);
  for (const auto& alg : sample_algebras()) {
    const SuperOp a = random_unital_cp(alg, alg, 2, rng);
    a.verify_flags();
    const FaithfulState s = stationary_state(a);
    CHECK(invariance_residual(a, s, s) < 1e-12);
  }
}

TEST_CASE("transpose map") {
  const BlockAlgebra alg({1, 3});
  const SuperOp t = SuperOp::transpose(alg);
  Rng rng(41);
  const AlgElement x = random_element(alg, rng);
  CHECK(distance(t(x), x.transpose()) < 1e-14);
  CHECK(t.anti_residual() < 1e-14);
}
