#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qot/generators.hpp"
#include "qot/systems.hpp"

using namespace qot;

namespace {

Mat diag_unitary(double phase) {
  Mat u = Mat::Identity(2, 2);
  u(1, 1) = std::polar(1.0, phase);
  return u;
}

SystemVN spin_system(double lambda, double eta, double phi, double mu1) {
  const Mat ue = diag_unitary(eta), up = diag_unitary(phi);
  const BlockAlgebra m2 = BlockAlgebra::matrix(2);
  const SuperOp alpha = SuperOp::from_function(m2, m2, [&](const AlgElement& a) {
    const Mat& x = a.block(0);
    return AlgElement({Mat(lambda * ue.adjoint() * x * ue + (1 - lambda) * up.adjoint() * x * up)});
  }, {true, true, true, false});
  Mat rho = Mat::Zero(2, 2);
  rho(0, 0) = mu1;
  rho(1, 1) = 1 - mu1;
  Mat k1 = Mat::Zero(2, 2), k2 = Mat::Zero(2, 2), k3 = Mat::Zero(2, 2);
  k1(0, 0) = 0.5;
  k1(1, 1) = -0.5;
  k2(0, 1) = k2(1, 0) = 0.5;
  k3(0, 1) = cdouble(0, -0.5);
  k3(1, 0) = cdouble(0, 0.5);
  return SystemVN(FaithfulState(AlgElement({rho})), {{"alpha", alpha}}, SuperOp::transpose(m2),
                  {AlgElement({k1}), AlgElement({k2}), AlgElement({k3})});
}

std::vector<SystemSpec> specs() {
  std::vector<SystemSpec> out;
  for (bool rev : {false, true}) {
    out.push_back({BlockAlgebra::classical(2), 2, 1, 2, rev});
    out.push_back({BlockAlgebra::classical(3), 1, 2, 2, rev});
    out.push_back({BlockAlgebra::matrix(2), 2, 1, 2, rev});
    out.push_back({BlockAlgebra({1, 2}), 1, 2, 3, rev});
  }
  return out;
}

std::vector<SystemVN> random_systems(int count, Rng& rng, bool reversible_only = false) {
  std::vector<SystemVN> out;
  const auto sp = specs();
  for (int i = 0; out.size() < static_cast<std::size_t>(count); ++i) {
    const SystemSpec& s = sp[static_cast<std::size_t>(i) % sp.size()];
    if (reversible_only && !s.reversible && !s.algebra.abelian()) continue;
    out.push_back(random_system(s, rng));
  }
  return out;
}

}  // namespace

TEST_CASE("classical dual is the time-reversed chain") {
  Rng rng(1);
  const SystemVN s = random_system({BlockAlgebra::classical(3), 1}, rng);
  const SystemVN d = dual_system(s);
  const Mat& a = s.dynamics()[0].map.matrix();
  const Mat& ad = d.dynamics()[0].map.matrix();
  std::vector<double> mu;
  for (int p = 0; p < 3; ++p) mu.push_back(s.state().rho().block(p)(0, 0).real());
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) CHECK(std::abs(ad(p, q) - mu[q] / mu[p] * a(q, p)) < 1e-13);
  // Real coordinates on an abelian algebra are unchanged.
  for (int i = 0; i < s.num_coords(); ++i) CHECK(distance(d.coords()[i], s.coords()[i]) < 1e-15);
}

TEST_CASE("double dual, KMS and reverse involutions") {
  Rng rng(2);
  for (const SystemVN& s : random_systems(30, rng)) {
    CHECK(system_distance(dual_system(dual_system(s)), s) < 1e-10);
    CHECK(system_distance(kms_dual_system(kms_dual_system(s)), s) < 1e-10);
    // (A')^sigma = (A^sigma)'
    CHECK(system_distance(kms_dual_system(dual_system(s)), dual_system(kms_dual_system(s))) < 1e-10);
  }
  for (const SystemVN& s : random_systems(30, rng, true)) {
    REQUIRE(s.reversing().has_value());
    const SystemVN r = reverse_system(s);
    CHECK(system_distance(reverse_system(r), s) < 1e-10);
    CHECK(distance(*r.reversing(), *s.reversing()) < 1e-15);
    CHECK(system_distance(kms_dual_system(r), reverse_system(kms_dual_system(s))) < 1e-10);
  }
}

TEST_CASE("KMS dual specializations") {
  Rng rng(3);
  const SystemVN c = random_system({BlockAlgebra::classical(4), 1}, rng);
  CHECK(distance(kms_dual_system(c).dynamics()[0].map, dual_system(c).dynamics()[0].map) < 1e-13);
  // Tracial state: alpha^sigma is the trace-pairing adjoint.
  const BlockAlgebra m3 = BlockAlgebra::matrix(3);
  const FaithfulState tr = FaithfulState::tracial(m3);
  // Mixture of unitary conjugations: unital and trace preserving.
  Mat u = Eigen::HouseholderQR<Mat>(random_gaussian(3, 3, rng)).householderQ();
  const SuperOp a = (SuperOp::kraus({u}) * 0.6 + SuperOp::kraus({Mat(u * u)}) * 0.4).with_flags({true, true, true, false});
  const SystemVN s(tr, {{"a", a}}, std::nullopt, {});
  CHECK(distance(kms_dual_system(s).dynamics()[0].map, a.trace_adjoint()) < 1e-13);
}

TEST_CASE("reverse of the spin-half system is itself") {
  for (double lam : {0.0, 0.3, 1.0})
    for (double eta : {0.0, 1.1, 3.0})
      for (double phi : {-0.4, 2.2}) {
        const SystemVN s = spin_system(lam, eta, phi, 0.3);
        CHECK(system_distance(reverse_system(s), s) < 1e-12);
        const BalanceReport r = check_detailed_balance(s);
        CHECK_FALSE(r.classical);
        CHECK(r.holds);
        CHECK(is_hermitian(s));
      }
}

TEST_CASE("classical reverse equals dual") {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const SystemVN s = random_system({BlockAlgebra::classical(3), 2, 2}, rng);
    CHECK(system_distance(reverse_system(s), dual_system(s)) < 1e-12);
  }
}

TEST_CASE("classical detailed balance") {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const SystemVN s = random_system({BlockAlgebra::classical(2), 1}, rng);
    const BalanceReport r = check_detailed_balance(s);
    CHECK(r.classical);
    CHECK(r.residual < 1e-13);
  }
  RMat perm = RMat::Zero(3, 3);
  perm(0, 1) = perm(1, 2) = perm(2, 0) = 1.0;
  const SystemVN cyc = SystemVN::classical({1 / 3.0, 1 / 3.0, 1 / 3.0}, {perm}, {{1, 2, 3}});
  const BalanceReport r = check_detailed_balance(cyc);
  CHECK(std::abs(r.residual - 1 / 3.0) < 1e-14);
  CHECK_FALSE(r.holds);
  // Classical DB iff theta = identity sqdb.
  CHECK(sqdb_residual(cyc) > 1e-3);
  for (int i = 0; i < 10; ++i) {
    const SystemVN s = random_system({BlockAlgebra::classical(4), 1, 1, 2, false, i % 2 == 0}, rng);
    const BalanceReport b = check_detailed_balance(s);
    CHECK(b.holds == (sqdb_residual(s) <= 1e-9));
    CHECK(b.holds == (i % 2 == 0));
  }
}

TEST_CASE("hermitian coordinate sets") {
  CHECK(is_hermitian(spin_system(0.5, 1.0, 2.0, 0.4)));
  const FaithfulState t = FaithfulState::tracial(BlockAlgebra::matrix(2));
  Mat e12 = Mat::Zero(2, 2), e21 = Mat::Zero(2, 2);
  e12(0, 1) = 1.0;
  e21(1, 0) = 1.0;
  const SuperOp id = SuperOp::identity(t.algebra());
  CHECK_FALSE(is_hermitian(SystemVN(t, {{"id", id}}, std::nullopt, {AlgElement({e12})})));
  CHECK(is_hermitian(SystemVN(t, {{"id", id}}, std::nullopt, {AlgElement({e12}), AlgElement({e21})})));
}

TEST_CASE("construction errors") {
  RMat a(2, 2);
  a << 0.8, 0.2, 0.6, 0.4;
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  CHECK(kind_of([&] { SystemVN::classical({0.5, 0.5}, {a}, {}); }) == ErrorKind::InvarianceViolated);
  RMat b(2, 2);
  b << 0.8, 0.3, 0.6, 0.4;
  CHECK(kind_of([&] { SystemVN::classical({0.75, 0.25}, {b}, {}); }) != ErrorKind::InvalidArgument);
  const FaithfulState t = FaithfulState::tracial(BlockAlgebra::matrix(2));
  CHECK(kind_of([&] {
          SystemVN(t, {}, SuperOp::identity(t.algebra()).with_flags({true, true, true, true}), {});
        }) == ErrorKind::NotReversing);
  const SystemVN no_theta(t, {}, std::nullopt, {});
  CHECK(kind_of([&] { reverse_system(no_theta); }) == ErrorKind::NoReversingOperation);
  CHECK(kind_of([&] { check_detailed_balance(no_theta); }) == ErrorKind::NoReversingOperation);
  // The transpose is not CP: declared-CP dynamics must fail.
  CHECK(kind_of([&] {
          SystemVN(t, {{"t", SuperOp::transpose(t.algebra()).with_flags({true, true, true, false})}}, std::nullopt, {});
        }) == ErrorKind::NotCP);
}

TEST_CASE("random sqdb systems satisfy sqdb") {
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    SystemSpec sp{BlockAlgebra::matrix(2), 2, 2, 2, true, true};
    const SystemVN s = random_system(sp, rng);
    CHECK(sqdb_residual(s) < 1e-12);
    CHECK(s.state().diagonal());
  }
}
