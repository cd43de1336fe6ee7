#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qot/transport.hpp"
#include "test_util.hpp"

using namespace qot;
using qot::testing::random_feasible_plan;

namespace {

RMat uniform4() { return RMat::Constant(4, 4, 0.25); }

RMat two_point(double r, double s) {
  RMat b(2, 2);
  b << 1 - r, r, s, 1 - s;
  return b;
}

std::vector<SystemSpec> mixed_specs() {
  return {{BlockAlgebra::classical(2), 2, 1, 2, true},
          {BlockAlgebra::classical(3), 2, 1, 2, true},
          {BlockAlgebra::matrix(2), 2, 1, 2, true},
          {BlockAlgebra::matrix(2), 2, 1, 2, false},
          {BlockAlgebra({1, 2}), 2, 1, 2, true}};
}

Mat pure(cdouble a, cdouble b) {
  CVec v(2);
  v << a, b;
  v.normalize();
  return v * v.adjoint();
}

}  // namespace

TEST_CASE("4x2 cost vector and parametrized plan") {
  const std::vector<double> mu{0.25, 0.25, 0.25, 0.25};
  const SystemVN a = SystemVN::classical(mu, {uniform4()}, {{0.5, -0.5, 0.5, -0.5}}, false);
  const SystemVN b = SystemVN::classical({0.5, 0.5}, {two_point(0.5, 0.5)}, {{0.5, -0.5}}, false);
  const CostFunctional c = build_cost(a, b);
  const double expect[8] = {0, 1, 0, 1, 1, 0, 1, 0};  // ordering (w11, w21, w31, w41, w12, ...)
  for (int p = 0; p < 4; ++p)
    for (int r = 0; r < 2; ++r) CHECK(c.direct(p * 2 + r) == expect[r * 4 + p]);
  // omega = (mu1 - g1, g2, mu3 - g3, g4, g1, mu2 - g2, g3, mu4 - g4) with nu1 = 1/2.
  const double g[4] = {0.05, 0.1, 0.13, 0.08};
  REQUIRE(std::abs(mu[0] - g[0] + g[1] + mu[2] - g[2] + g[3] - 0.5) < 1e-15);
  Coupling plan(a.algebra(), b.algebra());
  const double w[8] = {mu[0] - g[0], g[1], mu[2] - g[2], g[3], g[0], mu[1] - g[1], g[2], mu[3] - g[3]};
  for (int p = 0; p < 4; ++p)
    for (int r = 0; r < 2; ++r) plan.block(p, r)(0, 0) = w[r * 4 + p];
  CHECK(std::abs(cost(plan, a, b) - (g[0] + g[1] + g[2] + g[3])) < 1e-12);
  CHECK(std::abs(cost_direct(plan, a, b) - (g[0] + g[1] + g[2] + g[3])) < 1e-12);
}

TEST_CASE("classical rows match the scalar balance equations") {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const SystemVN a = random_system({BlockAlgebra::classical(2), 1}, rng);
    const SystemVN b = random_system({BlockAlgebra::classical(2), 1}, rng);
    const ConstraintSet cs = build_constraints(a, b, PlanClass::Plain);
    RVec x(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 4; ++i) x(i) = u(rng);
    const RMat al = a.dynamics()[0].map.matrix().real();
    const RMat be = b.dynamics()[0].map.matrix().real();
    const double nu[2] = {b.state().rho().block(0)(0, 0).real(), b.state().rho().block(1)(0, 0).real()};
    auto w = [&](int p, int r) { return x(p * 2 + r); };
    const RVec res = cs.matrix * x - cs.rhs;
    int row = 0;
    for (std::size_t i = 0; i < cs.tags.size(); ++i)
      if (cs.tags[i] == "balance:alpha0") {
        const int r = row % 2, q = row / 2;
        double lhs = 0, rhs = 0;
        for (int p = 0; p < 2; ++p) lhs += w(p, r) * al(p, q);
        for (int s = 0; s < 2; ++s) rhs += w(q, s) * nu[r] * be(r, s) / nu[s];
        CHECK(std::abs(res(static_cast<Eigen::Index>(i)) - (lhs - rhs) / nu[r]) < 1e-12);
        ++row;
      }
    CHECK(row == 4);
  }
}

TEST_CASE("product plan and delta are feasible for every class") {
  Rng rng(2);
  const auto sp = mixed_specs();
  for (std::size_t i = 0; i < sp.size(); ++i)
    for (std::size_t j = 0; j < sp.size(); ++j) {
      const SystemVN a = random_system(sp[i], rng);
      const SystemVN b = random_system(sp[j], rng);
      for (PlanClass cls : {PlanClass::Plain, PlanClass::Modular, PlanClass::Kms}) {
        const ConstraintSet cs = build_constraints(a, b, cls);
        CHECK(cs.x0_residual <= 1e-12);
        CHECK(cs.tags.size() == static_cast<std::size_t>(cs.matrix.rows()));
        for (const auto& [tag, r] : feasibility_residual(Coupling::product(a.state(), b.state()), a, b, cls))
          CHECK_MESSAGE(r <= 1e-12, tag);
        if (i == j) {
          for (const auto& [tag, r] : feasibility_residual(delta_state(a.state()), a, a, cls))
            CHECK_MESSAGE(r <= 1e-12, tag);
        }
      }
    }
}

TEST_CASE("wrong marginals are detected") {
  Rng rng(3);
  const SystemVN a = random_system({BlockAlgebra::matrix(2), 1}, rng);
  const SystemVN b = random_system({BlockAlgebra::classical(2), 1}, rng);
  Coupling c(a.algebra(), b.algebra());
  for (int j = 0; j < 2; ++j) {
    const Mat g = random_gaussian(2, 2, rng);
    c.block(0, j) = g * g.adjoint();
  }
  const double t = c.trace();
  for (int j = 0; j < 2; ++j) c.block(0, j) /= t;
  const auto r = feasibility_residual(c, a, b, PlanClass::Plain);
  CHECK(r.at("marginal-A") > 1e-3);
  CHECK(r.at("psd") == 0.0);
  CHECK_THROWS_AS(cost(c, a, b), Error);
}

TEST_CASE("cost identities") {
  Rng rng(4);
  const auto sp = mixed_specs();
  for (const auto& s : sp) {
    const SystemVN a = random_system(s, rng);
    CHECK(std::abs(cost(delta_state(a.state()), a, a)) < 1e-12);
    for (const auto& t : sp) {
      const SystemVN b = random_system(t, rng);
      const ConstraintSet cs = build_constraints(a, b, PlanClass::Plain);
      const CostFunctional cf = build_cost(a, b);
      for (int rep = 0; rep < 3; ++rep) {
        const Coupling w = random_feasible_plan(cs, rng);
        const double c = cost(w, a, b);
        CHECK(c >= -1e-9);
        CHECK(std::abs(c - cost_direct(w, a, b)) < 1e-10);
        CHECK(std::abs(c - cf(w.coords())) < 1e-10);
        const CostParts parts = cost_parts(w, a, b);
        CHECK(parts.mismatch >= -1e-10);
        CHECK(parts.dissipation >= -1e-10);
        CHECK(std::abs(parts.mismatch + parts.dissipation - c) < 1e-10);
      }
    }
  }
  // Product plan, A = B abelian, real k: cost = 2 sum Var(k).
  const SystemVN c = random_system({BlockAlgebra::classical(4), 2}, rng);
  double var = 0;
  for (const AlgElement& k : c.coords()) {
    const double m = c.state()(k).real();
    var += c.state()(k * k).real() - m * m;
  }
  CHECK(std::abs(cost(Coupling::product(c.state(), c.state()), c, c) - 2 * var) < 1e-12);
}

TEST_CASE("modular generator rows give modular covariance") {
  Rng rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const SystemVN a = random_system({BlockAlgebra::matrix(2), 1, 1, 2}, rng);
    const SystemVN b = random_system({BlockAlgebra({1, 2}), 1, 1, 2}, rng);
    const ConstraintSet cs = build_constraints(a, b, PlanClass::Modular);
    const Coupling w = random_feasible_plan(cs, rng);
    const SuperOp e = channel_of_plan(w, a.state(), b.state());
    for (double t : {0.3, 1.0, -0.7}) {
      const SuperOp lhs = e.compose(modular_group(a.state(), t));
      const SuperOp rhs = modular_group(b.state(), t).compose(e);
      CHECK(distance(lhs, rhs) < 1e-9);
    }
  }
}

TEST_CASE("dual and KMS plans transport the balance condition") {
  Rng rng(6);
  const auto sp = mixed_specs();
  for (const auto& s : sp)
    for (const auto& t : sp) {
      const SystemVN a = random_system(s, rng);
      const SystemVN b = random_system(t, rng);
      const SystemVN ad = dual_system(a), bd = dual_system(b);
      const SystemVN as = kms_dual_system(a), bs = kms_dual_system(b);
      const Coupling w = random_feasible_plan(build_constraints(a, b, PlanClass::Plain), rng);
      CHECK(is_feasible(feasibility_residual(dual_plan(w, a, b), bd, ad, PlanClass::Plain)));
      CHECK(is_feasible(feasibility_residual(kms_plan(w, a, b), bs, as, PlanClass::Plain)));
      const Coupling ws = random_feasible_plan(build_constraints(a, b, PlanClass::Modular), rng);
      const Coupling wd = dual_plan(ws, a, b);
      CHECK(is_feasible(feasibility_residual(wd, bd, ad, PlanClass::Modular)));
      CHECK(std::abs(cost(wd, bd, ad) - cost(ws, a, b)) < 1e-8);
      CHECK(std::abs(cost(kms_plan(ws, a, b), bs, as) - cost(ws, a, b)) < 1e-8);
    }
}

TEST_CASE("flow deviation") {
  const BlockAlgebra m2 = BlockAlgebra::matrix(2);
  const AlgElement x({pure(1.0, 1.0)}), y({pure(1.0, cdouble(0, 1))});
  CHECK(std::abs(flow_deviation_V(SuperOp::identity(m2), x, y)) < 1e-15);
  const double eta = std::numbers::pi / 3;
  Mat u = Mat::Identity(2, 2);
  u(1, 1) = std::polar(1.0, eta);
  // State action X -> U X U^* of a(a) = U^* a U.
  const SuperOp star = SuperOp::kraus({Mat(u.adjoint())});
  const double vxy = flow_deviation_V(star, x, y), vyx = flow_deviation_V(star, y, x);
  // Oracle: direct 2x2 computation.
  const Mat xm = x.block(0), ym = y.block(0);
  const double oxy = ((u * xm * u.adjoint()) * ym).trace().real() - (xm * ym).trace().real();
  const double oyx = ((u * ym * u.adjoint()) * xm).trace().real() - (ym * xm).trace().real();
  CHECK(std::abs(vxy - oxy) < 1e-14);
  CHECK(std::abs(vyx - oyx) < 1e-14);
  CHECK(std::abs(vxy - vyx) > 0.1);
  Mat dx = Mat::Zero(2, 2), dy = Mat::Zero(2, 2);
  dx(0, 0) = 0.3;
  dx(1, 1) = 0.7;
  dy(0, 0) = 0.9;
  dy(1, 1) = 0.1;
  CHECK(std::abs(flow_deviation_V(star, AlgElement({dx}), AlgElement({dy})) -
                 flow_deviation_V(star, AlgElement({dy}), AlgElement({dx}))) < 1e-15);
  Mat bad = Mat::Identity(2, 2);
  CHECK_THROWS_AS(flow_deviation_V(star, AlgElement({bad}), y), Error);
}

TEST_CASE("dimension mismatches") {
  Rng rng(7);
  const SystemVN a = random_system({BlockAlgebra::classical(2), 1}, rng);
  const SystemVN b = random_system({BlockAlgebra::classical(2), 2}, rng);
  const SystemVN c = random_system({BlockAlgebra::classical(2), 1, 2}, rng);
  CHECK_THROWS_AS(build_cost(a, b), Error);
  CHECK_THROWS_AS(build_constraints(a, c, PlanClass::Plain), Error);
}
