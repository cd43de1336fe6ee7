#include "qot/generators.hpp"

#include <cmath>

namespace qot {

namespace {

constexpr int kMaxDraws = 200;

std::vector<AlgElement> random_coords(const BlockAlgebra& alg, int d, Rng& rng) {
  std::vector<AlgElement> k;
  for (int i = 0; i < d; ++i) k.push_back(random_hermitian_element(alg, rng));
  return k;
}

int total_dim(const BlockAlgebra& alg) {
  int n = 0;
  for (int d : alg.dims()) n += d;
  return n;
}

// First map and its invariant state.
std::pair<SuperOp, FaithfulState> draw_base(const SystemSpec& spec, Rng& rng) {
  const BlockAlgebra& alg = spec.algebra;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    try {
      if (alg.abelian()) {
        const int n = alg.num_blocks();
        const SuperOp a = SuperOp::transition(random_stochastic(n, n, rng));
        FaithfulState mu = stationary_state(a);
        if (mu.rho().min_eigenvalue() >= spec.floor) return {a, mu};
        continue;
      }
      if (!spec.reversible) {
        const SuperOp a = random_unital_cp(alg, alg, spec.kraus, rng);
        FaithfulState mu = stationary_state(a);
        if (mu.rho().min_eigenvalue() >= spec.floor) return {a, mu};
        continue;
      }
      // Real Kraus map, then rotate its (real) invariant state to diagonal form.
      const int n = total_dim(alg);
      std::vector<Mat> ks;
      Mat s = Mat::Zero(n, n);
      std::normal_distribution<double> g;
      for (int i = 0; i < spec.kraus; ++i) {
        RMat k(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) k(r, c) = g(rng);
        ks.push_back(k.cast<cdouble>());
        s += ks.back().adjoint() * ks.back();
      }
      const Mat si = hermitian_function(s, [](double x) { return 1.0 / std::sqrt(x); });
      for (Mat& k : ks) k = k * si;
      const SuperOp base = pinched_kraus(alg, alg, ks);
      const FaithfulState mu0 = stationary_state(base);
      // O^T rho O = D blockwise with O real orthogonal.
      std::vector<Mat> rot, diag;
      for (const Mat& b : mu0.rho().blocks()) {
        Eigen::SelfAdjointEigenSolver<RMat> es(b.real());
        rot.push_back(es.eigenvectors().cast<cdouble>());
        diag.push_back(es.eigenvalues().cast<cdouble>().asDiagonal());
      }
      const AlgElement o(rot);
      const AlgElement ot = o.transpose();
      const SuperOp a = SuperOp::from_function(alg, alg, [&](const AlgElement& x) {
        return ot * base(o * x * ot) * o;
      }, {true, true, true, false});
      FaithfulState mu{AlgElement(diag)};
      if (mu.rho().min_eigenvalue() >= spec.floor) return {a, mu};
    } catch (const Error&) {
      // degenerate draw, try again
    }
  }
  throw Error(ErrorKind::NotConverged, "could not draw a faithful invariant state");
}

}  // namespace

static SuperOp lazy_map(const FaithfulState& mu, double lazy, double tau) {
  const SuperOp sigma = modular_group(mu, tau);
  return SuperOp::from_function(mu.algebra(), mu.algebra(), [&](const AlgElement& a) {
    return sigma(a) * cdouble(lazy) + AlgElement::identity(mu.algebra()) * ((1 - lazy) * mu(a));
  }, {true, true, true, false});
}

SystemVN random_system(const SystemSpec& spec, Rng& rng) {
  std::vector<Dynamics> dyn;
  std::optional<FaithfulState> state;
  if (spec.lazy >= 0) {
    const bool diag = spec.reversible || spec.sqdb || spec.algebra.abelian();
    state = diag ? random_diagonal_state(spec.algebra, rng, spec.floor) : random_state(spec.algebra, rng, spec.floor);
    for (int i = 0; i < spec.dynamics; ++i)
      dyn.push_back({"alpha" + std::to_string(i), lazy_map(*state, spec.lazy, spec.modular_time)});
  } else {
    auto [base, mu0] = draw_base(spec, rng);
    state = mu0;
    dyn.push_back({"alpha0", base});
    std::uniform_int_distribution<int> rank_dist(1, 4);
    for (int i = 1; i < spec.dynamics; ++i)
      dyn.push_back({"alpha" + std::to_string(i), random_channel_between(mu0, mu0, rng, rank_dist(rng))});
  }
  const FaithfulState& mu = *state;
  std::optional<SuperOp> theta;
  if (spec.algebra.abelian())
    theta = SuperOp::identity(spec.algebra).with_flags({true, true, true, true});
  else
    theta = default_reversing(mu);
  SystemVN s(mu, std::move(dyn), std::move(theta), random_coords(spec.algebra, spec.coords, rng));
  return spec.sqdb ? sqdb_symmetrize(s) : s;
}

SystemVN with_random_coords(const SystemVN& s, int d, Rng& rng) {
  return with_coords(s, random_coords(s.algebra(), d, rng));
}

SystemVN with_coords(const SystemVN& s, std::vector<AlgElement> coords) {
  return SystemVN(s.state(), s.dynamics(), s.reversing(), std::move(coords));
}

SystemVN sqdb_symmetrize(const SystemVN& s) {
  const SystemVN r = reverse_system(s);
  std::vector<Dynamics> dyn;
  for (std::size_t i = 0; i < s.dynamics().size(); ++i) {
    const SuperOp& a = s.dynamics()[i].map;
    const SuperOp sum = (a + r.dynamics()[i].map) * 0.5;
    dyn.push_back({s.dynamics()[i].name, sum.with_flags({true, true, true, false})});
  }
  return SystemVN(s.state(), std::move(dyn), s.reversing(), s.coords());
}

}  // namespace qot
