#include "qot/systems.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qot {

namespace {

constexpr double kTol = 1e-10;

std::string describe(const std::string& what, const std::string& name, double r) {
  std::ostringstream os;
  os << what << " for dynamics '" << name << "' (residual " << r << ")";
  return os.str();
}

}  // namespace

SystemVN::SystemVN(FaithfulState state, std::vector<Dynamics> dynamics, std::optional<SuperOp> reversing,
                   std::vector<AlgElement> coords)
    : state_(std::move(state)), dynamics_(std::move(dynamics)), reversing_(std::move(reversing)),
      coords_(std::move(coords)) {
  const BlockAlgebra& alg = state_.algebra();
  for (const Dynamics& d : dynamics_) {
    if (!(d.map.source() == alg && d.map.target() == alg))
      throw Error(ErrorKind::DimensionMismatch, "dynamics '" + d.name + "' does not act on the system algebra");
    double r = invariance_residual(d.map, state_, state_);
    if (r > kTol) throw Error(ErrorKind::InvarianceViolated, describe("state not invariant", d.name, r), r);
    r = d.map.unital_residual();
    if (r > kTol) throw Error(ErrorKind::NotUnital, describe("map not unital", d.name, r), r);
    try {
      d.map.with_flags({false, d.map.flags().positive, d.map.flags().cp, false}).verify_flags();
    } catch (const Error& e) {
      throw Error(e.kind(), "dynamics '" + d.name + "': " + e.what(), e.residual());
    }
  }
  if (reversing_) {
    const double r = reversing_residual(*reversing_, state_);
    if (r > kTol) {
      std::ostringstream os;
      os << "reversing operation fails the axioms (residual " << r << ")";
      throw Error(ErrorKind::NotReversing, os.str(), r);
    }
  }
  for (const AlgElement& k : coords_)
    if (!(k.algebra() == alg)) throw Error(ErrorKind::DimensionMismatch, "coordinate outside the system algebra");
}

SystemVN SystemVN::classical(const std::vector<double>& p, const std::vector<RMat>& transitions,
                             const std::vector<std::vector<double>>& coords, bool with_reversing) {
  const FaithfulState mu = FaithfulState::classical(p);
  std::vector<Dynamics> dyn;
  for (std::size_t i = 0; i < transitions.size(); ++i)
    dyn.push_back({"alpha" + std::to_string(i), SuperOp::transition(transitions[i])});
  std::vector<AlgElement> k;
  for (const auto& c : coords) {
    if (c.size() != p.size()) throw Error(ErrorKind::DimensionMismatch, "coordinate length differs from point count");
    k.push_back(AlgElement::diagonal(std::vector<cdouble>(c.begin(), c.end())));
  }
  std::optional<SuperOp> theta;
  if (with_reversing)
    theta = SuperOp::identity(mu.algebra()).with_flags({true, true, true, true});
  return SystemVN(mu, std::move(dyn), std::move(theta), std::move(k));
}

std::optional<SuperOp> default_reversing(const FaithfulState& state) {
  if (!state.real(1e-14)) return std::nullopt;
  return SuperOp::transpose(state.algebra());
}

SystemVN dual_system(const SystemVN& s) {
  const FaithfulState& mu = s.state();
  std::vector<Dynamics> dyn;
  for (const Dynamics& d : s.dynamics()) dyn.push_back({d.name, dual_channel(d.map, mu, mu)});
  std::optional<SuperOp> theta;
  if (s.reversing()) {
    const SuperOp t = dual_channel(*s.reversing(), mu, mu);
    theta = t.with_flags({true, true, s.reversing()->flags().cp, true});
  }
  std::vector<AlgElement> k;
  for (const AlgElement& c : s.coords()) k.push_back(c.conjugate());
  return SystemVN(mu.transposed(), std::move(dyn), std::move(theta), std::move(k));
}

SystemVN kms_dual_system(const SystemVN& s) {
  std::vector<Dynamics> dyn;
  for (const Dynamics& d : s.dynamics()) dyn.push_back({d.name, kms_dual(d.map, s.state(), s.state())});
  return SystemVN(s.state(), std::move(dyn), s.reversing(), s.coords());
}

SystemVN reverse_system(const SystemVN& s) {
  if (!s.reversing()) throw Error(ErrorKind::NoReversingOperation, "system has no reversing operation");
  const SuperOp& th = *s.reversing();
  std::vector<Dynamics> dyn;
  for (const Dynamics& d : s.dynamics())
    dyn.push_back({d.name, theta_kms_dual(d.map, s.state(), s.state(), th, th)});
  return SystemVN(s.state(), std::move(dyn), s.reversing(), s.coords());
}

double sqdb_residual(const SystemVN& s) {
  const SystemVN r = reverse_system(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.dynamics().size(); ++i)
    worst = std::max(worst, distance(r.dynamics()[i].map, s.dynamics()[i].map));
  return worst;
}

BalanceReport check_detailed_balance(const SystemVN& s) {
  BalanceReport rep;
  if (s.algebra().abelian()) {
    rep.classical = true;
    const int n = s.algebra().num_blocks();
    for (const Dynamics& d : s.dynamics())
      for (int r = 0; r < n; ++r)
        for (int q = 0; q < n; ++q) {
          const double nr = s.state().rho().block(r)(0, 0).real();
          const double nq = s.state().rho().block(q)(0, 0).real();
          const double v = std::abs(nr * d.map.matrix()(r, q) - nq * d.map.matrix()(q, r));
          rep.residual = std::max(rep.residual, v);
        }
  } else {
    rep.residual = sqdb_residual(s);
  }
  rep.holds = rep.residual <= 1e-9;
  return rep;
}

bool is_hermitian(const SystemVN& s) {
  for (const AlgElement& k : s.coords()) {
    const AlgElement ks = k.adjoint();
    bool found = false;
    for (const AlgElement& l : s.coords())
      if (distance(ks, l) <= 1e-12) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

double system_distance(const SystemVN& a, const SystemVN& b) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!(a.algebra() == b.algebra()) || a.dynamics().size() != b.dynamics().size() ||
      a.coords().size() != b.coords().size() || a.reversing().has_value() != b.reversing().has_value())
    return inf;
  double d = (a.state().rho() - b.state().rho()).max_abs();
  for (std::size_t i = 0; i < a.coords().size(); ++i) d = std::max(d, (a.coords()[i] - b.coords()[i]).max_abs());
  for (std::size_t i = 0; i < a.dynamics().size(); ++i)
    d = std::max(d, distance(a.dynamics()[i].map, b.dynamics()[i].map));
  if (a.reversing()) d = std::max(d, distance(*a.reversing(), *b.reversing()));
  return d;
}

}  // namespace qot
