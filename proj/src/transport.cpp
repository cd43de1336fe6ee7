#include "qot/transport.hpp"

#include <algorithm>
#include <cmath>

namespace qot {

std::string to_string(PlanClass c) {
  switch (c) {
    case PlanClass::Plain: return "plain";
    case PlanClass::Modular: return "modular";
    case PlanClass::Kms: return "kms";
  }
  return "plain";
}

PlanClass plan_class_from_string(const std::string& s) {
  if (s == "plain") return PlanClass::Plain;
  if (s == "modular") return PlanClass::Modular;
  if (s == "kms") return PlanClass::Kms;
  throw Error(ErrorKind::InvalidArgument, "unknown plan class '" + s + "'");
}

std::map<std::string, double> ConstraintSet::residuals(const RVec& x) const {
  std::map<std::string, double> out;
  const RVec r = matrix * x - rhs;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    double& v = out[tags[i]];
    v = std::max(v, std::abs(r(static_cast<Eigen::Index>(i))));
  }
  return out;
}

double ConstraintSet::max_residual(const RVec& x) const {
  return matrix.rows() ? (matrix * x - rhs).cwiseAbs().maxCoeff() : 0.0;
}

std::vector<SuperOp> channel_basis(const BlockAlgebra& left, const FaithfulState& nu) {
  const BlockAlgebra& right = nu.algebra();
  const int n = Coupling::coord_dim(left, right);
  std::vector<SuperOp> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const RVec e = RVec::Unit(n, j);
    out.push_back(channel_of_plan_unchecked(Coupling::from_coords(left, right, e), nu));
  }
  return out;
}

namespace {

struct RowBuilder {
  std::vector<RVec> cols;  // one column per coupling coordinate, grown block by block
  std::vector<double> rhs;
  std::vector<std::string> tags;

  explicit RowBuilder(int n) : cols(static_cast<std::size_t>(n)) {}

  // Each entry of `column(j)` becomes one row.
  template <class F>
  void add(const std::string& tag, int rows, const RVec& target, F column) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const RVec c = column(static_cast<int>(j));
      RVec grown(cols[j].size() + rows);
      grown << cols[j], c;
      cols[j] = std::move(grown);
    }
    for (int r = 0; r < rows; ++r) {
      rhs.push_back(target(r));
      tags.push_back(tag);
    }
  }
};

RVec flat_real(const Mat& m) { return Eigen::Map<const Mat>(m.data(), m.size(), 1).real(); }

}  // namespace

ConstraintSet build_constraints(const SystemVN& a, const SystemVN& b, PlanClass cls) {
  if (a.dynamics().size() != b.dynamics().size())
    throw Error(ErrorKind::DimensionMismatch, "systems have different numbers of dynamics entries");
  const BlockAlgebra& la = a.algebra();
  const BlockAlgebra& lb = b.algebra();
  const FaithfulState& mu = a.state();
  const FaithfulState& nu = b.state();
  const int n = Coupling::coord_dim(la, lb);

  std::vector<Coupling> basis;
  for (int j = 0; j < n; ++j) basis.push_back(Coupling::from_coords(la, lb, RVec::Unit(n, j)));
  const std::vector<SuperOp> e = channel_basis(la, nu);

  RowBuilder rb(n);
  rb.add("marginal-A", la.element_dim(), mu.rho().coords().real(),
         [&](int j) -> RVec { return basis[j].left_marginal().coords().real(); });
  rb.add("marginal-B", lb.element_dim(), nu.rho().transpose().coords().real(),
         [&](int j) -> RVec { return basis[j].right_marginal().coords().real(); });

  auto intertwine = [&](const std::string& tag, const SuperOp& alpha, const SuperOp& beta) {
    const int rows = la.element_dim() * lb.element_dim();
    rb.add(tag, rows, RVec::Zero(rows), [&](int j) -> RVec {
      return flat_real(e[j].matrix() * alpha.matrix() - beta.matrix() * e[j].matrix());
    });
  };
  for (std::size_t i = 0; i < a.dynamics().size(); ++i)
    intertwine("balance:" + a.dynamics()[i].name, a.dynamics()[i].map, b.dynamics()[i].map);
  if (a.reversing() && b.reversing()) intertwine("balance:reversing", *a.reversing(), *b.reversing());
  if (cls != PlanClass::Plain) intertwine("modular", modular_generator(mu), modular_generator(nu));
  if (cls == PlanClass::Kms) {
    for (std::size_t i = 0; i < a.dynamics().size(); ++i)
      intertwine("kms:" + a.dynamics()[i].name, kms_dual(a.dynamics()[i].map, mu, mu),
                 kms_dual(b.dynamics()[i].map, nu, nu));
  }

  ConstraintSet cs{la, lb, RMat(rb.rhs.size(), n), Eigen::Map<RVec>(rb.rhs.data(), rb.rhs.size()), rb.tags};
  for (int j = 0; j < n; ++j) cs.matrix.col(j) = rb.cols[static_cast<std::size_t>(j)];

  Eigen::ColPivHouseholderQR<RMat> qr(cs.matrix.transpose());
  qr.setThreshold(1e-11);
  cs.rank = static_cast<int>(qr.rank());
  const RMat q = qr.householderQ();
  cs.null_basis = q.rightCols(n - cs.rank);
  cs.x0 = Coupling::product(mu, nu).coords();
  cs.x0_residual = cs.max_residual(cs.x0);
  if (cs.x0_residual > 1e-9)
    throw Error(ErrorKind::SolverFailure, "product plan violates the assembled constraints", cs.x0_residual);
  return cs;
}

namespace {

void require_same_d(const SystemVN& a, const SystemVN& b) {
  if (a.num_coords() != b.num_coords())
    throw Error(ErrorKind::DimensionMismatch, "systems have different coordinate counts");
}

// l~ = (rho^{-1/2} l rho^{1/2})^T
AlgElement tilde(const AlgElement& l, const FaithfulState& nu) {
  return (nu.inv_sqrt_rho() * l * nu.sqrt_rho()).transpose();
}

RVec block_coords(const BlockAlgebra& la, const BlockAlgebra& lb, const std::function<Mat(int, int)>& f) {
  RVec x(Coupling::coord_dim(la, lb));
  Eigen::Index off = 0;
  for (int i = 0; i < la.num_blocks(); ++i)
    for (int j = 0; j < lb.num_blocks(); ++j) {
      const Mat m = f(i, j);
      x.segment(off, m.size()) = hs_coords(hermitian_part(m)).real();
      off += m.size();
    }
  return x;
}

}  // namespace

CostFunctional build_cost(const SystemVN& a, const SystemVN& b) {
  require_same_d(a, b);
  const BlockAlgebra& la = a.algebra();
  const BlockAlgebra& lb = b.algebra();
  CostFunctional c;
  for (int i = 0; i < a.num_coords(); ++i) {
    const AlgElement& k = a.coords()[static_cast<std::size_t>(i)];
    const AlgElement& l = b.coords()[static_cast<std::size_t>(i)];
    c.constant += (a.state()(k.adjoint() * k) + b.state()(l.adjoint() * l)).real();
  }
  std::vector<AlgElement> lt;
  for (const AlgElement& l : b.coords()) lt.push_back(tilde(l, b.state()));
  c.linear = block_coords(la, lb, [&](int i, int j) {
    const int n = la.block_dim(i), m = lb.block_dim(j);
    Mat s = Mat::Zero(n * m, n * m);
    for (std::size_t t = 0; t < lt.size(); ++t) {
      const Mat& k = a.coords()[t].block(i);
      const Mat& y = lt[t].block(j);
      s -= kron(k, y.adjoint()) + kron(k.adjoint(), y);
    }
    return s;
  });
  c.direct = block_coords(la, lb, [&](int i, int j) {
    const int n = la.block_dim(i), m = lb.block_dim(j);
    Mat s = Mat::Zero(n * m, n * m);
    for (std::size_t t = 0; t < lt.size(); ++t) {
      const Mat d = kron(a.coords()[t].block(i), Mat::Identity(m, m)) - kron(Mat::Identity(n, n), lt[t].block(j));
      s += d.adjoint() * d;
    }
    return s;
  });
  return c;
}

double cost(const Coupling& plan, const SystemVN& a, const SystemVN& b) {
  require_same_d(a, b);
  const SuperOp e = channel_of_plan(plan, a.state(), b.state());
  double total = 0.0;
  for (int i = 0; i < a.num_coords(); ++i) {
    const AlgElement& k = a.coords()[static_cast<std::size_t>(i)];
    const AlgElement& l = b.coords()[static_cast<std::size_t>(i)];
    total += (a.state()(k.adjoint() * k) + b.state()(l.adjoint() * l)).real();
    total -= 2.0 * b.state()(l.adjoint() * e(k)).real();
  }
  return total;
}

double cost_direct(const Coupling& plan, const SystemVN& a, const SystemVN& b) {
  return build_cost(a, b).direct.dot(plan.coords());
}

CostParts cost_parts(const Coupling& plan, const SystemVN& a, const SystemVN& b) {
  require_same_d(a, b);
  const SuperOp e = channel_of_plan(plan, a.state(), b.state());
  CostParts p;
  for (int i = 0; i < a.num_coords(); ++i) {
    const AlgElement& k = a.coords()[static_cast<std::size_t>(i)];
    const AlgElement& l = b.coords()[static_cast<std::size_t>(i)];
    const AlgElement ek = e(k);
    const AlgElement diff = l - ek;
    p.mismatch += b.state()(diff.adjoint() * diff).real();
    p.dissipation += b.state()(e(k.adjoint() * k) - ek.adjoint() * ek).real();
  }
  return p;
}

std::map<std::string, double> feasibility_residual(const Coupling& plan, const SystemVN& a, const SystemVN& b,
                                                   PlanClass cls) {
  const ConstraintSet cs = build_constraints(a, b, cls);
  auto r = cs.residuals(plan.coords());
  r["psd"] = std::max(0.0, -plan.min_eigenvalue());
  r["trace"] = std::abs(plan.trace() - 1.0);
  return r;
}

bool is_feasible(const std::map<std::string, double>& residuals, double tol) {
  return std::all_of(residuals.begin(), residuals.end(), [&](const auto& kv) { return kv.second <= tol; });
}

Coupling dual_plan(const Coupling& plan, const SystemVN& a, const SystemVN& b) {
  const SuperOp e = channel_of_plan(plan, a.state(), b.state());
  const SuperOp d = dual_channel(e, a.state(), b.state());
  return plan_of_channel_unchecked(d, a.state().transposed());
}

Coupling kms_plan(const Coupling& plan, const SystemVN& a, const SystemVN& b) {
  const SuperOp e = channel_of_plan(plan, a.state(), b.state());
  return plan_of_channel_unchecked(kms_dual(e, a.state(), b.state()), a.state());
}

Coupling reverse_plan(const Coupling& plan, const SystemVN& a, const SystemVN& b) {
  if (!a.reversing() || !b.reversing())
    throw Error(ErrorKind::NoReversingOperation, "reverse plan needs reversing operations on both systems");
  const SuperOp e = channel_of_plan(plan, a.state(), b.state());
  const SuperOp r = theta_kms_dual(e, a.state(), b.state(), *a.reversing(), *b.reversing());
  return plan_of_channel_unchecked(r, a.state());
}

Coupling compose_plans(const Coupling& omega, const Coupling& psi, const SystemVN& a, const SystemVN& b,
                       const SystemVN& c) {
  const SuperOp e1 = channel_of_plan(omega, a.state(), b.state());
  const SuperOp e2 = channel_of_plan(psi, b.state(), c.state());
  return plan_of_channel_unchecked(e2.compose(e1), c.state());
}

double flow_deviation_V(const SuperOp& alpha_state_action, const AlgElement& x, const AlgElement& y) {
  for (const AlgElement* d : {&x, &y}) {
    const double herm = (*d - d->adjoint()).max_abs();
    const double tr = std::abs(d->trace() - 1.0);
    const double neg = -d->min_eigenvalue();
    if (herm > 1e-10 || tr > 1e-10 || neg > 1e-10)
      throw Error(ErrorKind::NotDensity, "argument is not a density matrix", std::max({herm, tr, neg}));
  }
  return ((alpha_state_action(x) * y).trace() - (x * y).trace()).real();
}

}  // namespace qot
