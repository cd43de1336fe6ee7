#include "qot/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace qot {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Auto: return "auto";
    case SolverKind::InteriorPoint: return "interior_point";
    case SolverKind::Splitting: return "splitting";
    case SolverKind::ConditionalGradient: return "conditional_gradient";
    case SolverKind::Simplex: return "simplex";
  }
  return "unknown";
}

SolverKind solver_from_string(const std::string& s) {
  for (SolverKind k : {SolverKind::Auto, SolverKind::InteriorPoint, SolverKind::Splitting,
                       SolverKind::ConditionalGradient, SolverKind::Simplex})
    if (to_string(k) == s) return k;
  if (s == "ipm" || s == "sdp") return SolverKind::InteriorPoint;
  if (s == "admm") return SolverKind::Splitting;
  if (s == "cg") return SolverKind::ConditionalGradient;
  if (s == "lp") return SolverKind::Simplex;
  throw Error(ErrorKind::InvalidArgument, "unknown solver '" + s + "'");
}

double clamp_sqrt(double cost) {
  if (cost < -1e-9) throw Error(ErrorKind::SolverFailure, "negative transport cost", cost);
  return std::sqrt(std::max(cost, 0.0));
}

namespace {

constexpr double kIpmTargetGap = 1e-13;

// Per-block Hermitian data of the reduced problem x = x0 + N y.
struct Reduced {
  std::vector<Mat> x0;                // x0[b]
  std::vector<std::vector<Mat>> dir;  // dir[k][b]
  RVec c;                             // N^T linear
  double c0 = 0.0;                    // cost at x0
};

std::vector<Mat> blocks_of(const BlockAlgebra& l, const BlockAlgebra& r, const RVec& x) {
  const Coupling c = Coupling::from_coords(l, r, x);
  std::vector<Mat> out;
  for (int i = 0; i < l.num_blocks(); ++i)
    for (int j = 0; j < r.num_blocks(); ++j) out.push_back(c.block(i, j));
  return out;
}

RVec coords_of(const BlockAlgebra& l, const BlockAlgebra& r, const std::vector<Mat>& blocks) {
  Coupling c(l, r);
  std::size_t b = 0;
  for (int i = 0; i < l.num_blocks(); ++i)
    for (int j = 0; j < r.num_blocks(); ++j) c.block(i, j) = blocks[b++];
  return c.coords();
}

Reduced reduce(const ConstraintSet& cs, const CostFunctional& cost) {
  Reduced r;
  r.x0 = blocks_of(cs.left, cs.right, cs.x0);
  for (int k = 0; k < cs.null_basis.cols(); ++k)
    r.dir.push_back(blocks_of(cs.left, cs.right, cs.null_basis.col(k)));
  r.c = cs.null_basis.transpose() * cost.linear;
  r.c0 = cost(cs.x0);
  return r;
}

double min_eig_coords(const ConstraintSet& cs, const RVec& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const Mat& b : blocks_of(cs.left, cs.right, x)) m = std::min(m, min_hermitian_eigenvalue(b));
  return m;
}

RVec project_affine(const ConstraintSet& cs, const RVec& v) {
  return cs.x0 + cs.null_basis * (cs.null_basis.transpose() * (v - cs.x0));
}

RVec project_psd(const ConstraintSet& cs, const RVec& v) {
  std::vector<Mat> bl = blocks_of(cs.left, cs.right, v);
  for (Mat& b : bl) b = hermitian_function(hermitian_part(b), [](double t) { return std::max(t, 0.0); });
  return coords_of(cs.left, cs.right, bl);
}

// Smallest tau in [0, 1] with (1 - tau) x + tau x0 PSD; x must be affine-feasible.
RVec shift_to_feasible(const ConstraintSet& cs, const RVec& x) {
  if (min_eig_coords(cs, x) >= 0.0) return x;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (min_eig_coords(cs, (1 - mid) * x + mid * cs.x0) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return (1 - hi) * x + hi * cs.x0;
}

SolveReport finish(const ConstraintSet& cs, const CostFunctional& cost, const RVec& x, const SolveOptions& opts,
                   SolverKind kind, int iterations, double lower_bound) {
  SolveReport rep;
  rep.solver = kind;
  rep.iterations = iterations;
  rep.plan = Coupling::from_coords(cs.left, cs.right, x);
  rep.residuals = cs.residuals(x);
  rep.residuals["psd"] = std::max(0.0, -rep.plan.min_eigenvalue());
  rep.residuals["trace"] = std::abs(rep.plan.trace() - 1.0);
  rep.cost = cost(x);
  rep.lower_bound = lower_bound;
  rep.gap = std::max(0.0, rep.cost - lower_bound);
  rep.W = clamp_sqrt(rep.cost);
  double worst = 0.0;
  for (const auto& [tag, v] : rep.residuals) worst = std::max(worst, v);
  rep.status = (worst <= opts.tol_feas && rep.gap <= opts.tol_gap) ? SolveStatus::Converged : SolveStatus::MaxIter;
  return rep;
}

// ---------------------------------------------------------------- interior point

using LD = long double;
using LMat = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;
using LVec = Eigen::Matrix<LD, Eigen::Dynamic, 1>;

// [[Re H, -Im H], [Im H, Re H]]
LMat embed(const Mat& h) {
  const Eigen::Index s = h.rows();
  LMat out(2 * s, 2 * s);
  const LMat re = h.real().cast<LD>(), im = h.imag().cast<LD>();
  out.topLeftCorner(s, s) = re;
  out.topRightCorner(s, s) = -im;
  out.bottomLeftCorner(s, s) = im;
  out.bottomRightCorner(s, s) = re;
  return out;
}

struct Barrier {
  std::vector<LMat> x0;
  std::vector<std::vector<LMat>> dir;

  std::vector<LMat> at(const LVec& y) const {
    std::vector<LMat> out = x0;
    for (Eigen::Index k = 0; k < y.size(); ++k)
      for (std::size_t b = 0; b < out.size(); ++b) out[b] += y(k) * dir[static_cast<std::size_t>(k)][b];
    return out;
  }

  // log det of the complex blocks (half the real log det); nullopt off the cone.
  static std::optional<LD> logdet(const std::vector<LMat>& xs) {
    LD s = 0;
    for (const LMat& x : xs) {
      Eigen::LLT<LMat> llt(x);
      if (llt.info() != Eigen::Success) return std::nullopt;
      const LMat& l = llt.matrixLLT();
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0)) return std::nullopt;
        s += std::log(l(i, i));
      }
    }
    return s;
  }
};

}  // namespace

SolveReport solve_interior_point(const ConstraintSet& cs, const CostFunctional& cost, const SolveOptions& opts) {
  const Reduced red = reduce(cs, cost);
  const Eigen::Index k = red.c.size();
  if (k == 0) return finish(cs, cost, cs.x0, opts, SolverKind::InteriorPoint, 0, cost(cs.x0));

  Barrier bar;
  double nu = 0.0;
  for (const Mat& b : red.x0) {
    bar.x0.push_back(embed(b));
    nu += static_cast<double>(b.rows());
  }
  for (const auto& d : red.dir) {
    std::vector<LMat> e;
    for (const Mat& b : d) e.push_back(embed(b));
    bar.dir.push_back(std::move(e));
  }
  const LVec c = red.c.cast<LD>();
  const int max_newton = opts.max_iter > 0 ? opts.max_iter : 2000;

  LVec y = LVec::Zero(k);
  LD t = 1;
  int newton = 0;
  for (;;) {
    for (int inner = 0; inner < 200 && newton < max_newton; ++inner, ++newton) {
      const std::vector<LMat> xs = bar.at(y);
      LVec g = t * c;
      LMat h = LMat::Zero(k, k);
      for (std::size_t b = 0; b < xs.size(); ++b) {
        Eigen::LLT<LMat> llt(xs[b]);
        if (llt.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "interior point left the cone");
        const auto l = llt.matrixL();
        std::vector<LMat> w(static_cast<std::size_t>(k));
        for (Eigen::Index i = 0; i < k; ++i) {
          LMat tmp = l.solve(bar.dir[static_cast<std::size_t>(i)][b]);
          w[static_cast<std::size_t>(i)] = l.solve(tmp.transpose()).transpose();
          g(i) -= w[static_cast<std::size_t>(i)].trace() / 2;
        }
        for (Eigen::Index i = 0; i < k; ++i)
          for (Eigen::Index j = 0; j <= i; ++j) {
            const LD v = (w[static_cast<std::size_t>(i)].cwiseProduct(w[static_cast<std::size_t>(j)].transpose())).sum() / 2;
            h(i, j) += v;
            if (i != j) h(j, i) += v;
          }
      }
      const LVec dy = -h.ldlt().solve(g);
      const LD dec = -g.dot(dy);
      if (!(dec > 2e-14L)) break;
      const std::optional<LD> ld0 = Barrier::logdet(xs);
      LD step = 1;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, step /= 2) {
        const std::optional<LD> ld = Barrier::logdet(bar.at(y + step * dy));
        if (!ld) continue;
        // F(y + s dy) - F(y) with F = t c.y - logdet
        const LD diff = t * step * c.dot(dy) - (*ld - *ld0);
        if (diff <= -0.25L * step * dec) {
          moved = true;
          break;
        }
      }
      if (!moved) break;
      y += step * dy;
    }
    if (nu / static_cast<double>(t) <= kIpmTargetGap || newton >= max_newton) break;
    t *= 10;
  }
  const RVec x = cs.x0 + cs.null_basis * y.cast<double>();
  const double gap = nu / static_cast<double>(t);
  return finish(cs, cost, shift_to_feasible(cs, x), opts, SolverKind::InteriorPoint, newton, cost(x) - gap);
}

// --------------------------------------------------------------------- splitting

SolveReport solve_splitting(const ConstraintSet& cs, const CostFunctional& cost, const SolveOptions& opts) {
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 200000;
  const RVec& c = cost.linear;
  const double relax = 1.6;
  double rho = 1.0;
  RVec w = cs.x0, u = RVec::Zero(c.size()), x = cs.x0;
  int it = 0;
  double lb = -std::numeric_limits<double>::infinity();
  auto lower_bound = [&]() {
    const RVec s = project_psd(cs, -rho * u);
    const RVec r = c - s;
    return cost.constant + r.dot(cs.x0) - 2.0 * (cs.null_basis.transpose() * r).norm();
  };
  for (; it < max_iter; ++it) {
    x = project_affine(cs, w - u - c / rho);
    const RVec xh = relax * x + (1 - relax) * w;
    const RVec w_prev = w;
    w = project_psd(cs, xh + u);
    u += xh - w;
    if (it % 25 == 24) {
      const double pr = (x - w).norm();
      const double dr = rho * (w - w_prev).norm();
      if (pr < 1e-11 && dr < 1e-11) {
        lb = lower_bound();
        const double ub = cost(shift_to_feasible(cs, project_affine(cs, w)));
        if (ub - lb <= std::min(opts.tol_gap, 1e-9)) break;
      }
      if (pr > 10 * dr) {
        rho *= 2;
        u /= 2;
      } else if (dr > 10 * pr) {
        rho /= 2;
        u *= 2;
      }
    }
  }
  lb = lower_bound();
  return finish(cs, cost, shift_to_feasible(cs, project_affine(cs, w)), opts, SolverKind::Splitting, it, lb);
}

// -------------------------------------------------------------- conditional gradient

namespace {

// Proximal augmented Lagrangian over the block spectrahedron {X >= 0, tr X = 1}:
// q(x) = c.x + lambda.P(x - x0) + rho/2 |P(x - x0)|^2 + delta/2 |x - xp|^2,
// P the projector onto the row space of the constraints.
struct CgInner {
  const ConstraintSet& cs;
  const RVec& c;
  RVec lambda, xp;
  double rho = 10.0, delta = 1.0;

  RVec perp(const RVec& v) const { return v - cs.null_basis * (cs.null_basis.transpose() * v); }
  RVec grad(const RVec& x) const { return c + perp(lambda) + rho * perp(x - cs.x0) + delta * (x - xp); }
  double value(const RVec& x) const {
    const RVec r = perp(x - cs.x0);
    return c.dot(x) + lambda.dot(r) + 0.5 * rho * r.squaredNorm() + 0.5 * delta * (x - xp).squaredNorm();
  }
  double curvature(const RVec& d) const { return rho * perp(d).squaredNorm() + delta * d.squaredNorm(); }
};

// Euclidean projection onto {p >= 0, sum p = 1}.
RVec simplex_projection(const RVec& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, shift = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0) shift = t;
  }
  return (v.array() - shift).cwiseMax(0.0);
}

// Minimizes q over {V S V^* : S >= 0, sum tr S = 1} for the range V of x,
// by accelerated projected gradient in the compressed variables.
// The face is enlarged by the vector `extra` in block `extra_block` when given.
RVec face_solve(const CgInner& q, const RVec& x, int max_steps, std::size_t extra_block = 0,
                const CVec& extra = CVec()) {
  const ConstraintSet& cs = q.cs;
  std::vector<Mat> v;
  std::vector<Mat> s;
  const std::vector<Mat> xb = blocks_of(cs.left, cs.right, x);
  for (std::size_t bi = 0; bi < xb.size(); ++bi) {
    const Mat& b = xb[bi];
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(b));
    std::vector<CVec> cols;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) > 1e-14) cols.push_back(es.eigenvectors().col(i));
    if (bi == extra_block && extra.size() > 0) {
      CVec w = extra;
      for (const CVec& c : cols) w -= c * c.dot(w);
      for (const CVec& c : cols) w -= c * c.dot(w);
      if (w.norm() > 1e-8) cols.push_back(w / w.norm());
    }
    Mat vb(b.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) vb.col(static_cast<Eigen::Index>(i)) = cols[i];
    v.push_back(vb);
    s.push_back(vb.adjoint() * b * vb);
  }
  auto lift = [&](const std::vector<Mat>& ss) {
    std::vector<Mat> bl(ss.size());
    for (std::size_t b = 0; b < ss.size(); ++b) bl[b] = v[b] * ss[b] * v[b].adjoint();
    return coords_of(cs.left, cs.right, bl);
  };
  auto project = [&](std::vector<Mat> ss) {
    std::vector<Mat> vecs(ss.size());
    std::vector<double> all;
    for (std::size_t b = 0; b < ss.size(); ++b) {
      if (ss[b].size() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(ss[b]));
      vecs[b] = es.eigenvectors();
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) all.push_back(es.eigenvalues()(i));
    }
    const RVec p = simplex_projection(Eigen::Map<const RVec>(all.data(), static_cast<Eigen::Index>(all.size())));
    Eigen::Index o = 0;
    for (std::size_t b = 0; b < ss.size(); ++b) {
      const Eigen::Index r = ss[b].rows();
      if (r == 0) continue;
      ss[b] = vecs[b] * p.segment(o, r).cast<cdouble>().asDiagonal() * vecs[b].adjoint();
      o += r;
    }
    return ss;
  };
  const double step = 1.0 / (q.rho + q.delta);
  std::vector<Mat> cur = s, prev = s, yk = s;
  double tk = 1.0;
  double fprev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_steps; ++it) {
    const RVec g = q.grad(lift(yk));
    const std::vector<Mat> gb = blocks_of(cs.left, cs.right, g);
    std::vector<Mat> nxt(yk.size());
    for (std::size_t b = 0; b < yk.size(); ++b) nxt[b] = yk[b] - step * (v[b].adjoint() * gb[b] * v[b]);
    nxt = project(nxt);
    const RVec xn = lift(nxt);
    const double fn = q.value(xn);
    double move = 0.0;
    for (std::size_t b = 0; b < nxt.size(); ++b) move += (nxt[b] - cur[b]).squaredNorm();
    const double tn = 0.5 * (1 + std::sqrt(1 + 4 * tk * tk));
    prev = cur;
    cur = nxt;
    if (fn > fprev) {
      tk = 1.0;
      yk = cur;
    } else {
      for (std::size_t b = 0; b < yk.size(); ++b) yk[b] = cur[b] + ((tk - 1) / tn) * (cur[b] - prev[b]);
      tk = tn;
    }
    fprev = fn;
    if (move < 1e-30) break;
  }
  return lift(cur);
}

}  // namespace

SolveReport solve_conditional_gradient(const ConstraintSet& cs, const CostFunctional& cost,
                                       const SolveOptions& opts) {
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 20000;
  CgInner q{cs, cost.linear, RVec::Zero(cs.num_vars()), cs.x0};
  RVec x = cs.x0;
  int total = 0;
  double best_lb = -std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < 2000 && total < max_iter; ++outer) {
    q.xp = x;
    double fw_gap = std::numeric_limits<double>::infinity();
    for (int inner = 0; inner < 400 && total < max_iter; ++inner, ++total) {
      const RVec g = q.grad(x);
      double lo = std::numeric_limits<double>::infinity();
      std::size_t lo_block = 0;
      CVec lo_vec;
      const std::vector<Mat> gb = blocks_of(cs.left, cs.right, g);
      for (std::size_t b = 0; b < gb.size(); ++b) {
        Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(gb[b]));
        if (es.eigenvalues()(0) < lo) {
          lo = es.eigenvalues()(0);
          lo_block = b;
          lo_vec = es.eigenvectors().col(0);
        }
      }
      fw_gap = g.dot(x) - lo;
      if (fw_gap <= 1e-13) break;
      x = face_solve(q, x, 2000, lo_block, lo_vec);
    }
    const RVec r = q.perp(x - cs.x0);
    q.lambda += q.rho * r;
    {
      const RVec g = cost.linear + q.perp(q.lambda);
      double lmin = std::numeric_limits<double>::infinity();
      for (const Mat& b : blocks_of(cs.left, cs.right, g)) lmin = std::min(lmin, min_hermitian_eigenvalue(b));
      best_lb = std::max(best_lb, cost.constant + lmin - q.perp(q.lambda).dot(cs.x0));
    }
    const double ub = cost(shift_to_feasible(cs, project_affine(cs, x)));
    if (ub - best_lb <= std::min(opts.tol_gap, 1e-9)) break;
  }
  return finish(cs, cost, shift_to_feasible(cs, project_affine(cs, x)), opts, SolverKind::ConditionalGradient,
                total, best_lb);
}

// ----------------------------------------------------------------------- simplex

namespace {

struct LpResult {
  RVec x;
  double value = 0.0;
  int pivots = 0;
};

// min c.x s.t. A x = b, x >= 0, A of full row rank.
LpResult simplex(const RMat& a_in, const RVec& b_in, const RVec& c) {
  const double eps = 1e-12;
  const Eigen::Index m = a_in.rows(), n = a_in.cols();
  RMat a = a_in;
  RVec b = b_in;
  for (Eigen::Index i = 0; i < m; ++i)
    if (b(i) < 0) {
      a.row(i) *= -1;
      b(i) *= -1;
    }
  // Columns: n originals, m artificials, then rhs.
  RMat t = RMat::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.block(0, n + m, m, 1) = b;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::iota(basis.begin(), basis.end(), n);
  int pivots = 0;

  auto pivot = [&](Eigen::Index r, Eigen::Index col) {
    t.row(r) /= t(r, col);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != r && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(r);
    basis[static_cast<std::size_t>(r)] = col;
    ++pivots;
  };
  auto set_objective = [&](const RVec& cost_full) {
    t.row(m).setZero();
    t.row(m).head(cost_full.size()) = cost_full.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index bc = basis[static_cast<std::size_t>(i)];
      if (bc < cost_full.size() && cost_full(bc) != 0.0) t.row(m) -= cost_full(bc) * t.row(i);
    }
  };
  auto run = [&](Eigen::Index allowed) {
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j)
        if (t(m, j) < -eps) {
          enter = j;
          break;
        }
      if (enter < 0) return;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i)
        if (t(i, enter) > eps) {
          const double ratio = t(i, n + m) / t(i, enter);
          if (ratio < best - eps ||
              (ratio <= best + eps && leave >= 0 &&
               basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
            best = std::min(best, ratio);
            leave = i;
          }
        }
      if (leave < 0) throw Error(ErrorKind::SolverFailure, "unbounded linear program");
      pivot(leave, enter);
    }
    throw Error(ErrorKind::SolverFailure, "simplex iteration guard reached");
  };

  RVec phase1 = RVec::Zero(n + m);
  phase1.tail(m).setOnes();
  set_objective(phase1);
  run(n + m);
  if (-t(m, n + m) > 1e-9) throw Error(ErrorKind::SolverFailure, "linear program infeasible", -t(m, n + m));
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(t(i, j)) > 1e-9) {
        pivot(i, j);
        break;
      }
  }
  RVec c_full = RVec::Zero(n + m);
  c_full.head(n) = c;
  set_objective(c_full);
  run(n);
  LpResult res;
  res.x = RVec::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bc = basis[static_cast<std::size_t>(i)];
    if (bc < n) res.x(bc) = std::max(0.0, t(i, n + m));
  }
  res.value = c.dot(res.x);
  res.pivots = pivots;
  return res;
}

// Indices of a maximal independent subset of the rows of a.
std::vector<Eigen::Index> independent_rows(const RMat& a) {
  Eigen::ColPivHouseholderQR<RMat> qr(a.transpose());
  qr.setThreshold(1e-11);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < qr.rank(); ++i) rows.push_back(qr.colsPermutation().indices()(i));
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

SolveReport solve_simplex(const ConstraintSet& cs, const CostFunctional& cost, const SolveOptions& opts) {
  if (!cs.left.abelian() || !cs.right.abelian())
    throw Error(ErrorKind::NotAbelian, "simplex needs abelian algebras");
  const std::vector<Eigen::Index> rows = independent_rows(cs.matrix);
  RMat a(static_cast<Eigen::Index>(rows.size()), cs.matrix.cols());
  RVec b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) = cs.matrix.row(rows[i]);
    b(static_cast<Eigen::Index>(i)) = cs.rhs(rows[i]);
  }
  const LpResult lp = simplex(a, b, cost.linear);
  const double val = cost(lp.x);
  return finish(cs, cost, lp.x, opts, SolverKind::Simplex, lp.pivots, val);
}

// --------------------------------------------------------------------- dispatch

namespace {

// Newton systems beyond this many free coordinates go to the splitting solver.
constexpr Eigen::Index kAutoIpmMaxDim = 1500;

SolveReport dispatch(const SystemVN& a, const SystemVN& b, PlanClass cls, const SolveOptions& opts,
                     SolverKind kind) {
  const ConstraintSet cs = build_constraints(a, b, cls);
  const CostFunctional cf = build_cost(a, b);
  if (kind == SolverKind::Auto) {
    if (a.algebra().abelian() && b.algebra().abelian())
      kind = SolverKind::Simplex;
    else
      kind = cs.null_basis.cols() <= kAutoIpmMaxDim ? SolverKind::InteriorPoint : SolverKind::Splitting;
  }
  SolveReport rep;
  switch (kind) {
    case SolverKind::InteriorPoint: rep = solve_interior_point(cs, cf, opts); break;
    case SolverKind::Splitting: rep = solve_splitting(cs, cf, opts); break;
    case SolverKind::ConditionalGradient: rep = solve_conditional_gradient(cs, cf, opts); break;
    default: rep = solve_simplex(cs, cf, opts); break;
  }
  rep.cls = cls;
  rep.residuals = feasibility_residual(rep.plan, a, b, cls);
  double worst = 0.0;
  for (const auto& [tag, v] : rep.residuals) worst = std::max(worst, v);
  rep.status = (worst <= opts.tol_feas && rep.gap <= opts.tol_gap) ? SolveStatus::Converged : SolveStatus::MaxIter;
  return rep;
}

}  // namespace

SolveReport wasserstein(const SystemVN& a, const SystemVN& b, PlanClass cls, const SolveOptions& opts) {
  return dispatch(a, b, cls, opts, opts.solver);
}

SolveReport classical_lp(const SystemVN& a, const SystemVN& b, PlanClass cls, const SolveOptions& opts) {
  if (!a.algebra().abelian() || !b.algebra().abelian())
    throw Error(ErrorKind::NotAbelian, "classical_lp needs abelian algebras");
  return dispatch(a, b, cls, opts, SolverKind::Simplex);
}

// ----------------------------------------------------------------------- oracle

namespace {

RMat transition_of(const SuperOp& e) { return e.matrix().real(); }

// Scalar rows for E o alpha = beta o E with E(a)_r = sum_p w_pr a_p / nu_r,
// variable index p * m + r.
void balance_rows(const RMat& al, const RMat& be, const std::vector<double>& nu, std::vector<RVec>& rows) {
  const Eigen::Index n = al.rows(), m = be.rows();
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index r = 0; r < m; ++r) {
      RVec row = RVec::Zero(n * m);
      for (Eigen::Index p = 0; p < n; ++p) row(p * m + r) += al(p, q);
      for (Eigen::Index s = 0; s < m; ++s)
        row(q * m + s) -= nu[static_cast<std::size_t>(r)] * be(r, s) / nu[static_cast<std::size_t>(s)];
      rows.push_back(row);
    }
}

RMat time_reversal(const RMat& t, const std::vector<double>& p) {
  RMat out(t.rows(), t.cols());
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      out(i, j) = p[static_cast<std::size_t>(j)] * t(j, i) / p[static_cast<std::size_t>(i)];
  return out;
}

double abelian_vertex_oracle(const SystemVN& a, const SystemVN& b, PlanClass cls) {
  const int n = a.algebra().num_blocks(), m = b.algebra().num_blocks();
  std::vector<double> mu, nu;
  for (int p = 0; p < n; ++p) mu.push_back(a.state().rho().block(p)(0, 0).real());
  for (int r = 0; r < m; ++r) nu.push_back(b.state().rho().block(r)(0, 0).real());
  std::vector<RVec> rows;
  std::vector<double> rhs;
  for (int p = 0; p < n; ++p) {
    RVec row = RVec::Zero(n * m);
    for (int r = 0; r < m; ++r) row(p * m + r) = 1.0;
    rows.push_back(row);
    rhs.push_back(mu[static_cast<std::size_t>(p)]);
  }
  for (int r = 0; r < m; ++r) {
    RVec row = RVec::Zero(n * m);
    for (int p = 0; p < n; ++p) row(p * m + r) = 1.0;
    rows.push_back(row);
    rhs.push_back(nu[static_cast<std::size_t>(r)]);
  }
  std::vector<std::pair<RMat, RMat>> pairs;
  for (std::size_t d = 0; d < a.dynamics().size(); ++d)
    pairs.emplace_back(transition_of(a.dynamics()[d].map), transition_of(b.dynamics()[d].map));
  if (a.reversing() && b.reversing()) pairs.emplace_back(transition_of(*a.reversing()), transition_of(*b.reversing()));
  const std::size_t plain = pairs.size();
  if (cls == PlanClass::Kms)
    for (std::size_t d = 0; d < plain; ++d)
      pairs.emplace_back(time_reversal(pairs[d].first, mu), time_reversal(pairs[d].second, nu));
  for (const auto& [al, be] : pairs) {
    const std::size_t before = rows.size();
    balance_rows(al, be, nu, rows);
    rhs.resize(rhs.size() + (rows.size() - before), 0.0);
  }
  const Eigen::Index vars = n * m;
  RMat e(static_cast<Eigen::Index>(rows.size()), vars);
  for (std::size_t i = 0; i < rows.size(); ++i) e.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  const RVec bv = Eigen::Map<const RVec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));

  RVec cost(vars);
  for (int p = 0; p < n; ++p)
    for (int r = 0; r < m; ++r) {
      double c = 0.0;
      for (int i = 0; i < a.num_coords(); ++i)
        c += std::norm(a.coords()[static_cast<std::size_t>(i)].block(p)(0, 0) -
                       b.coords()[static_cast<std::size_t>(i)].block(r)(0, 0));
      cost(p * m + r) = c;
    }

  Eigen::FullPivLU<RMat> lu(e);
  lu.setThreshold(1e-10);
  const Eigen::Index rank = lu.rank();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> pick(static_cast<std::size_t>(vars), false);
  std::fill(pick.begin(), pick.begin() + rank, true);
  do {
    RMat es(e.rows(), rank);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < vars; ++j)
      if (pick[static_cast<std::size_t>(j)]) {
        es.col(static_cast<Eigen::Index>(idx.size())) = e.col(j);
        idx.push_back(j);
      }
    Eigen::ColPivHouseholderQR<RMat> qr(es);
    qr.setThreshold(1e-10);
    if (qr.rank() < rank) continue;
    const RVec xs = qr.solve(bv);
    RVec x = RVec::Zero(vars);
    for (std::size_t i = 0; i < idx.size(); ++i) x(idx[i]) = xs(static_cast<Eigen::Index>(i));
    if (x.minCoeff() < -1e-12 || (e * x - bv).cwiseAbs().maxCoeff() > 1e-10) continue;
    best = std::min(best, cost.dot(x));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  if (!std::isfinite(best)) throw Error(ErrorKind::SolverFailure, "no feasible vertex");
  return clamp_sqrt(best);
}

}  // namespace

double brute_oracle(const SystemVN& a, const SystemVN& b, PlanClass cls) {
  const int n = a.algebra().element_dim(), m = b.algebra().element_dim();
  if (a.algebra().abelian() && b.algebra().abelian()) {
    if (n * m > 12) throw Error(ErrorKind::TooLarge, "vertex enumeration limited to m n <= 12");
    return abelian_vertex_oracle(a, b, cls);
  }
  int dim = 0;
  for (int i = 0; i < a.algebra().num_blocks(); ++i)
    for (int j = 0; j < b.algebra().num_blocks(); ++j) dim += a.algebra().block_dim(i) * b.algebra().block_dim(j);
  if (dim > 16) throw Error(ErrorKind::TooLarge, "quantum oracle limited to coupling dimension 16");
  SolveOptions o;
  o.tol_gap = 1e-8;
  const ConstraintSet cs = build_constraints(a, b, cls);
  const SolveReport r = solve_conditional_gradient(cs, build_cost(a, b), o);
  return r.W;
}

// ---------------------------------------------------------------- post-solve

IsoReport extract_isomorphism(const SolveReport& report, const SystemVN& a, const SystemVN& b) {
  if (report.status != SolveStatus::Converged)
    throw Error(ErrorKind::NotConverged, "isomorphism extraction needs a converged solve");
  const SuperOp e = channel_of_plan(report.plan, a.state(), b.state());
  const SuperOp es = kms_dual(e, a.state(), b.state());
  IsoReport out;
  const auto& k = a.coords();
  std::vector<AlgElement> words(k.begin(), k.end());
  for (const AlgElement& x : k)
    for (const AlgElement& y : k) {
      words.push_back(x * y);
      out.homomorphism_residual = std::max(out.homomorphism_residual, (e(x * y) - e(x) * e(y)).norm());
    }
  for (const AlgElement& x : k)
    out.homomorphism_residual = std::max(out.homomorphism_residual, (e(x.adjoint()) - e(x).adjoint()).norm());
  for (std::size_t i = 0; i < k.size(); ++i)
    out.coordinate_match_residual = std::max(out.coordinate_match_residual, (e(k[i]) - b.coords()[i]).norm());
  for (const AlgElement& w : words)
    out.invertibility_residual = std::max(out.invertibility_residual, (es(e(w)) - w).norm());
  for (std::size_t d = 0; d < a.dynamics().size() && d < b.dynamics().size(); ++d)
    for (const AlgElement& w : words)
      out.intertwining_residual = std::max(
          out.intertwining_residual, (e(a.dynamics()[d].map(w)) - b.dynamics()[d].map(e(w))).norm());
  return out;
}

SqdbBoundReport sqdb_bound_check(const SystemVN& a, const SystemVN& b, PlanClass cls, const SolveOptions& opts) {
  if (!b.reversing()) throw Error(ErrorKind::SqdbViolated, "B carries no reversing operation");
  const double res = sqdb_residual(b);
  if (res > 1e-9) throw Error(ErrorKind::SqdbViolated, "B is not theta-sqdb", res);
  const SystemVN ar = reverse_system(a);
  SqdbBoundReport out;
  out.cls = cls;
  auto w = [&](const SystemVN& x, const SystemVN& y) {
    const SolveReport r = wasserstein(x, y, cls, opts);
    if (r.status != SolveStatus::Converged) throw Error(ErrorKind::NotConverged, "bound solve did not converge");
    return r.W;
  };
  out.pairs.push_back({"W(A,A<-) <= 2 W(A,B)", w(a, ar), 2 * w(a, b), false});
  out.pairs.push_back({"W(A<-,A) <= 2 W(B,A)", w(ar, a), 2 * w(b, a), false});
  out.holds = true;
  for (BoundPair& p : out.pairs) {
    p.holds = p.lhs <= p.rhs + 1e-6;
    out.holds = out.holds && p.holds;
  }
  return out;
}

DeviationReport example_4x2_deviation(const SystemVN& a, const SystemVN& b, const SolveOptions& opts) {
  if (!a.algebra().abelian() || a.algebra().num_blocks() != 4 || !b.algebra().abelian() ||
      b.algebra().num_blocks() != 2 || a.dynamics().size() != 1 || b.dynamics().size() != 1)
    throw Error(ErrorKind::WrongShape, "expected a 4-point chain A and a 2-point chain B");
  const RMat al = transition_of(a.dynamics()[0].map);
  const RMat be = transition_of(b.dynamics()[0].map);
  std::vector<double> mu;
  for (int p = 0; p < 4; ++p) mu.push_back(a.state().rho().block(p)(0, 0).real());
  DeviationReport out;
  out.r = be(0, 1);
  out.s = be(1, 0);
  // 0-based: alpha_{12} -> al(0,1) etc.
  out.f = std::abs(mu[0] * al(0, 1) + mu[2] * al(2, 1) - mu[1] * out.s) +
          std::abs(mu[0] * al(0, 3) + mu[2] * al(2, 3) - mu[3] * out.s) +
          std::abs(mu[1] * al(1, 0) + mu[3] * al(3, 0) - mu[0] * out.r) +
          std::abs(mu[1] * al(1, 2) + mu[3] * al(3, 2) - mu[2] * out.r);
  SolveOptions o = opts;
  const SolveReport rep = wasserstein(a, b, PlanClass::Plain, o);
  out.W = rep.W;
  out.bound = 4 * (1 + std::abs(1 - out.r - out.s)) * out.W * out.W;
  out.holds = out.f <= out.bound + 1e-6;
  out.unit_sum = std::abs(out.r + out.s - 1) <= 1e-12;
  if (out.unit_sum) out.unit_holds = out.f <= 4 * out.W * out.W + 1e-6;
  return out;
}

}  // namespace qot
