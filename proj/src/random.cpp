#include "qot/random.hpp"

#include <cmath>

namespace qot {

Mat random_gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      m(i, j) = cdouble(re, im);
    }
  return m;
}

Mat random_hermitian(int n, Rng& rng) { return hermitian_part(random_gaussian(n, n, rng)); }

AlgElement random_element(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Mat> b;
  for (int n : alg.dims()) b.push_back(random_gaussian(n, n, rng));
  return AlgElement(std::move(b));
}

AlgElement random_hermitian_element(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Mat> b;
  for (int n : alg.dims()) b.push_back(random_hermitian(n, rng));
  return AlgElement(std::move(b));
}

namespace {

int total_dim(const BlockAlgebra& alg) {
  int n = 0;
  for (int d : alg.dims()) n += d;
  return n;
}

// Mixes a trace-one positive element with the identity to lift its spectrum to `floor`.
FaithfulState lift(std::vector<Mat> blocks, const BlockAlgebra& alg, double floor) {
  const int total = total_dim(alg);
  if (floor * total >= 1.0) throw Error(ErrorKind::InvalidArgument, "eigenvalue floor too large for the algebra");
  double tr = 0.0;
  for (const Mat& b : blocks) tr += b.trace().real();
  for (Mat& b : blocks) {
    b = hermitian_part(b) * ((1.0 - floor * total) / tr);
    b.diagonal().array() += floor;
  }
  // Renormalize exactly against rounding.
  double t2 = 0.0;
  for (const Mat& b : blocks) t2 += b.trace().real();
  for (Mat& b : blocks) b /= t2;
  return FaithfulState(AlgElement(std::move(blocks)));
}

}  // namespace

FaithfulState random_state(const BlockAlgebra& alg, Rng& rng, double floor) {
  std::vector<Mat> b;
  for (int n : alg.dims()) {
    const Mat g = random_gaussian(n, n, rng);
    b.push_back(g * g.adjoint());
  }
  return lift(std::move(b), alg, floor);
}

FaithfulState random_diagonal_state(const BlockAlgebra& alg, Rng& rng, double floor) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<Mat> b;
  for (int n : alg.dims()) {
    Mat d = Mat::Zero(n, n);
    for (int k = 0; k < n; ++k) d(k, k) = ex(rng);
    b.push_back(d);
  }
  return lift(std::move(b), alg, floor);
}

SuperOp random_unital_cp(const BlockAlgebra& source, const BlockAlgebra& target, int kraus, Rng& rng) {
  const int na = total_dim(source), nb = total_dim(target);
  std::vector<Mat> ks;
  Mat s = Mat::Zero(nb, nb);
  for (int i = 0; i < kraus; ++i) {
    ks.push_back(random_gaussian(na, nb, rng));
    s += ks.back().adjoint() * ks.back();
  }
  const Mat s_inv_half = hermitian_function(s, [](double x) { return 1.0 / std::sqrt(x); });
  for (Mat& k : ks) k = k * s_inv_half;
  return pinched_kraus(source, target, ks);
}

SuperOp pinched_kraus(const BlockAlgebra& source, const BlockAlgebra& target, const std::vector<Mat>& ks) {
  const int na = total_dim(source), nb = total_dim(target);
  return SuperOp::from_function(source, target, [&](const AlgElement& a) {
    Mat big = Mat::Zero(na, na);
    int off = 0;
    for (const Mat& b : a.blocks()) {
      big.block(off, off, b.rows(), b.cols()) = b;
      off += static_cast<int>(b.rows());
    }
    Mat y = Mat::Zero(nb, nb);
    for (const Mat& k : ks) y += k.adjoint() * big * k;
    std::vector<Mat> out;
    off = 0;
    for (int m : target.dims()) {
      out.push_back(y.block(off, off, m, m));
      off += m;
    }
    return AlgElement(std::move(out));
  }, {true, true, true, false});
}

RMat random_stochastic(int rows, int cols, Rng& rng, double floor) {
  std::exponential_distribution<double> ex(1.0);
  RMat t(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) t(i, j) = ex(rng);
    t.row(i) /= t.row(i).sum();
    t.row(i) = t.row(i) * (1.0 - floor * cols);
    t.row(i).array() += floor;
  }
  return t;
}

FaithfulState stationary_state(const SuperOp& alpha, int max_iter) {
  const BlockAlgebra& alg = alpha.source();
  if (!(alpha.target() == alg)) throw Error(ErrorKind::DimensionMismatch, "stationary state needs an endomorphism");
  const Mat t = alpha.matrix().transpose();  // action on state coordinates
  CVec r = FaithfulState::tracial(alg).rho().coords();
  for (int it = 0; it < max_iter; ++it) {
    CVec next = 0.5 * (r + t * r);
    const double step = (next - r).cwiseAbs().maxCoeff();
    r = next;
    if (step < 1e-15) break;
  }
  // Polish with the exact null vector of T - I, aligned to the iterate.
  const Mat k = t - Mat::Identity(t.rows(), t.cols());
  Eigen::JacobiSVD<Mat> svd(k, Eigen::ComputeFullV);
  const RVec sv = svd.singularValues();
  const Eigen::Index last = sv.size() - 1;
  if (sv.size() > 1 && sv(last - 1) < 1e-8)
    throw Error(ErrorKind::NotConverged, "invariant state is not unique", sv(last - 1));
  CVec v = svd.matrixV().col(last);
  v *= r.dot(v) / v.squaredNorm();  // complex phase and scale from the iterate
  std::vector<Mat> blocks = AlgElement::from_coords(alg, v).blocks();
  double tr = 0.0;
  for (Mat& b : blocks) {
    b = hermitian_part(b);
    tr += b.trace().real();
  }
  for (Mat& b : blocks) b /= tr;
  return FaithfulState(AlgElement(std::move(blocks)));
}

Coupling random_plan(const FaithfulState& mu, const FaithfulState& nu, Rng& rng, int rank) {
  const BlockAlgebra& a = mu.algebra();
  const BlockAlgebra& b = nu.algebra();
  Coupling c(a, b);
  for (int i = 0; i < a.num_blocks(); ++i)
    for (int j = 0; j < b.num_blocks(); ++j) {
      const int s = a.block_dim(i) * b.block_dim(j);
      const int r = rank > 0 ? rank : s;
      const Mat g = random_gaussian(s, r, rng);
      c.block(i, j) = g * g.adjoint() + 1e-3 * Mat::Identity(s, s);
    }
  const AlgElement target_b = nu.rho().transpose();
  for (int it = 0; it < 2000; ++it) {
    AlgElement l = c.left_marginal();
    for (int i = 0; i < a.num_blocks(); ++i) {
      const Mat corr = mu.sqrt_rho().block(i) *
                       hermitian_function(l.block(i), [](double x) { return 1.0 / std::sqrt(x); });
      for (int j = 0; j < b.num_blocks(); ++j) {
        const Mat big = kron(corr, Mat::Identity(b.block_dim(j), b.block_dim(j)));
        c.block(i, j) = big * c.block(i, j) * big.adjoint();
      }
    }
    AlgElement rm = c.right_marginal();
    for (int j = 0; j < b.num_blocks(); ++j) {
      const Mat tb = hermitian_function(target_b.block(j), [](double x) { return std::sqrt(x); });
      const Mat corr = tb * hermitian_function(rm.block(j), [](double x) { return 1.0 / std::sqrt(x); });
      for (int i = 0; i < a.num_blocks(); ++i) {
        const Mat big = kron(Mat::Identity(a.block_dim(i), a.block_dim(i)), corr);
        c.block(i, j) = big * c.block(i, j) * big.adjoint();
      }
    }
    for (int i = 0; i < a.num_blocks(); ++i)
      for (int j = 0; j < b.num_blocks(); ++j) c.block(i, j) = hermitian_part(c.block(i, j));
    if (c.marginal_residual(mu, nu) < 1e-14) break;
  }
  return c;
}

SuperOp random_channel_between(const FaithfulState& mu, const FaithfulState& nu, Rng& rng, int rank) {
  return channel_of_plan(random_plan(mu, nu, rng, rank), mu, nu);
}

}  // namespace qot
