#include "qot/finalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace qot {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kFlagTol = 1e-10;

void require(bool ok, ErrorKind kind, const std::string& what, double residual = 0.0) {
  if (!ok) throw Error(kind, what, residual);
}

// Pair index t -> (a, b) with a < b in lexicographic order.
std::pair<int, int> pair_of(int n, int t) {
  int a = 0;
  while (t >= n - 1 - a) {
    t -= n - 1 - a;
    ++a;
  }
  return {a, a + 1 + t};
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- helpers

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat partial_trace_first(const Mat& x, int n, int m) {
  Mat out = Mat::Zero(m, m);
  for (int p = 0; p < n; ++p) out += x.block(p * m, p * m, m, m);
  return out;
}

Mat partial_trace_second(const Mat& x, int n, int m) {
  Mat out(n, n);
  for (int p = 0; p < n; ++p)
    for (int r = 0; r < n; ++r) out(p, r) = x.block(p * m, r * m, m, m).trace();
  return out;
}

Mat hermitian_part(const Mat& x) { return 0.5 * (x + x.adjoint()); }

Mat hermitian_function(const Mat& h, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(h));
  RVec v = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * v.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
}

double min_hermitian_eigenvalue(const Mat& x) {
  if (x.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Mat hs_basis(int n, int k) {
  Mat b = Mat::Zero(n, n);
  if (k < n) {
    b(k, k) = 1.0;
    return b;
  }
  auto [a, c] = pair_of(n, (k - n) / 2);
  if ((k - n) % 2 == 0) {
    b(a, c) = kInvSqrt2;
    b(c, a) = kInvSqrt2;
  } else {
    b(a, c) = cdouble(0, kInvSqrt2);
    b(c, a) = cdouble(0, -kInvSqrt2);
  }
  return b;
}

CVec hs_coords(const Mat& x) {
  const int n = static_cast<int>(x.rows());
  CVec z(n * n);
  for (int k = 0; k < n; ++k) z(k) = x(k, k);
  int idx = n;
  const cdouble i(0, 1);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      z(idx++) = (x(a, b) + x(b, a)) * kInvSqrt2;
      z(idx++) = i * (x(b, a) - x(a, b)) * kInvSqrt2;
    }
  return z;
}

Mat hs_from_coords(int n, const Eigen::Ref<const CVec>& z) {
  Mat x = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) x(k, k) = z(k);
  int idx = n;
  const cdouble i(0, 1);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const cdouble s = z(idx++), t = z(idx++);
      x(a, b) = (s + i * t) * kInvSqrt2;
      x(b, a) = (s - i * t) * kInvSqrt2;
    }
  return x;
}

// ---------------------------------------------------------------- BlockAlgebra

BlockAlgebra::BlockAlgebra(std::vector<int> block_dims) : dims_(std::move(block_dims)) {
  require(!dims_.empty(), ErrorKind::InvalidArgument, "block algebra needs at least one block");
  for (int d : dims_) {
    require(d >= 1, ErrorKind::InvalidArgument, "block dimension must be positive");
    offsets_.push_back(element_dim_);
    element_dim_ += d * d;
  }
}

BlockAlgebra BlockAlgebra::classical(int points) {
  return BlockAlgebra(std::vector<int>(static_cast<std::size_t>(points), 1));
}

BlockAlgebra BlockAlgebra::matrix(int n) { return BlockAlgebra({n}); }

bool BlockAlgebra::abelian() const {
  return std::all_of(dims_.begin(), dims_.end(), [](int d) { return d == 1; });
}

// ---------------------------------------------------------------- AlgElement

AlgElement AlgElement::zero(const BlockAlgebra& alg) {
  std::vector<Mat> b;
  for (int d : alg.dims()) b.push_back(Mat::Zero(d, d));
  return AlgElement(std::move(b));
}

AlgElement AlgElement::identity(const BlockAlgebra& alg) {
  std::vector<Mat> b;
  for (int d : alg.dims()) b.push_back(Mat::Identity(d, d));
  return AlgElement(std::move(b));
}

AlgElement AlgElement::from_coords(const BlockAlgebra& alg, const Eigen::Ref<const CVec>& z) {
  require(z.size() == alg.element_dim(), ErrorKind::DimensionMismatch, "coordinate length mismatch");
  std::vector<Mat> b;
  for (int i = 0; i < alg.num_blocks(); ++i) {
    const int n = alg.block_dim(i);
    b.push_back(hs_from_coords(n, z.segment(alg.block_offset(i), n * n)));
  }
  return AlgElement(std::move(b));
}

AlgElement AlgElement::diagonal(const std::vector<cdouble>& values) {
  std::vector<Mat> b;
  for (cdouble v : values) b.push_back(Mat::Constant(1, 1, v));
  return AlgElement(std::move(b));
}

AlgElement AlgElement::basis(const BlockAlgebra& alg, int k) {
  AlgElement out = zero(alg);
  for (int i = alg.num_blocks() - 1; i >= 0; --i)
    if (k >= alg.block_offset(i)) {
      out.block(i) = hs_basis(alg.block_dim(i), k - alg.block_offset(i));
      return out;
    }
  throw Error(ErrorKind::InvalidArgument, "basis index out of range");
}

BlockAlgebra AlgElement::algebra() const {
  std::vector<int> d;
  for (const Mat& b : blocks_) d.push_back(static_cast<int>(b.rows()));
  return BlockAlgebra(std::move(d));
}

CVec AlgElement::coords() const {
  Eigen::Index total = 0;
  for (const Mat& b : blocks_) total += b.size();
  CVec z(total);
  Eigen::Index off = 0;
  for (const Mat& b : blocks_) {
    z.segment(off, b.size()) = hs_coords(b);
    off += b.size();
  }
  return z;
}

AlgElement AlgElement::adjoint() const {
  std::vector<Mat> b;
  for (const Mat& m : blocks_) b.push_back(m.adjoint());
  return AlgElement(std::move(b));
}

AlgElement AlgElement::transpose() const {
  std::vector<Mat> b;
  for (const Mat& m : blocks_) b.push_back(m.transpose());
  return AlgElement(std::move(b));
}

AlgElement AlgElement::conjugate() const {
  std::vector<Mat> b;
  for (const Mat& m : blocks_) b.push_back(m.conjugate());
  return AlgElement(std::move(b));
}

bool AlgElement::same_shape(const AlgElement& o) const {
  if (blocks_.size() != o.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].rows() != o.blocks_[i].rows()) return false;
  return true;
}

AlgElement AlgElement::operator+(const AlgElement& o) const {
  require(same_shape(o), ErrorKind::DimensionMismatch, "element shape mismatch");
  AlgElement r = *this;
  for (std::size_t i = 0; i < blocks_.size(); ++i) r.blocks_[i] += o.blocks_[i];
  return r;
}

AlgElement AlgElement::operator-(const AlgElement& o) const {
  require(same_shape(o), ErrorKind::DimensionMismatch, "element shape mismatch");
  AlgElement r = *this;
  for (std::size_t i = 0; i < blocks_.size(); ++i) r.blocks_[i] -= o.blocks_[i];
  return r;
}

AlgElement AlgElement::operator*(const AlgElement& o) const {
  require(same_shape(o), ErrorKind::DimensionMismatch, "element shape mismatch");
  AlgElement r = *this;
  for (std::size_t i = 0; i < blocks_.size(); ++i) r.blocks_[i] = blocks_[i] * o.blocks_[i];
  return r;
}

AlgElement AlgElement::operator*(cdouble s) const {
  AlgElement r = *this;
  for (Mat& b : r.blocks_) b *= s;
  return r;
}

double AlgElement::norm() const {
  double s = 0.0;
  for (const Mat& b : blocks_) s += b.squaredNorm();
  return std::sqrt(s);
}

double AlgElement::max_abs() const {
  double m = 0.0;
  for (const Mat& b : blocks_)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

double AlgElement::min_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (const Mat& b : blocks_) m = std::min(m, min_hermitian_eigenvalue(b));
  return m;
}

cdouble AlgElement::trace() const {
  cdouble t = 0.0;
  for (const Mat& b : blocks_) t += b.trace();
  return t;
}

double distance(const AlgElement& a, const AlgElement& b) { return (a - b).norm(); }

// ---------------------------------------------------------------- FaithfulState

FaithfulState::FaithfulState(AlgElement rho) : alg_(rho.algebra()) {
  double herm = 0.0;
  for (const Mat& b : rho.blocks()) herm = std::max(herm, (b - b.adjoint()).cwiseAbs().maxCoeff());
  require(herm <= 1e-12, ErrorKind::NotFaithful, "density matrix is not Hermitian (" + fmt(herm) + ")", herm);
  const double tr_err = std::abs(rho.trace() - 1.0);
  require(tr_err <= 1e-12, ErrorKind::NotFaithful, "density matrix trace differs from 1 by " + fmt(tr_err), tr_err);

  std::vector<Mat> s, si, lg, r;
  for (const Mat& b : rho.blocks()) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(b));
    const RVec ev = es.eigenvalues();
    const double lo = ev.minCoeff();
    require(lo >= kFaithfulFloor, ErrorKind::NotFaithful,
            "state is not faithful: minimum eigenvalue " + fmt(lo), lo);
    const Mat& u = es.eigenvectors();
    auto f = [&](auto g) {
      RVec v = ev.unaryExpr(g);
      return Mat(u * v.cast<cdouble>().asDiagonal() * u.adjoint());
    };
    r.push_back(hermitian_part(b));
    s.push_back(f([](double x) { return std::sqrt(x); }));
    si.push_back(f([](double x) { return 1.0 / std::sqrt(x); }));
    lg.push_back(f([](double x) { return std::log(x); }));
  }
  rho_ = AlgElement(std::move(r));
  sqrt_ = AlgElement(std::move(s));
  inv_sqrt_ = AlgElement(std::move(si));
  log_ = AlgElement(std::move(lg));
}

FaithfulState FaithfulState::classical(const std::vector<double>& p) {
  std::vector<cdouble> v(p.begin(), p.end());
  return FaithfulState(AlgElement::diagonal(v));
}

FaithfulState FaithfulState::tracial(const BlockAlgebra& alg) {
  double total = 0.0;
  for (int d : alg.dims()) total += d;
  return FaithfulState(AlgElement::identity(alg) * cdouble(1.0 / total));
}

cdouble FaithfulState::operator()(const AlgElement& a) const { return (rho_ * a).trace(); }

FaithfulState FaithfulState::transposed() const { return FaithfulState(rho_.transpose()); }

bool FaithfulState::diagonal(double tol) const {
  for (const Mat& b : rho_.blocks()) {
    Mat off = b;
    off.diagonal().setZero();
    if (off.size() > 0 && off.cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

bool FaithfulState::real(double tol) const {
  for (const Mat& b : rho_.blocks())
    if (b.imag().cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

// ---------------------------------------------------------------- SuperOp

SuperOp::SuperOp(BlockAlgebra source, BlockAlgebra target, Mat matrix, MapFlags flags)
    : source_(std::move(source)), target_(std::move(target)), matrix_(std::move(matrix)), flags_(flags) {
  require(matrix_.rows() == target_.element_dim() && matrix_.cols() == source_.element_dim(),
          ErrorKind::DimensionMismatch, "superoperator matrix has wrong shape");
}

SuperOp SuperOp::identity(const BlockAlgebra& alg) {
  const int d = alg.element_dim();
  return SuperOp(alg, alg, Mat::Identity(d, d), {true, true, true, false});
}

SuperOp SuperOp::from_function(const BlockAlgebra& source, const BlockAlgebra& target,
                               const std::function<AlgElement(const AlgElement&)>& f, MapFlags flags) {
  Mat m(target.element_dim(), source.element_dim());
  for (int k = 0; k < source.element_dim(); ++k) {
    const AlgElement y = f(AlgElement::basis(source, k));
    require(y.algebra() == target, ErrorKind::DimensionMismatch, "function output has wrong shape");
    m.col(k) = y.coords();
  }
  return SuperOp(source, target, std::move(m), flags);
}

SuperOp SuperOp::kraus(const std::vector<Mat>& ops, MapFlags flags) {
  require(!ops.empty(), ErrorKind::InvalidArgument, "empty Kraus set");
  const int n = static_cast<int>(ops.front().rows());
  for (const Mat& k : ops)
    require(k.rows() == n && k.cols() == n, ErrorKind::DimensionMismatch, "Kraus operators must be square and equal-sized");
  const BlockAlgebra alg = BlockAlgebra::matrix(n);
  return from_function(alg, alg, [&](const AlgElement& a) {
    Mat y = Mat::Zero(n, n);
    for (const Mat& k : ops) y += k.adjoint() * a.block(0) * k;
    return AlgElement({y});
  }, flags);
}

SuperOp SuperOp::transition(const RMat& t) {
  const BlockAlgebra src = BlockAlgebra::classical(static_cast<int>(t.cols()));
  const BlockAlgebra tgt = BlockAlgebra::classical(static_cast<int>(t.rows()));
  bool nonneg = (t.array() >= 0.0).all();
  bool unital = ((t.rowwise().sum().array() - 1.0).abs() <= kFlagTol).all();
  return SuperOp(src, tgt, t.cast<cdouble>(), {unital, nonneg, nonneg, false});
}

SuperOp SuperOp::transpose(const BlockAlgebra& alg) {
  Mat m = Mat::Zero(alg.element_dim(), alg.element_dim());
  for (int i = 0; i < alg.num_blocks(); ++i) {
    const int n = alg.block_dim(i), off = alg.block_offset(i);
    for (int k = 0; k < n * n; ++k) {
      const bool anti_sym = k >= n && (k - n) % 2 == 1;
      m(off + k, off + k) = anti_sym ? -1.0 : 1.0;
    }
  }
  // The transpose is positive but not completely positive outside the abelian case.
  return SuperOp(alg, alg, std::move(m), {true, true, alg.abelian(), true});
}

SuperOp SuperOp::with_flags(MapFlags flags) const { return SuperOp(source_, target_, matrix_, flags); }

AlgElement SuperOp::operator()(const AlgElement& a) const {
  require(a.algebra() == source_, ErrorKind::DimensionMismatch, "argument is not in the source algebra");
  return AlgElement::from_coords(target_, matrix_ * a.coords());
}

SuperOp SuperOp::compose(const SuperOp& inner) const {
  require(inner.target_ == source_, ErrorKind::DimensionMismatch, "composition shape mismatch");
  MapFlags f{flags_.unital && inner.flags_.unital, flags_.positive && inner.flags_.positive,
             flags_.cp && inner.flags_.cp, false};
  return SuperOp(inner.source_, target_, matrix_ * inner.matrix_, f);
}

SuperOp SuperOp::trace_adjoint() const {
  MapFlags f{false, flags_.positive, flags_.cp, flags_.anti};
  return SuperOp(target_, source_, matrix_.transpose(), f);
}

SuperOp SuperOp::operator+(const SuperOp& o) const {
  require(source_ == o.source_ && target_ == o.target_, ErrorKind::DimensionMismatch, "sum shape mismatch");
  return SuperOp(source_, target_, matrix_ + o.matrix_);
}

SuperOp SuperOp::operator-(const SuperOp& o) const {
  require(source_ == o.source_ && target_ == o.target_, ErrorKind::DimensionMismatch, "difference shape mismatch");
  return SuperOp(source_, target_, matrix_ - o.matrix_);
}

SuperOp SuperOp::operator*(double s) const { return SuperOp(source_, target_, matrix_ * s); }

Mat SuperOp::choi_block(int i, int j) const {
  const int n = source_.block_dim(i), m = target_.block_dim(j);
  Mat c = Mat::Zero(n * m, n * m);
  AlgElement e = AlgElement::zero(source_);  // only block i is ever nonzero
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      e.block(i).setZero();
      e.block(i)(p, q) = 1.0;
      c.block(p * m, q * m, m, m) = (*this)(e).block(j);
    }
  return c;
}

double SuperOp::cp_violation() const {
  double worst = 0.0;
  for (int i = 0; i < source_.num_blocks(); ++i)
    for (int j = 0; j < target_.num_blocks(); ++j)
      worst = std::max(worst, -min_hermitian_eigenvalue(choi_block(i, j)));
  return worst;
}

double SuperOp::unital_residual() const {
  return distance((*this)(AlgElement::identity(source_)), AlgElement::identity(target_));
}

double SuperOp::anti_residual() const {
  require(source_ == target_, ErrorKind::DimensionMismatch, "anti-multiplicativity needs an endomorphism");
  const int d = source_.element_dim();
  std::vector<AlgElement> basis, image;
  for (int k = 0; k < d; ++k) {
    basis.push_back(AlgElement::basis(source_, k));
    image.push_back((*this)(basis.back()));
  }
  double worst = 0.0;
  for (int x = 0; x < d; ++x)
    for (int y = 0; y < d; ++y)
      worst = std::max(worst, distance((*this)(basis[x] * basis[y]), image[y] * image[x]));
  return worst;
}

double SuperOp::hermiticity_residual() const {
  return matrix_.size() ? matrix_.imag().cwiseAbs().maxCoeff() : 0.0;
}

void SuperOp::verify_flags() const {
  double r = hermiticity_residual();
  require(r <= kFlagTol, ErrorKind::InvalidArgument, "map does not preserve Hermiticity (" + fmt(r) + ")", r);
  if (flags_.unital) {
    r = unital_residual();
    require(r <= kFlagTol, ErrorKind::NotUnital, "map is not unital (" + fmt(r) + ")", r);
  }
  if (flags_.cp) {
    r = cp_violation();
    require(r <= kFlagTol, ErrorKind::NotCP, "Choi matrix is not PSD (" + fmt(-r) + ")", r);
  }
  if (flags_.positive && !flags_.cp) {
    // Necessary condition: images of the pure states built from pairs of basis vectors.
    for (int i = 0; i < source_.num_blocks(); ++i) {
      const int n = source_.block_dim(i);
      AlgElement e = AlgElement::zero(source_);
      for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q)
          for (cdouble ph : {cdouble(1, 0), cdouble(-1, 0), cdouble(0, 1), cdouble(0, -1)}) {
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
            v(p) += 1.0;
            if (q != p) v(q) += ph;
            e.block(i) = v * v.adjoint();
            r = -(*this)(e).min_eigenvalue();
            require(r <= kFlagTol, ErrorKind::InvalidArgument, "map is not positive (" + fmt(-r) + ")", r);
          }
    }
  }
  if (flags_.anti) {
    r = anti_residual();
    require(r <= kFlagTol, ErrorKind::NotReversing, "map is not anti-multiplicative (" + fmt(r) + ")", r);
  }
}

double distance(const SuperOp& a, const SuperOp& b) {
  require(a.source() == b.source() && a.target() == b.target(), ErrorKind::DimensionMismatch,
          "superoperator shape mismatch");
  return a.matrix().size() ? (a.matrix() - b.matrix()).cwiseAbs().maxCoeff() : 0.0;
}

// ---------------------------------------------------------------- Coupling

Coupling::Coupling(BlockAlgebra left, BlockAlgebra right) : left_(std::move(left)), right_(std::move(right)) {
  for (int n : left_.dims())
    for (int m : right_.dims()) blocks_.push_back(Mat::Zero(n * m, n * m));
}

Coupling Coupling::product(const FaithfulState& mu, const FaithfulState& nu) {
  Coupling c(mu.algebra(), nu.algebra());
  for (int i = 0; i < c.left_.num_blocks(); ++i)
    for (int j = 0; j < c.right_.num_blocks(); ++j)
      c.block(i, j) = kron(mu.rho().block(i), nu.rho().block(j).transpose());
  return c;
}

int Coupling::coord_dim(const BlockAlgebra& left, const BlockAlgebra& right) {
  int d = 0;
  for (int n : left.dims())
    for (int m : right.dims()) d += n * m * n * m;
  return d;
}

int Coupling::coord_offset(int i, int j) const {
  int off = 0;
  for (int a = 0; a < left_.num_blocks(); ++a)
    for (int b = 0; b < right_.num_blocks(); ++b) {
      if (a == i && b == j) return off;
      const int s = left_.block_dim(a) * right_.block_dim(b);
      off += s * s;
    }
  throw Error(ErrorKind::InvalidArgument, "block index out of range");
}

Coupling Coupling::from_coords(const BlockAlgebra& left, const BlockAlgebra& right, const Eigen::Ref<const RVec>& x) {
  require(x.size() == coord_dim(left, right), ErrorKind::DimensionMismatch, "coupling coordinate length mismatch");
  Coupling c(left, right);
  Eigen::Index off = 0;
  for (Mat& b : c.blocks_) {
    const int s = static_cast<int>(b.rows());
    b = hs_from_coords(s, x.segment(off, s * s).cast<cdouble>());
    off += s * s;
  }
  return c;
}

RVec Coupling::coords() const {
  RVec x(coord_dim(left_, right_));
  Eigen::Index off = 0;
  for (const Mat& b : blocks_) {
    x.segment(off, b.size()) = hs_coords(b).real();
    off += b.size();
  }
  return x;
}

const Mat& Coupling::block(int i, int j) const {
  return blocks_[static_cast<std::size_t>(i * right_.num_blocks() + j)];
}

Mat& Coupling::block(int i, int j) { return blocks_[static_cast<std::size_t>(i * right_.num_blocks() + j)]; }

cdouble Coupling::pair(const AlgElement& a, const AlgElement& c) const {
  require(a.algebra() == left_ && c.algebra() == right_, ErrorKind::DimensionMismatch, "pairing shape mismatch");
  cdouble s = 0.0;
  for (int i = 0; i < left_.num_blocks(); ++i)
    for (int j = 0; j < right_.num_blocks(); ++j) s += (block(i, j) * kron(a.block(i), c.block(j))).trace();
  return s;
}

AlgElement Coupling::left_marginal() const {
  AlgElement out = AlgElement::zero(left_);
  for (int i = 0; i < left_.num_blocks(); ++i)
    for (int j = 0; j < right_.num_blocks(); ++j)
      out.block(i) += partial_trace_second(block(i, j), left_.block_dim(i), right_.block_dim(j));
  return out;
}

AlgElement Coupling::right_marginal() const {
  AlgElement out = AlgElement::zero(right_);
  for (int i = 0; i < left_.num_blocks(); ++i)
    for (int j = 0; j < right_.num_blocks(); ++j)
      out.block(j) += partial_trace_first(block(i, j), left_.block_dim(i), right_.block_dim(j));
  return out;
}

double Coupling::marginal_residual(const FaithfulState& mu, const FaithfulState& nu) const {
  require(mu.algebra() == left_ && nu.algebra() == right_, ErrorKind::DimensionMismatch, "marginal shape mismatch");
  return std::max((left_marginal() - mu.rho()).max_abs(), (right_marginal() - nu.rho().transpose()).max_abs());
}

double Coupling::trace() const {
  double t = 0.0;
  for (const Mat& b : blocks_) t += b.trace().real();
  return t;
}

double Coupling::min_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (const Mat& b : blocks_) m = std::min(m, min_hermitian_eigenvalue(b));
  return m;
}

double Coupling::hermiticity_residual() const {
  double m = 0.0;
  for (const Mat& b : blocks_) m = std::max(m, (b - b.adjoint()).cwiseAbs().maxCoeff());
  return m;
}

double distance(const Coupling& a, const Coupling& b) {
  require(a.left() == b.left() && a.right() == b.right(), ErrorKind::DimensionMismatch, "coupling shape mismatch");
  return (a.coords() - b.coords()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- constructions

AlgElement standard_vector(const FaithfulState& state) { return state.sqrt_rho(); }

Coupling delta_state(const FaithfulState& state) {
  const BlockAlgebra& alg = state.algebra();
  Coupling c(alg, alg);
  for (int i = 0; i < alg.num_blocks(); ++i) {
    const int n = alg.block_dim(i);
    const Mat& s = state.sqrt_rho().block(i);
    CVec v(n * n);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) v(p * n + q) = s(p, q);
    c.block(i, i) = v * v.adjoint();
  }
  return c;
}

SuperOp channel_of_plan_unchecked(const Coupling& plan, const FaithfulState& nu) {
  const BlockAlgebra& a_alg = plan.left();
  const BlockAlgebra& b_alg = plan.right();
  require(nu.algebra() == b_alg, ErrorKind::DimensionMismatch, "target state does not match the plan");
  return SuperOp::from_function(a_alg, b_alg, [&](const AlgElement& a) {
    AlgElement out = AlgElement::zero(b_alg);
    for (int j = 0; j < b_alg.num_blocks(); ++j) {
      const int m = b_alg.block_dim(j);
      Mat k = Mat::Zero(m, m);
      for (int i = 0; i < a_alg.num_blocks(); ++i) {
        const int n = a_alg.block_dim(i);
        k += partial_trace_first(plan.block(i, j) * kron(a.block(i), Mat::Identity(m, m)), n, m);
      }
      const Mat& si = nu.inv_sqrt_rho().block(j);
      out.block(j) = si * k.transpose() * si;
    }
    return out;
  });
}

SuperOp channel_of_plan(const Coupling& plan, const FaithfulState& mu, const FaithfulState& nu) {
  const double r = plan.marginal_residual(mu, nu);
  require(r <= 1e-6, ErrorKind::MarginalMismatch, "plan marginals differ from the states by " + fmt(r), r);
  const bool psd = plan.min_eigenvalue() >= -kFlagTol;
  return channel_of_plan_unchecked(plan, nu).with_flags({true, psd, psd, false});
}

Coupling plan_of_channel_unchecked(const SuperOp& e, const FaithfulState& nu) {
  const BlockAlgebra& a_alg = e.source();
  const BlockAlgebra& b_alg = e.target();
  require(nu.algebra() == b_alg, ErrorKind::DimensionMismatch, "target state does not match the channel");
  Coupling c(a_alg, b_alg);
  for (int i = 0; i < a_alg.num_blocks(); ++i) {
    const int n = a_alg.block_dim(i);
    AlgElement unit = AlgElement::zero(a_alg);
    for (int p = 0; p < n; ++p)
      for (int pp = 0; pp < n; ++pp) {
        unit.block(i).setZero();
        unit.block(i)(p, pp) = 1.0;
        const AlgElement img = e(unit);
        for (int j = 0; j < b_alg.num_blocks(); ++j) {
          const int m = b_alg.block_dim(j);
          const Mat& s = nu.sqrt_rho().block(j);
          const Mat t = s * img.block(j) * s;
          Mat& om = c.block(i, j);
          for (int q = 0; q < m; ++q)
            for (int qq = 0; qq < m; ++qq) om(pp * m + qq, p * m + q) = t(q, qq);
        }
      }
  }
  return c;
}

Coupling plan_of_channel(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu) {
  require(mu.algebra() == e.source(), ErrorKind::DimensionMismatch, "source state does not match the channel");
  Coupling c = plan_of_channel_unchecked(e, nu);
  const double lo = c.min_eigenvalue();
  require(lo >= -kFlagTol, ErrorKind::NotCP, "channel is not completely positive: plan eigenvalue " + fmt(lo), lo);
  return c;
}

double invariance_residual(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu) {
  require(mu.algebra() == e.source() && nu.algebra() == e.target(), ErrorKind::DimensionMismatch,
          "states do not match the map");
  // nu(E(B_k)) - mu(B_k) = (M^T rho_nu)_k - (rho_mu)_k in coordinates (bases are Hermitian).
  const CVec lhs = e.matrix().transpose() * nu.rho().coords();
  const CVec rhs = mu.rho().coords();
  return lhs.size() ? (lhs - rhs).cwiseAbs().maxCoeff() : 0.0;
}

namespace {

void require_invariant(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu) {
  const double r = invariance_residual(e, mu, nu);
  require(r <= 1e-8, ErrorKind::InvarianceViolated, "map does not carry nu to mu (" + fmt(r) + ")", r);
}

// b -> rho_mu^{-1/2} E^dag(rho_nu^{1/2} b rho_nu^{1/2}) rho_mu^{-1/2}
SuperOp kms_core(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu) {
  const SuperOp adj = e.trace_adjoint();
  return SuperOp::from_function(e.target(), e.source(), [&](const AlgElement& b) {
    return mu.inv_sqrt_rho() * adj(nu.sqrt_rho() * b * nu.sqrt_rho()) * mu.inv_sqrt_rho();
  });
}

MapFlags dual_flags(const SuperOp& e) { return {true, e.flags().positive, e.flags().cp, false}; }

}  // namespace

SuperOp dual_channel(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu) {
  require_invariant(e, mu, nu);
  const SuperOp core = kms_core(e, mu, nu);
  return SuperOp::from_function(e.target(), e.source(),
                                [&](const AlgElement& c) { return core(c.transpose()).transpose(); },
                                dual_flags(e));
}

SuperOp kms_dual(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu) {
  require_invariant(e, mu, nu);
  return kms_core(e, mu, nu).with_flags(dual_flags(e));
}

SuperOp kms_dual_by_composition(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu) {
  // j_B(pi(b)) = pi'(b^T); E' carries the encoded commutant of B to that of A; j_A undoes the transpose.
  const SuperOp d = dual_channel(e, mu, nu);
  const SuperOp ja = SuperOp::transpose(e.source());
  const SuperOp jb = SuperOp::transpose(e.target());
  return ja.compose(d).compose(jb).with_flags(dual_flags(e));
}

double reversing_residual(const SuperOp& theta, const FaithfulState& state) {
  require(theta.source() == state.algebra() && theta.target() == state.algebra(), ErrorKind::DimensionMismatch,
          "reversing operation does not act on the state's algebra");
  double r = theta.anti_residual();
  r = std::max(r, distance(theta.compose(theta), SuperOp::identity(state.algebra())));
  r = std::max(r, theta.hermiticity_residual());
  r = std::max(r, invariance_residual(theta, state, state));
  return r;
}

SuperOp theta_kms_dual(const SuperOp& e, const FaithfulState& mu, const FaithfulState& nu,
                       const SuperOp& theta_mu, const SuperOp& theta_nu) {
  for (const auto& [th, st] : {std::pair{&theta_mu, &mu}, std::pair{&theta_nu, &nu}}) {
    const double r = reversing_residual(*th, *st);
    require(r <= kFlagTol, ErrorKind::NotReversing, "invalid reversing operation (" + fmt(r) + ")", r);
  }
  return theta_mu.compose(kms_dual(e, mu, nu)).compose(theta_nu).with_flags(dual_flags(e));
}

SuperOp modular_generator(const FaithfulState& state) {
  const AlgElement& h = state.log_rho();
  return SuperOp::from_function(state.algebra(), state.algebra(),
                                [&](const AlgElement& a) { return (h * a - a * h) * cdouble(0, 1); });
}

SuperOp modular_group(const FaithfulState& state, double t) {
  std::vector<Mat> u;
  for (const Mat& h : state.log_rho().blocks()) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    CVec ph = (es.eigenvalues().cast<cdouble>() * cdouble(0, t)).array().exp();
    u.push_back(es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint());
  }
  const AlgElement uu(u);
  const AlgElement ui = uu.adjoint();
  return SuperOp::from_function(state.algebra(), state.algebra(),
                                [&](const AlgElement& a) { return uu * a * ui; }, {true, true, true, false});
}

SuperOp exp_superop(const SuperOp& generator, double t) {
  require(generator.source() == generator.target(), ErrorKind::DimensionMismatch, "generator must be square");
  Mat m = (generator.matrix() * cdouble(t)).exp();
  return SuperOp(generator.source(), generator.target(), std::move(m));
}

}  // namespace qot
