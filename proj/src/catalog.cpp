#include "qot/catalog.hpp"

#include <cmath>

namespace qot {

namespace {

Mat phase_unitary(double t) {
  Mat u = Mat::Identity(2, 2);
  u(1, 1) = std::polar(1.0, t);
  return u;
}

}  // namespace

SystemVN chain4(const RMat& alpha, const std::vector<double>& mu) {
  return SystemVN::classical(mu, {alpha}, {{0.5, -0.5, 0.5, -0.5}}, false);
}

SystemVN chain2(double r, double s, int coords) {
  RMat beta(2, 2);
  beta << 1 - r, r, s, 1 - s;
  const std::vector<double> nu = (r + s > 0) ? std::vector<double>{s / (r + s), r / (r + s)}
                                             : std::vector<double>{0.5, 0.5};
  return SystemVN::classical(nu, {beta}, std::vector<std::vector<double>>(static_cast<std::size_t>(coords), {0.5, -0.5}),
                             false);
}

RMat uniform_alpha4() { return RMat::Constant(4, 4, 0.25); }

RMat perturbed_alpha4(double eps) {
  RMat a = uniform_alpha4();
  a(0, 0) += eps;
  a(0, 2) -= eps;
  a(1, 0) -= eps;
  a(1, 2) += eps;
  return a;
}

Chain4x2 random_chain4x2(Rng& rng, bool unit_sum) {
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (;;) {
    const RMat alpha = random_stochastic(4, 4, rng, 0.0);
    SuperOp t = SuperOp::transition(alpha);
    FaithfulState mu = stationary_state(t);
    std::vector<double> p;
    bool ok = true;
    for (int i = 0; i < 4; ++i) {
      p.push_back(mu.rho().block(i)(0, 0).real());
      ok = ok && p.back() > 0.02;
    }
    if (!ok) continue;
    const double r = u(rng);
    const double s = unit_sum ? 1 - r : u(rng);
    return {chain4(alpha, p), chain2(r, s)};
  }
}

SystemVN spin_half(double lambda, double eta, double phi, double mu1) {
  const BlockAlgebra m2 = BlockAlgebra::matrix(2);
  const Mat ue = phase_unitary(eta), up = phase_unitary(phi);
  const SuperOp alpha = SuperOp::kraus({std::sqrt(lambda) * ue, std::sqrt(1 - lambda) * up});
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

double spin_half_condition(double lambda, double eta, double phi) {
  return lambda * std::sin(eta) + (1 - lambda) * std::sin(phi);
}

SuperOp spin_half_state_action(double lambda, double eta, double phi) {
  const Mat ue = phase_unitary(eta), up = phase_unitary(phi);
  return SuperOp::kraus({std::sqrt(lambda) * Mat(ue.adjoint()), std::sqrt(1 - lambda) * Mat(up.adjoint())});
}

double spin_half_product_distance(double mu1, double r, double s) {
  const double nu1 = (r + s > 0) ? s / (r + s) : 0.5;
  return std::sqrt(1.5 - (2 * nu1 - 1) * (2 * mu1 - 1) / 2);
}

}  // namespace qot
