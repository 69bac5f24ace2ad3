#include "qcart/surrogate.hpp"

#include "qcart/quantum.hpp"

#include <cmath>

namespace qcart {

StateSpaceModel::StateSpaceModel(const PotentialSpec& potential,
                                 const SimParams& params, Integrator integrator)
    : potential_(potential), params_(params), integrator_(integrator) {
  potential_.validate();
  params_.validate();
  origin_ = linearize(Vec2::Zero(), 0.0);
}

Vec2 StateSpaceModel::f_nonlinear(const Vec2& s, double u) const {
  const double dt = params_.dt;
  const double m = params_.mass;
  if (integrator_ == Integrator::kSymplecticEuler) {
    const double x = s(0) + s(1) * dt / m;
    const double p = s(1) - potential_.gradient(s(0)) * dt + u;
    return {x, p};
  }
  const double p_half = s(1) + u - 0.5 * dt * potential_.gradient(s(0));
  const double x = s(0) + p_half * dt / m;
  const double p = p_half - 0.5 * dt * potential_.gradient(x);
  return {x, p};
}

Vec2 StateSpaceModel::f(const Vec2& s, double u) const {
  if (potential_.is_linear()) return origin_.A * s + origin_.B * u;
  return f_nonlinear(s, u);
}

LinearModel StateSpaceModel::linearize(const Vec2& s, double u) const {
  const double dt = params_.dt;
  const double m = params_.mass;
  LinearModel lin;
  if (integrator_ == Integrator::kSymplecticEuler) {
    lin.A << 1.0, dt / m, -potential_.curvature(s(0)) * dt, 1.0;
    lin.B << 0.0, 1.0;
    return lin;
  }
  // Chain rule through kick -> half force -> drift -> half force.
  const double c0 = -0.5 * dt * potential_.curvature(s(0));
  const double p_half = s(1) + u - 0.5 * dt * potential_.gradient(s(0));
  const double x_new = s(0) + p_half * dt / m;
  const double c1 = -0.5 * dt * potential_.curvature(x_new);
  const double dxdx = 1.0 + c0 * dt / m;
  const double dxdp = dt / m;
  lin.A << dxdx, dxdp, c0 + c1 * dxdx, 1.0 + c1 * dxdp;
  lin.B << dxdp, 1.0 + c1 * dxdp;
  return lin;
}

Vec2 StateSpaceModel::propagate(const Vec2& s, double u, int n) const {
  Vec2 out = s;
  for (int i = 0; i < n; ++i) out = f(out, u);
  return out;
}

LinearModel StateSpaceModel::block(const Vec2& s, double u, int n) const {
  LinearModel total;
  total.A = Mat2::Identity();
  total.B = Vec2::Zero();
  Vec2 cur = s;
  for (int i = 0; i < n; ++i) {
    const LinearModel step_lin =
        potential_.is_linear() ? origin_ : linearize(cur, u);
    total.A = step_lin.A * total.A;
    total.B = step_lin.A * total.B + step_lin.B;
    if (i + 1 < n) cur = f(cur, u);
  }
  return total;
}

LinearModel build_model(const PotentialSpec& potential, const SimParams& params,
                        Integrator integrator) {
  return StateSpaceModel(potential, params, integrator).linear();
}

Eigen::Matrix4d NoiseModel::joint() const {
  Eigen::Matrix4d j;
  j << process, cross, cross.transpose(), meas;
  return j;
}

namespace {

void require_psd(const Eigen::MatrixXd& m, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!m.allFinite()) throw ConfigError(std::string(what) + " is not finite");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ConfigError(std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw ConfigError(std::string(what) + " is not positive semidefinite");
  }
}

}  // namespace

void NoiseModel::validate() const {
  require_psd(meas, "measurement covariance");
  require_psd(process, "process covariance");
  require_psd(joint(), "joint noise covariance");
}

NoiseModel NoiseModel::for_block(const Mat2& A, int n) const {
  if (n <= 1) return *this;
  NoiseModel out;
  Mat2 power = Mat2::Identity();
  out.process = Mat2::Zero();
  for (int j = 0; j < n; ++j) {
    out.process += power * process * power.transpose();
    if (j + 1 < n) power = A * power;
  }
  // power == A^(n-1): only the last measurement's back-action shares a block
  // with the averaged observation.
  out.cross = power * cross / static_cast<double>(n);
  out.meas = meas / static_cast<double>(n);
  return out;
}

NoiseModel NoiseModel::classical(double sigma_meas, double sigma_dyn,
                                 double coupling) {
  if (!(coupling > 0.0)) throw ConfigError("coupling must be positive");
  return isotropic(sigma_meas / coupling, sigma_dyn);
}

NoiseModel NoiseModel::isotropic(double sigma_meas, double sigma_process) {
  NoiseModel n;
  n.meas = Mat2::Identity() * sigma_meas * sigma_meas;
  n.process = Mat2::Identity() * sigma_process * sigma_process;
  return n;
}

JointNoiseSampler::JointNoiseSampler(const NoiseModel& noise) {
  noise.validate();
  // Symmetric square root so singular (fully correlated) models still sample.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(noise.joint());
  const Eigen::Vector4d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  factor_ = eig.eigenvectors() * root.asDiagonal();
}

std::pair<Vec2, Vec2> JointNoiseSampler::draw(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d z;
  for (int i = 0; i < 4; ++i) z(i) = normal(rng);
  const Eigen::Vector4d wv = factor_ * z;
  return {wv.head<2>(), wv.tail<2>()};
}

ClassicalStep step(const ClassicalState& state, double u,
                   const StateSpaceModel& model,
                   const JointNoiseSampler& noise, Rng& rng) {
  ClassicalStep out;
  out.next.s = model.f(state.s, u) + state.pending;
  const auto [w, v] = noise.draw(rng);
  out.y = out.next.s + v;
  out.next.pending = w;
  return out;
}

ClassicalState init_classical(const SimParams& params, Rng& rng) {
  ClassicalState st;
  st.s = Vec2(0.0, draw_initial_momentum(params, rng));
  return st;
}

}  // namespace qcart
