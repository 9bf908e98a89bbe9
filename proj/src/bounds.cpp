#include "dhw/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dhw/constants.hpp"
#include "dhw/error.hpp"

namespace dhw::bounds {

using constants::pi;

namespace {

const double inf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// (S_0(alpha_U) - 1) / (alpha S_1(alpha_U - alpha)) ||delta|| e^{-alpha M}
double inner_constant(const BoundContext& ctx, double m) {
  if (m == inf) return 0.0;
  return (ctx.s0() - 1.0) / (ctx.alpha() * ctx.s1()) * ctx.delta_norm() * std::exp(-ctx.alpha() * m);
}

std::vector<std::pair<std::string, double>> common_inputs(const BoundContext& ctx) {
  return {{"gamma", ctx.gamma()},   {"rho0_inv_nm", ctx.rho0()}, {"C_U_inv_nm2", ctx.c_u()},
          {"alpha_U_nm", ctx.alpha_u()}, {"alpha_nm", ctx.alpha()},  {"S0(alpha_U)", ctx.s0()},
          {"S1(alpha_U-alpha)", ctx.s1()}};
}

}  // namespace

BoundContext::BoundContext(double gamma, double rho0, potential::DecayEnvelope env, crystal::LatticeFrame frame,
                           std::optional<double> alpha, double sum_tol)
    : gamma_(gamma), rho0_(rho0), env_(env), frame_(std::move(frame)), alpha_(alpha.value_or(env.alpha / 2)),
      sum_tol_(sum_tol) {
  require(gamma_ > 0 && gamma_ < 1, "gamma must lie in (0, 1)");
  require(rho0_ > 0 && std::isfinite(rho0_), "rho0 must be positive");
  require(env_.c > 0 && std::isfinite(env_.c), "C_U must be positive");
  require(env_.alpha > 0 && std::isfinite(env_.alpha), "alpha_U must be positive");
  require(frame_.reference_length() > 0, "reference length must be positive");
  require(alpha_ > 0 && alpha_ < env_.alpha, "alpha must lie in (0, alpha_U)");
  s0_ = potential::lattice_sum(0, env_.alpha, frame_, sum_tol_);
  s1_ = potential::lattice_sum(1, env_.alpha - alpha_, frame_, sum_tol_);
}

double BoundContext::delta_norm() const { return std::sqrt(rho0_); }

double BoundContext::n_cpl() const { return pi * env_.c * (s0_ - 1.0) / (gamma_ * rho0_); }

double kappa(const BoundContext& ctx, std::optional<double> alpha) {
  const double a = std::abs(alpha.value_or(ctx.alpha_));
  if (a >= ctx.alpha_u()) throw DomainError("kappa: |alpha| must be below alpha_U");
  if (a == 0.0) return 0.0;
  const double s1 = a == ctx.alpha_ ? ctx.s1_ : potential::lattice_sum(1, ctx.alpha_u() - a, ctx.frame_, ctx.sum_tol_);
  return pi * ctx.c_u() / (ctx.gamma() * ctx.rho0()) * a * s1;
}

double ErrorCertificate::operator()(double z) const {
  const double az = std::abs(z);
  const double lin = constant + slope * az;
  if (lin == 0.0) return 0.0;
  return std::min(cap, lin * std::exp(rate * az));
}

double operator_norm_bound(const Eigen::MatrixXcd& b, const Eigen::VectorXd& rho_rows,
                           const Eigen::VectorXd& rho_cols) {
  if (b.rows() != rho_rows.size() || b.cols() != rho_cols.size())
    throw ValidationError("operator_norm_bound: weight sizes do not match the matrix");
  if ((rho_rows.array() <= 0).any() || (rho_cols.array() <= 0).any())
    throw DomainError("operator_norm_bound: weights must be positive");
  if (b.size() == 0) return 0.0;
  Eigen::MatrixXd t = b.cwiseAbs();
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) *= std::sqrt(rho_rows(i) / rho_cols(j));
  const double col = t.colwise().sum().maxCoeff();
  const double row = t.rowwise().sum().maxCoeff();
  return std::sqrt(col * row);
}

double weighted_operator_norm(const Eigen::MatrixXcd& b, const Eigen::VectorXd& rho_rows,
                              const Eigen::VectorXd& rho_cols) {
  if (b.size() == 0) return 0.0;
  // ||B A||_rows / ||A||_cols = ||D_r B D_c^{-1} x||_2 / ||x||_2 with D = diag(sqrt(rho))
  const Eigen::MatrixXcd t = rho_rows.cwiseSqrt().asDiagonal() * b * rho_cols.cwiseSqrt().cwiseInverse().asDiagonal();
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(t).singularValues()(0);
}

ErrorCertificate weighted_growth(const BoundContext& ctx, double initial_weighted_norm) {
  ErrorCertificate c;
  c.name = "weighted_growth";
  c.formula = "exp(kappa(alpha)|z|) ||psi(0)||_alpha";
  c.units = "nm^-1/2";
  c.constant = initial_weighted_norm;
  c.rate = kappa(ctx);
  c.inputs = common_inputs(ctx);
  c.inputs.emplace_back("psi0_weighted_norm", initial_weighted_norm);
  c.inputs.emplace_back("kappa_inv_nm", c.rate);
  return c;
}

std::pair<ErrorCertificate, ErrorCertificate> cutoff_bounds(const BoundContext& ctx, double m) {
  require(m >= 0, "cutoff radius must be nonnegative");
  const double k = kappa(ctx);
  ErrorCertificate b;
  b.name = "cutoff_inner_error";
  b.formula = "(S0(alpha_U)-1)/(alpha S1(alpha_U-alpha)) exp(kappa|z| - alpha M) ||delta||";
  b.units = "nm^-1/2";
  b.constant = inner_constant(ctx, m);
  b.rate = k;
  b.inputs = common_inputs(ctx);
  b.inputs.emplace_back("M_inv_nm", m);
  b.inputs.emplace_back("kappa_inv_nm", k);

  ErrorCertificate c = b;
  c.name = "cutoff_outer_leakage";
  c.formula = "exp(kappa|z| - alpha M) ||delta||";
  c.constant = m == inf ? 0.0 : ctx.delta_norm() * std::exp(-ctx.alpha() * m);
  return {b, c};
}

ErrorCertificate arbitrary_set_bound(const BoundContext& ctx, double m) {
  auto c = cutoff_bounds(ctx, m).first;
  c.name = "two_set_difference";
  c.formula = "2 (S0(alpha_U)-1)/(alpha S1(alpha_U-alpha)) exp(kappa|z| - alpha M) ||delta||";
  c.constant *= 2;
  return c;
}

ErrorCertificate energy_bound(const BoundContext& ctx) {
  ErrorCertificate c;
  c.name = "sigma_energy";
  c.formula = "2 pi C_U S0(alpha_U) / (gamma rho0) ||delta||";
  c.units = "nm^-3/2";
  c.constant = 2 * pi * ctx.c_u() * ctx.s0() / (ctx.gamma() * ctx.rho0()) * ctx.delta_norm();
  c.inputs = common_inputs(ctx);
  return c;
}

std::pair<ErrorCertificate, ErrorCertificate> ewald_bounds(const BoundContext& ctx, double s_star) {
  require(s_star > 0, "s_star must be positive");
  const double q = ctx.c_u() / (ctx.gamma() * ctx.rho0());
  ErrorCertificate far;
  far.name = "far_amplitude";
  far.formula = "(1/s_star) C_U S0(alpha_U) / (gamma rho0) ||delta||";
  far.units = "nm^-1/2";
  far.constant = q * ctx.s0() / s_star * ctx.delta_norm();
  far.inputs = common_inputs(ctx);
  far.inputs.emplace_back("s_star_inv_nm", s_star);

  ErrorCertificate red = far;
  red.name = "ewald_reduction";
  red.formula = "|z| (pi/s_star) C_U^2 (S0(alpha_U)-1) S0(alpha_U) / (gamma rho0)^2 ||delta||";
  red.constant = 0.0;
  red.slope = pi / s_star * q * q * (ctx.s0() - 1.0) * ctx.s0() * ctx.delta_norm();
  return {far, red};
}

std::pair<ErrorCertificate, ErrorCertificate> free_beam_bounds(const BoundContext& ctx) {
  const double n = ctx.n_cpl();
  ErrorCertificate a;
  a.name = "free_beam_amplitude";
  a.formula = "min(N_cpl |z|, 2), N_cpl = pi C_U (S0(alpha_U)-1) / (gamma rho0)";
  a.units = "1";
  a.slope = n;
  a.cap = 2.0;
  a.inputs = common_inputs(ctx);
  a.inputs.emplace_back("N_cpl_inv_nm", n);

  ErrorCertificate b = a;
  b.name = "free_beam_leakage";
  b.formula = "min(N_cpl |z|, 1) ||delta||";
  b.units = "nm^-1/2";
  b.slope = n * ctx.delta_norm();
  b.cap = ctx.delta_norm();
  return {a, b};
}

double effective_cutoff(const beamsel::BeamSet& inner, const beamsel::BeamSet& outer,
                        const crystal::LatticeFrame& frame) {
  double m = inf;
  for (const auto& g : inner.members())
    if (!outer.contains(g)) throw ValidationError("effective_cutoff: inner set is not contained in the outer set");
  for (const auto& g : outer.members())
    if (!inner.contains(g)) m = std::min(m, frame.point(g).norm());
  return m;
}

double common_ball_radius(const beamsel::BeamSet& a, const beamsel::BeamSet& b,
                          const crystal::LatticeFrame& frame) {
  // Some lattice point just beyond the largest common member is missing from both,
  // so the minimum is attained inside this radius.
  double r = 0.0;
  for (const auto& g : a.members())
    if (b.contains(g)) r = std::max(r, frame.point(g).norm());
  r += 2 * frame.min_spacing();
  double m = inf;
  for (const auto& g : crystal::dual_points(frame, r))
    if (!(a.contains(g) && b.contains(g))) m = std::min(m, frame.point(g).norm());
  return m;
}

AsymptoticTerms asymptotic_error_terms(const BoundContext& ctx, const crystal::WaveVector& k0, double z_star,
                                       Variant variant) {
  require(z_star >= 0, "z_star must be nonnegative");
  const double a = ctx.reference_length();
  const double k = k0.norm();
  const double ak = a * k;
  AsymptoticTerms t;
  t.ell_scatt = k / ctx.c_u();
  const double l2 = t.ell_scatt * t.ell_scatt;
  t.first = 1.0 / (ak * ak);
  if (variant == Variant::lolz) {
    t.second = a * z_star / l2;
    t.thickness_ratio = z_star / (std::cbrt(ak) * t.ell_scatt);
  } else {
    t.second = std::pow(a, 1.5) * std::sqrt(k) * z_star / l2;
    t.thickness_ratio = z_star / (std::pow(ak, 0.2) * t.ell_scatt);
  }
  return t;
}

CharacteristicLengths characteristic_lengths(const BoundContext& ctx, const beamsel::BeamSet& beams,
                                             const potential::FourierPotential& pot, const crystal::WaveVector& k0) {
  CharacteristicLengths out;
  out.ell_scatt = k0.norm() / ctx.c_u();
  const double k = kappa(ctx);
  out.collective = k > 0 ? ctx.alpha() / k : inf;
  for (const auto& g : beams.members()) {
    const auto geo = crystal::beam_geometry(g, k0, ctx.frame());
    BeamLengths b{g};
    const double u = std::abs(pot.at(g));
    b.extinction = u > 0 ? std::abs(geo.rho) / u : inf;
    b.excitation = geo.s && *geo.s != 0.0 ? 1.0 / std::abs(*geo.s) : inf;
    out.beams.push_back(b);
  }
  return out;
}

std::string certificate_report(const std::vector<ErrorCertificate>& certs, const std::vector<double>& z) {
  std::ostringstream os;
  for (const auto& c : certs) {
    os << "[" << c.name << "]\n";
    os << "  formula: " << c.formula << "\n";
    os << "  units: " << c.units << "\n";
    os << "  constant: " << fmt(c.constant) << "\n";
    os << "  slope_inv_nm: " << fmt(c.slope) << "\n";
    os << "  rate_inv_nm: " << fmt(c.rate) << "\n";
    os << "  cap: " << fmt(c.cap) << "\n";
    for (const auto& [k, v] : c.inputs) os << "  input " << k << " = " << fmt(v) << "\n";
    for (double zi : z) os << "  bound(z=" << fmt(zi) << " nm) = " << fmt(c(zi)) << "\n";
    os << "\n";
  }
  return os.str();
}

}  // namespace dhw::bounds
