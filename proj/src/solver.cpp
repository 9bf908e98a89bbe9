#include "dhw/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <boost/numeric/odeint.hpp>

#include "dhw/constants.hpp"
#include "dhw/error.hpp"

namespace dhw::solver {

using constants::pi;

DhwSystem DhwSystem::assemble(const beamsel::BeamSet& beams, const potential::FourierPotential& pot,
                              const crystal::WaveVector& k0, const crystal::LatticeFrame& frame) {
  if (beams.dim() != frame.dim() || k0.dim() != frame.dim())
    throw ValidationError("beam set, k0 and lattice dimensions differ");
  DhwSystem s(beams);
  const auto n = static_cast<Eigen::Index>(beams.size());
  s.rho_.resize(n);
  s.sigma_.resize(n);
  s.g_norm_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& g = beams.members()[static_cast<std::size_t>(i)];
    const auto b = crystal::beam_geometry(g, k0, frame);
    if (!(b.rho > 0.0)) throw ValidationError("cannot assemble: rho_g <= 0 for beam " + g.str());
    s.rho_(i) = b.rho;
    s.sigma_(i) = g.is_zero() ? 0.0 : b.sigma;
    s.g_norm_(i) = b.g.norm();
  }
  s.r_half_ = (s.rho_ / pi).cwiseSqrt();

  s.u_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      s.u_(i, j) = pot.at(beams.members()[static_cast<std::size_t>(i)] - beams.members()[static_cast<std::size_t>(j)]);

  CMatrix h = s.u_;
  h.diagonal() += s.sigma_.cast<complex>();
  const Vector inv = s.r_half_.cwiseInverse();
  h = inv.asDiagonal() * h * inv.asDiagonal();
  s.h_ = 0.5 * (h + h.adjoint());
  if (!s.h_.allFinite()) throw NumericError("DHW matrix has non-finite entries");

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(s.h_);
  if (eig.info() != Eigen::Success) throw NumericError("Hermitian eigendecomposition failed");
  s.eval_ = eig.eigenvalues();
  s.evec_ = eig.eigenvectors();
  return s;
}

Vector DhwSystem::sigma_tilde() const { return pi * sigma_.cwiseQuotient(rho_); }

CMatrix DhwSystem::coupling_tilde() const {
  const Vector inv = r_half_.cwiseInverse();
  return inv.asDiagonal() * u_ * inv.asDiagonal();
}

double DhwSystem::coupling_hermitian_residual() const { return (u_ - u_.adjoint()).cwiseAbs().maxCoeff(); }

double DhwSystem::hamiltonian_hermitian_residual() const { return (h_ - h_.adjoint()).cwiseAbs().maxCoeff(); }

CVector DhwSystem::propagate(const CVector& psi0, double z) const {
  if (psi0.size() != rho_.size()) throw ValidationError("initial vector length does not match the beam set");
  const CVector a0 = evec_.adjoint() * (r_half_.cast<complex>().cwiseProduct(psi0));
  CVector phase(a0.size());
  for (Eigen::Index k = 0; k < a0.size(); ++k) phase(k) = std::polar(1.0, z * eval_(k)) * a0(k);
  return (evec_ * phase).cwiseQuotient(r_half_.cast<complex>());
}

CVector DhwSystem::apply_generator(const CVector& psi) const {
  CVector w = u_ * psi;
  w += sigma_.cast<complex>().cwiseProduct(psi);
  return (pi * w).cwiseQuotient(rho_.cast<complex>());
}

CVector DhwSystem::delta() const {
  CVector d = CVector::Zero(rho_.size());
  d(0) = 1.0;
  return d;
}

std::vector<double> uniform_grid(double z_end, int samples) {
  if (samples < 1) throw ValidationError("z-grid needs at least one interval");
  if (!std::isfinite(z_end) || z_end == 0.0) throw ValidationError("z-grid end must be finite and nonzero");
  std::vector<double> z(static_cast<std::size_t>(samples) + 1);
  for (int k = 0; k <= samples; ++k) z[static_cast<std::size_t>(k)] = z_end * k / samples;
  z.back() = z_end;
  if (z_end < 0) std::reverse(z.begin(), z.end());
  return z;
}

namespace {

void check_grid(const std::vector<double>& z) {
  if (z.empty()) throw ValidationError("empty z-grid");
  bool has_zero = false;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!std::isfinite(z[k])) throw ValidationError("z-grid contains a non-finite value");
    if (k > 0 && !(z[k] > z[k - 1])) throw ValidationError("z-grid must be strictly increasing");
    if (z[k] == 0.0) has_zero = true;
  }
  if (!has_zero) throw ValidationError("z-grid must contain z = 0");
}

}  // namespace

Solution evolve(std::shared_ptr<const DhwSystem> sys, const std::vector<double>& z_grid, const CVector& psi0) {
  check_grid(z_grid);
  if (psi0.size() != static_cast<Eigen::Index>(sys->size()))
    throw ValidationError("initial vector length does not match the beam set");
  Solution sol{sys, z_grid, CMatrix(psi0.size(), static_cast<Eigen::Index>(z_grid.size()))};
  for (std::size_t k = 0; k < z_grid.size(); ++k)
    sol.psi.col(static_cast<Eigen::Index>(k)) = z_grid[k] == 0.0 ? psi0 : sys->propagate(psi0, z_grid[k]);
  if (!sol.psi.allFinite()) throw NumericError("propagation produced non-finite amplitudes");
  return sol;
}

Solution evolve_oracle(std::shared_ptr<const DhwSystem> sys, const std::vector<double>& z_grid,
                       const CVector& psi0, double tol) {
  namespace ode = boost::numeric::odeint;
  check_grid(z_grid);
  if (!(tol >= 1e-13 && tol <= 1e-6)) throw DomainError("oracle tolerance must lie in [1e-13, 1e-6]");
  const auto n = psi0.size();
  if (n != static_cast<Eigen::Index>(sys->size()))
    throw ValidationError("initial vector length does not match the beam set");

  // Real state (Re psi, Im psi); psi' = i A psi with A = R^{-1}(Sigma+U).
  using State = std::vector<double>;
  CMatrix a = sys->coupling();
  a.diagonal() += sys->sigma().cast<complex>();
  a = (pi * sys->rho().cwiseInverse()).asDiagonal() * a;
  auto rhs = [&](const State& x, State& dx, double) {
    CVector psi(n);
    for (Eigen::Index i = 0; i < n; ++i) psi(i) = {x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(n + i)]};
    const CVector d = complex(0, 1) * (a * psi);
    for (Eigen::Index i = 0; i < n; ++i) {
      dx[static_cast<std::size_t>(i)] = d(i).real();
      dx[static_cast<std::size_t>(n + i)] = d(i).imag();
    }
  };

  Solution sol{sys, z_grid, CMatrix(n, static_cast<Eigen::Index>(z_grid.size()))};
  auto store = [&](std::size_t k, const State& x) {
    for (Eigen::Index i = 0; i < n; ++i)
      sol.psi(i, static_cast<Eigen::Index>(k)) = {x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(n + i)]};
  };

  const auto zero = static_cast<std::size_t>(std::find(z_grid.begin(), z_grid.end(), 0.0) - z_grid.begin());
  State init(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    init[static_cast<std::size_t>(i)] = psi0(i).real();
    init[static_cast<std::size_t>(n + i)] = psi0(i).imag();
  }
  sol.psi.col(static_cast<Eigen::Index>(zero)) = psi0;

  // Integrate outward from z = 0 in both directions.
  const double scale = std::max(1.0, sys->hamiltonian().cwiseAbs().maxCoeff());
  auto sweep = [&](int dir) {
    State x = init;
    double z = 0.0;
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_fehlberg78<State>());
    double dt = dir * 0.01 / scale;
    for (std::size_t k = zero;;) {
      if (dir > 0 ? k + 1 >= z_grid.size() : k == 0) break;
      k = dir > 0 ? k + 1 : k - 1;
      try {
        ode::integrate_adaptive(stepper, rhs, x, z, z_grid[k], dt);
      } catch (const std::exception& e) {
        throw NumericError(std::string("oracle integration failed: ") + e.what());
      }
      z = z_grid[k];
      for (double v : x)
        if (!std::isfinite(v)) throw NumericError("oracle integration produced non-finite values");
      store(k, x);
    }
  };
  sweep(+1);
  sweep(-1);
  return sol;
}

double flux_norm(const Vector& rho, const CVector& psi) {
  return std::sqrt((rho.array() * psi.array().abs2()).sum());
}

double flux_norm(const DhwSystem& sys, const CVector& psi) { return flux_norm(sys.rho(), psi); }

double energy_norm(const DhwSystem& sys, const CVector& psi) { return flux_norm(sys, sys.apply_generator(psi)); }

double sigma_norm(const DhwSystem& sys, const CVector& psi) {
  const CVector w = (pi * sys.sigma().cwiseQuotient(sys.rho())).cast<complex>().cwiseProduct(psi);
  return flux_norm(sys, w);
}

double weighted_norm(const DhwSystem& sys, const CVector& psi, double alpha) {
  const Eigen::ArrayXd w = (2.0 * alpha * sys.g_norm().array()).exp();
  return std::sqrt((w * sys.rho().array() * psi.array().abs2()).sum());
}

std::pair<double, double> analytic_two_beam(complex u_ghat, double rho0, double z) {
  if (!(rho0 > 0.0)) throw DomainError("rho0 must be > 0");
  const double c = std::cos(pi * std::abs(u_ghat) * z / rho0);
  const double s = std::sin(pi * std::abs(u_ghat) * z / rho0);
  return {c * c, s * s};
}

complex analytic_free_beam(double u0, double rho0, double z) {
  if (!(rho0 > 0.0)) throw DomainError("rho0 must be > 0");
  return std::polar(1.0, z * pi * u0 / rho0);
}

RestrictedError restrict_and_compare(const Solution& a, const Solution& b, const beamsel::BeamSet& common) {
  if (a.z != b.z) throw ValidationError("solutions use different z-grids");
  const auto& sa = a.system->beams();
  const auto& sb = b.system->beams();
  const auto m = static_cast<Eigen::Index>(common.size());
  std::vector<Eigen::Index> ia, ib;
  Vector rho(m);
  for (const auto& g : common.members()) {
    const auto pa = sa.index_of(g);
    const auto pb = sb.index_of(g);
    if (!pa || !pb) throw ValidationError("beam " + g.str() + " missing from one of the solutions");
    rho(static_cast<Eigen::Index>(ia.size())) = a.system->rho()(static_cast<Eigen::Index>(*pa));
    ia.push_back(static_cast<Eigen::Index>(*pa));
    ib.push_back(static_cast<Eigen::Index>(*pb));
  }
  RestrictedError r{a.z, {}, CMatrix(m, static_cast<Eigen::Index>(a.z.size()))};
  for (Eigen::Index k = 0; k < r.difference.cols(); ++k) {
    for (Eigen::Index i = 0; i < m; ++i)
      r.difference(i, k) = a.psi(ia[static_cast<std::size_t>(i)], k) - b.psi(ib[static_cast<std::size_t>(i)], k);
    r.error.push_back(flux_norm(rho, r.difference.col(k)));
  }
  return r;
}

void write_csv(const Solution& sol, std::ostream& os) {
  const int d = sol.system->beams().dim();
  os << "z_nm";
  for (int i = 0; i < d; ++i) os << ",g_index_" << i + 1;
  os << ",re_psi,im_psi,intensity\n";
  char buf[256];
  for (std::size_t k = 0; k < sol.z.size(); ++k) {
    for (std::size_t j = 0; j < sol.system->size(); ++j) {
      const auto& g = sol.system->beams().members()[j];
      const complex p = sol.psi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      std::snprintf(buf, sizeof buf, "%.17g", sol.z[k]);
      os << buf;
      for (int i = 0; i < d; ++i) os << ',' << g[i];
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", p.real(), p.imag(), std::norm(p));
      os << buf;
    }
  }
}

}  // namespace dhw::solver
