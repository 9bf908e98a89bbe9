#pragma once

// Finite DHW system R psi' = i (Sigma + U) psi on a beam set, R = diag(rho_g / pi).
//
// The factor pi is kept exactly as in the model, so the symmetrized matrix
// H = R^{-1/2} (Sigma + U) R^{-1/2} has entries pi (Sigma+U)_gh / sqrt(rho_g rho_h).

#include <complex>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dhw/beamsel.hpp"
#include "dhw/crystal.hpp"
#include "dhw/potential.hpp"

namespace dhw::solver {

using complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

class DhwSystem {
 public:
  /// Builds R, Sigma, U in the set's canonical order and diagonalizes H.
  /// Throws ValidationError when some rho_g <= 0, NumericError when the
  /// matrices are not finite.
  static DhwSystem assemble(const beamsel::BeamSet& beams, const potential::FourierPotential& pot,
                            const crystal::WaveVector& k0, const crystal::LatticeFrame& frame);

  [[nodiscard]] const beamsel::BeamSet& beams() const { return beams_; }
  [[nodiscard]] std::size_t size() const { return beams_.size(); }
  [[nodiscard]] double rho0() const { return rho_(0); }
  [[nodiscard]] const Vector& rho() const { return rho_; }      // nm^-1
  [[nodiscard]] const Vector& sigma() const { return sigma_; }  // nm^-2
  [[nodiscard]] const Vector& g_norm() const { return g_norm_; }
  [[nodiscard]] const CMatrix& coupling() const { return u_; }  // U_{g-h}, nm^-2
  [[nodiscard]] const CMatrix& hamiltonian() const { return h_; }
  /// Diagonal part pi sigma_g / rho_g of the symmetrized matrix.
  [[nodiscard]] Vector sigma_tilde() const;
  /// Coupling part pi U_gh / sqrt(rho_g rho_h) of the symmetrized matrix.
  [[nodiscard]] CMatrix coupling_tilde() const;
  [[nodiscard]] const Vector& eigenvalues() const { return eval_; }

  /// Largest |M_gh - conj(M_hg)| for U and H.
  [[nodiscard]] double coupling_hermitian_residual() const;
  [[nodiscard]] double hamiltonian_hermitian_residual() const;

  /// psi(z) for initial value psi0.
  [[nodiscard]] CVector propagate(const CVector& psi0, double z) const;
  /// R^{-1} (Sigma + U) psi, the generator applied to psi (so psi' = i * this).
  [[nodiscard]] CVector apply_generator(const CVector& psi) const;

  /// delta_{0,g}.
  [[nodiscard]] CVector delta() const;

 private:
  DhwSystem(beamsel::BeamSet beams) : beams_(std::move(beams)) {}

  beamsel::BeamSet beams_;
  Vector rho_, sigma_, g_norm_, r_half_;
  CMatrix u_, h_, evec_;
  Vector eval_;
};

struct Solution {
  std::shared_ptr<const DhwSystem> system;
  std::vector<double> z;  // nm
  CMatrix psi;            // beams x z-samples

  [[nodiscard]] CVector at(std::size_t k) const { return psi.col(static_cast<Eigen::Index>(k)); }
};

/// Uniform grid of `samples` intervals on [0, z_end], endpoint included.
std::vector<double> uniform_grid(double z_end, int samples);

/// Exact propagation through the eigendecomposition of H.
Solution evolve(std::shared_ptr<const DhwSystem> sys, const std::vector<double>& z_grid, const CVector& psi0);

/// Independent adaptive Runge-Kutta-Fehlberg 7(8) integration of psi' = i R^{-1}(Sigma+U) psi,
/// absolute and relative local error `tol` in [1e-13, 1e-6].
Solution evolve_oracle(std::shared_ptr<const DhwSystem> sys, const std::vector<double>& z_grid,
                       const CVector& psi0, double tol);

/// (sum rho_g |psi_g|^2)^{1/2}
double flux_norm(const Vector& rho, const CVector& psi);
double flux_norm(const DhwSystem& sys, const CVector& psi);
/// ||R^{-1}(Sigma+U) psi||_G
double energy_norm(const DhwSystem& sys, const CVector& psi);
/// ||R^{-1} Sigma psi||_G
double sigma_norm(const DhwSystem& sys, const CVector& psi);
/// (sum e^{2 alpha |g|} rho_g |psi_g|^2)^{1/2}
double weighted_norm(const DhwSystem& sys, const CVector& psi, double alpha);

/// (I_0, I_g) = (cos^2, sin^2)(pi |U_g| z / rho_0).
std::pair<double, double> analytic_two_beam(complex u_ghat, double rho0, double z);
/// e^{i z pi U_0 / rho_0}
complex analytic_free_beam(double u0, double rho0, double z);

struct RestrictedError {
  std::vector<double> z;
  std::vector<double> error;  // ||a|_common - b|_common||_common per sample
  CMatrix difference;         // common beams x z-samples, a - b
};

/// Compares two solutions on a common subset of beams. Throws ValidationError
/// on mismatched grids or when `common` is not contained in both sets.
RestrictedError restrict_and_compare(const Solution& a, const Solution& b, const beamsel::BeamSet& common);

/// Long-format CSV: z_nm, g_index_1..d, re_psi, im_psi, intensity (17 significant digits).
void write_csv(const Solution& sol, std::ostream& os);

}  // namespace dhw::solver
