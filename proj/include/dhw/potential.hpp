#pragma once

// Fourier coefficients U_g (nm^-2) of the reduced scattering potential.

#include <complex>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dhw/crystal.hpp"
#include "dhw/lattice_index.hpp"

namespace dhw::potential {

using complex = std::complex<double>;

/// Absolute tolerance (nm^-2) for U_{-g} == conj(U_g).
inline constexpr double hermitian_tolerance = 1e-12;

/// Finite Hermitian map g -> U_g. Missing coefficients are zero.
class FourierPotential {
 public:
  FourierPotential(crystal::LatticeFrame frame, std::map<LatticeIndex, complex> coefficients);

  [[nodiscard]] const crystal::LatticeFrame& frame() const { return frame_; }
  [[nodiscard]] const std::map<LatticeIndex, complex>& coefficients() const { return coeffs_; }
  [[nodiscard]] complex at(const LatticeIndex& g) const;
  [[nodiscard]] std::size_t size() const { return coeffs_.size(); }

  /// Largest |U_{-g} - conj(U_g)| over stored entries.
  [[nodiscard]] double hermitian_residual() const;

 private:
  crystal::LatticeFrame frame_;
  std::map<LatticeIndex, complex> coeffs_;
};

/// Builds a potential from explicit entries, adding (-g, conj U_g) for every
/// entry whose partner is absent. Throws ValidationError on duplicates or when
/// a supplied partner conflicts with the conjugate.
FourierPotential from_coefficients(const crystal::LatticeFrame& frame,
                                   const std::vector<std::pair<LatticeIndex, complex>>& entries);

/// Atomic scattering factor as a function of the dual vector g (nm^-1).
/// Must be real-valued and even in g.
using FormFactor = std::function<complex(const crystal::Vector& g)>;

namespace form_factors {
FormFactor constant(double value);
/// f(g) = sum_i a_i exp(-b_i s^2), s = |g|/2 in nm^-1 (the sin(theta)/lambda convention).
FormFactor gaussian_sum(std::vector<double> a, std::vector<double> b);
/// Four-Gaussian parameterizations for Ga, As and In in the Doyle-Turner form
/// (a in Angstrom, b in Angstrom^2, converted internally). Adequate for
/// qualitative decay checks, not for quantitative image simulation.
FormFactor element(const std::string& symbol);
}  // namespace form_factors

struct AtomSite {
  std::vector<double> position;  // fractional coordinates in [0,1)
  FormFactor form_factor;
  double debye_waller = 0.0;  // M_nu, nm^2
  std::string label;
};

/// U_g = scale * sum_nu f_nu(g) exp(2 pi i n.x_nu) exp(-M_nu |g|^2) on all
/// dual points with |g| <= cutoff. `scale` converts the form-factor sum to
/// nm^-2 and has no default.
FourierPotential from_atoms(const std::vector<AtomSite>& sites, const crystal::LatticeFrame& frame,
                            double cutoff, double scale);

/// Exponential majorant |U_g| <= c * exp(-alpha |g|).
struct DecayEnvelope {
  double c = 0.0;      // C_U, nm^-2
  double alpha = 0.0;  // alpha_U, nm
};

/// Certified envelope with the smallest admissible C_U (= max |U_g|) and the
/// largest decay rate compatible with it.
DecayEnvelope fit_decay(const FourierPotential& pot);

/// Smallest C such that |U_g| <= C exp(-alpha |g|) for every stored g.
DecayEnvelope envelope_for_rate(const FourierPotential& pot, double alpha);

/// True when |U_g| <= c exp(-alpha |g|) holds for all stored coefficients.
bool is_majorant(const FourierPotential& pot, const DecayEnvelope& env);

/// S_m(beta) = sum over the dual lattice of |k|^m exp(-beta |k|), m in {0,1,2},
/// to absolute accuracy `tol`.
double lattice_sum(int m, double beta, const crystal::LatticeFrame& frame, double tol = 1e-10);

}  // namespace dhw::potential
