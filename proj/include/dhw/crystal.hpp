#pragma once

// Reciprocal-lattice geometry and beam kinematics.
//
// Units throughout: lengths in nm, wave vectors in nm^-1, sigma_g in nm^-2,
// acceleration voltage in kV. The surface normal nu is always the last
// coordinate axis.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dhw/lattice_index.hpp"

namespace dhw::crystal {

using Vector = Eigen::VectorXd;

/// Dual lattice spanned by the columns of `basis` (nm^-1), with the surface
/// normal fixed to (0,...,0,1).
class LatticeFrame {
 public:
  /// `basis` is d x d, columns are the dual basis vectors b_i. `reference_length`
  /// is alpha_* (nm) used by the asymptotic error terms.
  LatticeFrame(Eigen::MatrixXd basis, double reference_length);

  /// Orthogonal lattice with spacing `spacings[i]` (nm^-1) along axis i.
  static LatticeFrame rectangular(const std::vector<double>& spacings, double reference_length);

  [[nodiscard]] int dim() const { return static_cast<int>(basis_.cols()); }
  [[nodiscard]] const Eigen::MatrixXd& basis() const { return basis_; }
  [[nodiscard]] double reference_length() const { return reference_length_; }
  /// kappa_*: smallest distance between two distinct lattice points.
  [[nodiscard]] double min_spacing() const { return min_spacing_; }
  /// Smallest singular value of the basis; |B n| >= this * |n| for integer n.
  [[nodiscard]] double min_singular_value() const { return min_singular_; }
  [[nodiscard]] Vector normal() const;

  [[nodiscard]] Vector point(const LatticeIndex& n) const;

 private:
  Eigen::MatrixXd basis_;
  double reference_length_;
  double min_spacing_ = 0.0;
  double min_singular_ = 0.0;
};

/// Incident wave vector k_0 (nm^-1). Requires k_0 . nu > 0.
class WaveVector {
 public:
  explicit WaveVector(Vector components);

  [[nodiscard]] const Vector& components() const { return k_; }
  [[nodiscard]] double norm() const { return norm_; }
  [[nodiscard]] int dim() const { return static_cast<int>(k_.size()); }
  /// rho_0 = k_0 . nu
  [[nodiscard]] double normal_component() const { return k_(k_.size() - 1); }

 private:
  Vector k_;
  double norm_;
};

struct BeamGeometry {
  Vector g;                   // nm^-1
  double rho = 0.0;           // (k0 + g) . nu, nm^-1
  double sigma = 0.0;         // |k0|^2 - |k0 + g|^2, nm^-2
  std::optional<double> s;    // sigma / (2 rho), nm^-1; empty when rho == 0
  double ewald_dist = 0.0;    // | |k0 + g| - |k0| |, nm^-1
};

BeamGeometry beam_geometry(const Vector& g, const WaveVector& k0);
BeamGeometry beam_geometry(const LatticeIndex& n, const WaveVector& k0, const LatticeFrame& frame);

/// sigma_g evaluated as -|g|^2 - 2 k0.g (no cancellation against |k0|^2).
double excitation_sigma(const Vector& g, const WaveVector& k0);

/// Unsigned distance of g to the Ewald sphere |k0 + g| = |k0|.
double ewald_distance(const Vector& g, const WaveVector& k0);

/// All integer combinations of the dual basis with |g| <= radius, ordered
/// lexicographically by index. Always contains 0.
std::vector<LatticeIndex> dual_points(const LatticeFrame& frame, double radius);

struct RelativisticParams {
  double voltage_kv = 0.0;
  double wavelength_pm = 0.0;
  double wave_number = 0.0;  // |k0| = 1 / lambda_0, nm^-1
  double gamma = 1.0;        // relativistic mass ratio
  double beta = 0.0;         // v / c
};

/// Relativistic electron wavelength for acceleration voltage `voltage_kv`,
/// computed with the (non-reduced) Planck constant h.
RelativisticParams relativistic_params(double voltage_kv);

}  // namespace dhw::crystal
