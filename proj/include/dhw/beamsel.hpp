#pragma once

// Finite beam sets G with 0 in G and rho_g >= gamma rho_0 > 0.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dhw/crystal.hpp"
#include "dhw/lattice_index.hpp"
#include "dhw/potential.hpp"

namespace dhw::beamsel {

/// Which rule produced a set, with its numeric parameters (units in the key).
struct Descriptor {
  std::string rule;
  std::vector<std::pair<std::string, double>> params;

  [[nodiscard]] std::string str() const;
};

/// Ordered beam set. Members are kept with 0 first, then lexicographic.
class BeamSet {
 public:
  /// Throws ValidationError on duplicates, a missing origin, mixed dimensions
  /// or gamma outside (0,1].
  BeamSet(std::vector<LatticeIndex> members, Descriptor descriptor, double gamma);

  [[nodiscard]] const std::vector<LatticeIndex>& members() const { return members_; }
  [[nodiscard]] std::size_t size() const { return members_.size(); }
  [[nodiscard]] int dim() const { return members_.front().dim(); }
  [[nodiscard]] const Descriptor& descriptor() const { return descriptor_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] std::optional<std::size_t> index_of(const LatticeIndex& g) const;
  [[nodiscard]] bool contains(const LatticeIndex& g) const { return index_of(g).has_value(); }

 private:
  std::vector<LatticeIndex> members_;
  Descriptor descriptor_;
  double gamma_;
};

/// Sorts into canonical order: 0 first, then lexicographic.
void canonical_sort(std::vector<LatticeIndex>& g);

/// min_g rho_g / rho_0 over the given indices.
double admissibility_margin(const std::vector<LatticeIndex>& g, const crystal::WaveVector& k0,
                            const crystal::LatticeFrame& frame);

/// Wraps arbitrary indices; gamma is the measured margin. Throws
/// ValidationError naming the first g with rho_g <= 0.
BeamSet from_indices(std::vector<LatticeIndex> g, const crystal::WaveVector& k0,
                     const crystal::LatticeFrame& frame, Descriptor descriptor = {"custom", {}});

/// All g with lo_i <= n_i <= hi_i.
BeamSet box(const LatticeIndex& lo, const LatticeIndex& hi, const crystal::WaveVector& k0,
            const crystal::LatticeFrame& frame);

BeamSet g_ball(double radius, const crystal::WaveVector& k0, const crystal::LatticeFrame& frame);

/// {g : rho_g >= gamma rho_0, |g| <= r_cap}. The cap is mandatory since the
/// untruncated set is infinite.
BeamSet g_gamma_truncated(double gamma, double r_cap, const crystal::WaveVector& k0,
                          const crystal::LatticeFrame& frame);

struct EwaldSplit {
  BeamSet ewald;                  // |s_g| < s_star
  std::vector<LatticeIndex> far;  // remainder of the ball, canonical order
};

EwaldSplit g_ewald(double radius, double s_star, const crystal::WaveVector& k0,
                   const crystal::LatticeFrame& frame);

/// Radius ((2n+1) kappa_* |k0|)^{1/2} of the n-th Laue zone disc.
double laue_zone_radius(const crystal::LatticeFrame& frame, const crystal::WaveVector& k0, int order = 0);

/// In-plane tolerance |g.k0|/|k0| for the tangent plane.
inline constexpr double tangent_tolerance = 1e-9;

/// Lattice points in the tangent plane of k0 within kappa_*/2 of the Ewald sphere.
BeamSet lolz(const crystal::WaveVector& k0, const crystal::LatticeFrame& frame);

/// {n g_star : n_min <= n <= n_max}.
BeamSet systematic_row(const LatticeIndex& g_star, int n_min, int n_max, const crystal::WaveVector& k0,
                       const crystal::LatticeFrame& frame);

/// Three-stage recipe: in-plane points (g.nu = 0), then the sublattice spanned
/// by {g : |U_g| >= u_min}, then |s_g| < s_max. With s_max infinite a finite
/// `radius_cap` is required; otherwise the cap defaults to the radius implied
/// by s_max.
BeamSet threshold_select(const potential::FourierPotential& pot, double u_min, double s_max,
                         const crystal::WaveVector& k0, const crystal::LatticeFrame& frame,
                         std::optional<double> radius_cap = std::nullopt);

struct ValidationReport {
  bool passed = false;
  double margin = 0.0;  // min rho_g / rho_0
  bool has_origin = false;
  std::vector<LatticeIndex> duplicates;
  std::vector<LatticeIndex> violators;  // rho_g < gamma rho_0
};

ValidationReport validate(const std::vector<LatticeIndex>& g, double gamma, const crystal::WaveVector& k0,
                          const crystal::LatticeFrame& frame);
ValidationReport validate(const BeamSet& set, double gamma, const crystal::WaveVector& k0,
                          const crystal::LatticeFrame& frame);

/// Whitespace-separated table: indices, rho, sigma, s, |g|.
std::string to_table(const BeamSet& set, const crystal::WaveVector& k0, const crystal::LatticeFrame& frame);

}  // namespace dhw::beamsel
