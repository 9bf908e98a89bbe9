#pragma once

// Closed-form a-priori error bounds evaluated as numbers.
//
// Every certificate has the shape
//   bound(z) = min(cap, (constant + slope |z|) exp(rate |z|))
// so it is nonnegative and nondecreasing in |z|.

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dhw/beamsel.hpp"
#include "dhw/crystal.hpp"
#include "dhw/potential.hpp"

namespace dhw::bounds {

/// Inputs shared by all bounds. S_0(alpha_U) and S_1(alpha_U - alpha) are
/// evaluated once at construction.
class BoundContext {
 public:
  /// `alpha` defaults to alpha_U / 2. Throws DomainError unless 0 < gamma < 1,
  /// rho0, C_U, alpha_U > 0 and 0 < alpha < alpha_U.
  BoundContext(double gamma, double rho0, potential::DecayEnvelope env, crystal::LatticeFrame frame,
               std::optional<double> alpha = std::nullopt, double sum_tol = 1e-10);

  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] double rho0() const { return rho0_; }
  [[nodiscard]] double c_u() const { return env_.c; }
  [[nodiscard]] double alpha_u() const { return env_.alpha; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double reference_length() const { return frame_.reference_length(); }
  [[nodiscard]] const crystal::LatticeFrame& frame() const { return frame_; }
  [[nodiscard]] double s0() const { return s0_; }  // S_0(alpha_U)
  [[nodiscard]] double s1() const { return s1_; }  // S_1(alpha_U - alpha)
  /// ||delta||_G = sqrt(rho0)
  [[nodiscard]] double delta_norm() const;
  /// N_cpl = pi C_U (S_0(alpha_U) - 1) / (gamma rho0), nm^-1
  [[nodiscard]] double n_cpl() const;

 private:
  double gamma_, rho0_;
  potential::DecayEnvelope env_;
  crystal::LatticeFrame frame_;
  double alpha_, sum_tol_;
  double s0_ = 0.0, s1_ = 0.0;

  friend double kappa(const BoundContext&, std::optional<double>);
};

/// kappa(alpha) = pi C_U / (gamma rho0) |alpha| S_1(alpha_U - |alpha|), nm^-1.
/// Uses the context's alpha when none is given; |alpha| >= alpha_U is a domain error.
double kappa(const BoundContext& ctx, std::optional<double> alpha = std::nullopt);

struct ErrorCertificate {
  std::string name;
  std::string formula;
  std::string units;
  double constant = 0.0;  // value at z = 0
  double slope = 0.0;     // nm^-1
  double rate = 0.0;      // exponential rate, nm^-1
  double cap = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::string, double>> inputs;

  [[nodiscard]] double operator()(double z) const;
};

/// Lemma: ||B A|| <= C_B ||A|| in the rho-weighted norms, with
/// C_B = sqrt(max column sum * max row sum) of |sqrt(rho_g/rho_h) B_gh|.
/// Rows are indexed by g (weights rho_rows), columns by h (rho_cols).
double operator_norm_bound(const Eigen::MatrixXcd& b, const Eigen::VectorXd& rho_rows,
                           const Eigen::VectorXd& rho_cols);

/// Exact rho-weighted operator norm (largest singular value of the scaled matrix).
double weighted_operator_norm(const Eigen::MatrixXcd& b, const Eigen::VectorXd& rho_rows,
                              const Eigen::VectorXd& rho_cols);

/// ||psi(z)||_alpha <= exp(kappa |z|) ||psi(0)||_alpha.
ErrorCertificate weighted_growth(const BoundContext& ctx, double initial_weighted_norm);

/// Inner error (B) and outer leakage (C) for a cut-off at radius M.
std::pair<ErrorCertificate, ErrorCertificate> cutoff_bounds(const BoundContext& ctx, double m);

/// Two sets sharing the ball G^M: twice the inner-error bound.
ErrorCertificate arbitrary_set_bound(const BoundContext& ctx, double m);

/// Bound on ||R^{-1} Sigma psi(z)||_G, independent of z.
ErrorCertificate energy_bound(const BoundContext& ctx);

/// Far-mode amplitude bound and Ewald-reduction error bound for cut-off s_star.
std::pair<ErrorCertificate, ErrorCertificate> ewald_bounds(const BoundContext& ctx, double s_star);

/// |free beam - psi_0| (cap 2) and off-beam leakage (cap ||delta||).
std::pair<ErrorCertificate, ErrorCertificate> free_beam_bounds(const BoundContext& ctx);

/// Smallest |g| over members of `outer` that are not in `inner`: every outer
/// beam left out lies at distance >= this from the origin.
double effective_cutoff(const beamsel::BeamSet& inner, const beamsel::BeamSet& outer,
                        const crystal::LatticeFrame& frame);

/// Smallest |g| over lattice points missing from a or b (the ball |g| < M
/// is then contained in both sets).
double common_ball_radius(const beamsel::BeamSet& a, const beamsel::BeamSet& b,
                          const crystal::LatticeFrame& frame);

enum class Variant { lolz, sysrow };

/// Structural error terms of the asymptotic theorems, up to an unknown
/// absolute constant. Informative only.
struct AsymptoticTerms {
  double first = 0.0;            // 1 / |alpha_* k0|^2
  double second = 0.0;           // alpha_* z* / l^2 (LOLZ), alpha_*^{3/2} |k0|^{1/2} z* / l^2 (row)
  double thickness_ratio = 0.0;  // z* / (|alpha_* k0|^{1/3} l), exponent 1/5 for the row
  double ell_scatt = 0.0;        // |k0| / C_U, nm
};

AsymptoticTerms asymptotic_error_terms(const BoundContext& ctx, const crystal::WaveVector& k0, double z_star,
                                       Variant variant);

struct BeamLengths {
  LatticeIndex g;
  double extinction = 0.0;  // |rho_g| / |U_g|, inf when U_g = 0
  double excitation = 0.0;  // 1 / |s_g|, inf when s_g = 0
};

struct CharacteristicLengths {
  double ell_scatt = 0.0;   // |k0| / C_U
  double collective = 0.0;  // alpha / kappa(alpha), inf when kappa = 0
  std::vector<BeamLengths> beams;
};

CharacteristicLengths characteristic_lengths(const BoundContext& ctx, const beamsel::BeamSet& beams,
                                             const potential::FourierPotential& pot, const crystal::WaveVector& k0);

/// Text report: one block per certificate with constants and values at `z`.
std::string certificate_report(const std::vector<ErrorCertificate>& certs, const std::vector<double>& z);

}  // namespace dhw::bounds
