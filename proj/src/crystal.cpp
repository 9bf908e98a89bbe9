#include "dhw/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dhw/constants.hpp"
#include "dhw/error.hpp"

namespace dhw::crystal {

namespace {

// Visits every integer vector n with |n_i| <= bound_i, in lexicographic order.
template <typename F>
void for_each_in_box(int dim, const std::vector<int>& bound, F&& f) {
  LatticeIndex n(dim);
  for (int i = 0; i < dim; ++i) n[i] = -bound[static_cast<std::size_t>(i)];
  while (true) {
    f(n);
    int i = dim - 1;
    while (i >= 0 && n[i] == bound[static_cast<std::size_t>(i)]) {
      n[i] = -bound[static_cast<std::size_t>(i)];
      --i;
    }
    if (i < 0) return;
    ++n[i];
  }
}

}  // namespace

LatticeFrame::LatticeFrame(Eigen::MatrixXd basis, double reference_length)
    : basis_(std::move(basis)), reference_length_(reference_length) {
  const auto d = basis_.cols();
  if (d < 1 || d > LatticeIndex::max_dim || basis_.rows() != d)
    throw ValidationError("lattice basis must be square with dimension 1..3");
  if (!basis_.allFinite()) throw ValidationError("lattice basis has non-finite entries");
  if (!(reference_length_ > 0.0)) throw ValidationError("reference length must be positive");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis_);
  min_singular_ = svd.singularValues().minCoeff();
  if (!(min_singular_ > 1e-12 * svd.singularValues().maxCoeff()))
    throw ValidationError("dual basis vectors are linearly dependent");

  // Shortest nonzero vector: |B n| <= shortest column => |n| <= column / sigma_min.
  double shortest = basis_.colwise().norm().minCoeff();
  const int bound = static_cast<int>(std::ceil(shortest / min_singular_));
  std::vector<int> box(static_cast<std::size_t>(d), bound);
  for_each_in_box(static_cast<int>(d), box, [&](const LatticeIndex& n) {
    if (n.is_zero()) return;
    shortest = std::min(shortest, point(n).norm());
  });
  min_spacing_ = shortest;
}

LatticeFrame LatticeFrame::rectangular(const std::vector<double>& spacings,
                                       double reference_length) {
  const auto d = static_cast<Eigen::Index>(spacings.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) b(i, i) = spacings[static_cast<std::size_t>(i)];
  return {b, reference_length};
}

Vector LatticeFrame::normal() const {
  Vector nu = Vector::Zero(dim());
  nu(dim() - 1) = 1.0;
  return nu;
}

Vector LatticeFrame::point(const LatticeIndex& n) const {
  Vector g = Vector::Zero(dim());
  for (int i = 0; i < dim(); ++i) g += static_cast<double>(n[i]) * basis_.col(i);
  return g;
}

WaveVector::WaveVector(Vector components) : k_(std::move(components)), norm_(k_.norm()) {
  if (k_.size() < 1 || !k_.allFinite()) throw ValidationError("wave vector must be finite");
  if (!(normal_component() > 0.0))
    throw ValidationError("incident wave vector must satisfy k0 . nu > 0");
}

double excitation_sigma(const Vector& g, const WaveVector& k0) {
  return -g.squaredNorm() - 2.0 * k0.components().dot(g);
}

double ewald_distance(const Vector& g, const WaveVector& k0) {
  // | |k0+g| - |k0| | = |sigma| / (|k0+g| + |k0|), free of cancellation.
  const double sigma = excitation_sigma(g, k0);
  if (sigma == 0.0) return 0.0;
  return std::abs(sigma) / ((k0.components() + g).norm() + k0.norm());
}

BeamGeometry beam_geometry(const Vector& g, const WaveVector& k0) {
  if (g.size() != k0.dim()) throw ValidationError("dimension mismatch between g and k0");
  BeamGeometry b;
  b.g = g;
  b.rho = k0.normal_component() + g(g.size() - 1);
  b.sigma = excitation_sigma(g, k0);
  if (b.rho != 0.0) b.s = b.sigma / (2.0 * b.rho);
  b.ewald_dist = ewald_distance(g, k0);
  return b;
}

BeamGeometry beam_geometry(const LatticeIndex& n, const WaveVector& k0, const LatticeFrame& frame) {
  return beam_geometry(frame.point(n), k0);
}

std::vector<LatticeIndex> dual_points(const LatticeFrame& frame, double radius) {
  if (!(radius >= 0.0)) throw DomainError("ball radius must be non-negative");
  const int d = frame.dim();
  // Slack so that points exactly on the sphere survive rounding in |g|.
  const double limit = radius * (1.0 + 1e-12);
  const int bound = static_cast<int>(std::floor(limit / frame.min_singular_value()));
  std::vector<LatticeIndex> out;
  std::vector<int> box(static_cast<std::size_t>(d), bound);
  for_each_in_box(d, box, [&](const LatticeIndex& n) {
    if (frame.point(n).norm() <= limit) out.push_back(n);
  });
  return out;
}

RelativisticParams relativistic_params(double voltage_kv) {
  if (!(voltage_kv > 0.0)) throw DomainError("acceleration voltage must be positive");
  using namespace constants;
  const double qe = elementary_charge * voltage_kv * 1e3;  // kinetic energy, J
  const double rest = electron_mass * speed_of_light * speed_of_light;
  const double lambda_m =
      planck_h / std::sqrt(2.0 * electron_mass * qe * (1.0 + qe / (2.0 * rest)));

  RelativisticParams p;
  p.voltage_kv = voltage_kv;
  p.wavelength_pm = lambda_m * 1e12;
  p.wave_number = 1e-9 / lambda_m;
  p.gamma = 1.0 + qe / rest;
  // 1 - 1/gamma^2 written to avoid cancellation at small voltages.
  const double x = qe / rest;
  p.beta = std::sqrt(x * (2.0 + x)) / (1.0 + x);
  return p;
}

}  // namespace dhw::crystal
