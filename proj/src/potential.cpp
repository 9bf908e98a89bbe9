#include "dhw/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dhw/constants.hpp"
#include "dhw/error.hpp"

namespace dhw::potential {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void check_dim(const LatticeIndex& g, const crystal::LatticeFrame& frame) {
  if (g.dim() != frame.dim())
    throw ValidationError("coefficient index " + g.str() + " has wrong dimension");
}

}  // namespace

FourierPotential::FourierPotential(crystal::LatticeFrame frame,
                                   std::map<LatticeIndex, complex> coefficients)
    : frame_(std::move(frame)), coeffs_(std::move(coefficients)) {
  for (const auto& [g, u] : coeffs_) {
    check_dim(g, frame_);
    if (!std::isfinite(u.real()) || !std::isfinite(u.imag()))
      throw ValidationError("non-finite coefficient at " + g.str());
  }
  if (hermitian_residual() > hermitian_tolerance)
    throw ValidationError("potential violates U_{-g} = conj(U_g)");
}

complex FourierPotential::at(const LatticeIndex& g) const {
  const auto it = coeffs_.find(g);
  return it == coeffs_.end() ? complex{} : it->second;
}

double FourierPotential::hermitian_residual() const {
  double r = 0.0;
  for (const auto& [g, u] : coeffs_) r = std::max(r, std::abs(at(-g) - std::conj(u)));
  return r;
}

FourierPotential from_coefficients(const crystal::LatticeFrame& frame,
                                   const std::vector<std::pair<LatticeIndex, complex>>& entries) {
  std::map<LatticeIndex, complex> supplied;
  for (const auto& [g, u] : entries) {
    check_dim(g, frame);
    if (!supplied.emplace(g, u).second)
      throw ValidationError("duplicate coefficient for " + g.str());
  }
  auto completed = supplied;
  for (const auto& [g, u] : supplied) {
    const auto partner = supplied.find(-g);
    if (partner == supplied.end()) {
      completed[-g] = std::conj(u);
    } else if (std::abs(partner->second - std::conj(u)) > hermitian_tolerance) {
      throw ValidationError("Hermitian conflict between " + g.str() + " and " + (-g).str());
    }
  }
  return {frame, std::move(completed)};
}

namespace form_factors {

FormFactor constant(double value) {
  return [value](const crystal::Vector&) { return complex{value, 0.0}; };
}

FormFactor gaussian_sum(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.empty())
    throw ValidationError("gaussian form factor needs matching, non-empty a and b");
  return [a = std::move(a), b = std::move(b)](const crystal::Vector& g) {
    const double s2 = 0.25 * g.squaredNorm();
    double f = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) f += a[i] * std::exp(-b[i] * s2);
    return complex{f, 0.0};
  };
}

FormFactor element(const std::string& symbol) {
  // Doyle-Turner style four-Gaussian fits; a in Angstrom, b in Angstrom^2.
  struct Row {
    const char* sym;
    double a[4];
    double b[4];
  };
  static constexpr Row table[] = {
      {"Ga", {2.321, 2.486, 1.688, 0.599}, {65.602, 15.458, 2.581, 0.351}},
      {"As", {2.399, 2.790, 1.529, 0.594}, {45.718, 12.817, 2.280, 0.328}},
      {"In", {3.153, 3.557, 3.818, 1.310}, {66.649, 14.449, 2.060, 0.335}},
  };
  for (const auto& row : table) {
    if (symbol != row.sym) continue;
    std::vector<double> a, b;
    for (int i = 0; i < 4; ++i) {
      a.push_back(row.a[i] * 0.1);   // Angstrom -> nm
      b.push_back(row.b[i] * 0.01);  // Angstrom^2 -> nm^2
    }
    return gaussian_sum(std::move(a), std::move(b));
  }
  throw ValidationError("no built-in form factor for element '" + symbol + "'");
}

}  // namespace form_factors

FourierPotential from_atoms(const std::vector<AtomSite>& sites, const crystal::LatticeFrame& frame,
                            double cutoff, double scale) {
  if (sites.empty()) throw ValidationError("atomic model needs at least one site");
  if (!(cutoff > 0.0)) throw DomainError("coefficient cutoff must be positive");
  if (!std::isfinite(scale)) throw ValidationError("potential scale must be finite");
  const int d = frame.dim();
  for (const auto& s : sites) {
    if (static_cast<int>(s.position.size()) != d)
      throw ValidationError("site '" + s.label + "' has wrong dimension");
    for (double x : s.position)
      if (!(x >= 0.0 && x < 1.0))
        throw ValidationError("site '" + s.label + "' position outside [0,1)");
    if (!(s.debye_waller >= 0.0))
      throw ValidationError("site '" + s.label + "' has negative Debye-Waller factor");
    if (!s.form_factor) throw ValidationError("site '" + s.label + "' has no form factor");
  }

  std::map<LatticeIndex, complex> coeffs;
  for (const auto& n : crystal::dual_points(frame, cutoff)) {
    if (coeffs.count(n)) continue;  // filled as the partner of -n
    const crystal::Vector g = frame.point(n);
    const crystal::Vector mg = -g;
    complex u{};
    for (const auto& s : sites) {
      const complex f = s.form_factor(g);
      const complex fm = s.form_factor(mg);
      const double tol = 1e-12 * std::max(1.0, std::abs(f));
      if (std::abs(f.imag()) > tol || std::abs(fm - f) > tol)
        throw ValidationError("form factor of site '" + s.label +
                              "' is not real and even; potential would not be Hermitian");
      double phase = 0.0;
      for (int i = 0; i < d; ++i) phase += n[i] * s.position[static_cast<std::size_t>(i)];
      u += f.real() * std::exp(-s.debye_waller * g.squaredNorm()) *
           std::polar(1.0, 2.0 * constants::pi * phase);
    }
    u *= scale;
    if (n.is_zero()) u = {u.real(), 0.0};
    coeffs[n] = u;
    coeffs[-n] = std::conj(u);
  }
  return {frame, std::move(coeffs)};
}

DecayEnvelope envelope_for_rate(const FourierPotential& pot, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("decay rate must be >= 0");
  DecayEnvelope env{0.0, alpha};
  for (const auto& [g, u] : pot.coefficients())
    env.c = std::max(env.c, std::abs(u) * std::exp(alpha * pot.frame().point(g).norm()));
  if (!(env.c > 0.0)) throw DomainError("potential has no nonzero coefficient");
  // Rounding in exp() can leave the inequality violated by an ulp.
  while (!is_majorant(pot, env)) env.c = std::nextafter(env.c, std::numeric_limits<double>::infinity());
  return env;
}

DecayEnvelope fit_decay(const FourierPotential& pot) {
  double c = 0.0;
  int nonzero = 0;
  for (const auto& [g, u] : pot.coefficients()) {
    c = std::max(c, std::abs(u));
    if (std::abs(u) > 0.0) ++nonzero;
  }
  if (nonzero < 2) throw DomainError("decay rate undetermined with fewer than two coefficients");

  double alpha = std::numeric_limits<double>::infinity();
  for (const auto& [g, u] : pot.coefficients()) {
    if (g.is_zero() || std::abs(u) == 0.0) continue;
    alpha = std::min(alpha, std::log(c / std::abs(u)) / pot.frame().point(g).norm());
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DomainError("largest coefficient is not at g = 0; no envelope with alpha > 0 at minimal C");
  return envelope_for_rate(pot, alpha);
}

bool is_majorant(const FourierPotential& pot, const DecayEnvelope& env) {
  for (const auto& [g, u] : pot.coefficients())
    if (std::abs(u) > env.c * std::exp(-env.alpha * pot.frame().point(g).norm())) return false;
  return true;
}

double lattice_sum(int m, double beta, const crystal::LatticeFrame& frame, double tol) {
  if (m < 0 || m > 2) throw DomainError("lattice sum implemented for m in {0,1,2}");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("lattice sum diverges for beta <= 0");
  if (!(tol > 0.0)) throw DomainError("lattice sum tolerance must be positive");

  const int d = frame.dim();
  const double kappa = frame.min_spacing();
  const double h = kappa;
  // #{k : |k| <= r} <= (2r/kappa + 1)^d by packing disjoint balls of radius kappa/2.
  auto count = [&](double r) { return std::pow(2.0 * r / kappa + 1.0, d); };
  // Shell j covers (R + j h, R + (j+1) h]; r^m e^{-beta r} is decreasing beyond m/beta.
  auto shell = [&](double r0, int j) {
    const double hi = r0 + (j + 1) * h;
    return count(hi) * std::pow(hi, m) * std::exp(-beta * (r0 + j * h));
  };
  auto tail = [&](double r0) {
    const double c0 = shell(r0, 0);
    const double q = shell(r0, 1) / c0;  // shell ratios decrease in j
    if (!(q < 1.0)) return std::numeric_limits<double>::infinity();
    return c0 / (1.0 - q);
  };

  double radius = std::max(static_cast<double>(m) / beta, h);
  while (tail(radius) > 0.5 * tol) {
    radius *= 1.25;
    if (radius > 1e9 * h) throw NumericError("lattice sum radius does not converge");
  }

  std::vector<double> terms;
  for (const auto& n : crystal::dual_points(frame, radius)) {
    const double r = frame.point(n).norm();
    terms.push_back(std::pow(r, m) * std::exp(-beta * r));
  }
  // Small terms first keeps the compensated sum tight.
  std::sort(terms.begin(), terms.end());
  CompensatedSum sum;
  for (double t : terms) sum.add(t);
  return sum.value();
}

}  // namespace dhw::potential
