#include "dhw/beamsel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "dhw/error.hpp"

namespace dhw::beamsel {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<LatticeIndex> filter(const std::vector<LatticeIndex>& in, auto&& keep) {
  std::vector<LatticeIndex> out;
  for (const auto& g : in)
    if (keep(g)) out.push_back(g);
  return out;
}

// Integer row echelon form of a set of generators; used for sublattice membership.
class IntegerSpan {
 public:
  IntegerSpan(const std::vector<LatticeIndex>& gens, int dim) : dim_(dim) {
    std::vector<std::array<long long, 3>> rows;
    for (const auto& g : gens) {
      std::array<long long, 3> r{};
      for (int i = 0; i < dim; ++i) r[static_cast<std::size_t>(i)] = g[i];
      rows.push_back(r);
    }
    std::size_t top = 0;
    for (int c = 0; c < dim && top < rows.size(); ++c) {
      const auto col = static_cast<std::size_t>(c);
      // Euclid on column c across rows top..end until one nonzero remains.
      while (true) {
        std::size_t pivot = rows.size();
        for (std::size_t r = top; r < rows.size(); ++r)
          if (rows[r][col] != 0 && (pivot == rows.size() || std::llabs(rows[r][col]) < std::llabs(rows[pivot][col])))
            pivot = r;
        if (pivot == rows.size()) break;
        std::swap(rows[top], rows[pivot]);
        bool done = true;
        for (std::size_t r = top + 1; r < rows.size(); ++r) {
          const long long q = rows[r][col] / rows[top][col];
          for (std::size_t k = 0; k < 3; ++k) rows[r][k] -= q * rows[top][k];
          if (rows[r][col] != 0) done = false;
        }
        if (done) {
          pivots_.push_back({c, rows[top]});
          ++top;
          break;
        }
      }
    }
  }

  [[nodiscard]] bool contains(const LatticeIndex& g) const {
    std::array<long long, 3> v{};
    for (int i = 0; i < dim_; ++i) v[static_cast<std::size_t>(i)] = g[i];
    for (const auto& [c, row] : pivots_) {
      const auto col = static_cast<std::size_t>(c);
      if (v[col] % row[col] != 0) return false;
      const long long q = v[col] / row[col];
      for (std::size_t k = 0; k < 3; ++k) v[k] -= q * row[k];
    }
    return v == std::array<long long, 3>{};
  }

 private:
  int dim_;
  std::vector<std::pair<int, std::array<long long, 3>>> pivots_;
};

}  // namespace

std::string Descriptor::str() const {
  std::string s = rule;
  for (const auto& [k, v] : params) s += " " + k + "=" + fmt(v);
  return s;
}

void canonical_sort(std::vector<LatticeIndex>& g) {
  std::sort(g.begin(), g.end(), [](const LatticeIndex& a, const LatticeIndex& b) {
    if (a.is_zero() != b.is_zero()) return a.is_zero();
    return a < b;
  });
}

BeamSet::BeamSet(std::vector<LatticeIndex> members, Descriptor descriptor, double gamma)
    : members_(std::move(members)), descriptor_(std::move(descriptor)), gamma_(gamma) {
  if (members_.empty()) throw ValidationError("beam set is empty");
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw ValidationError("admissibility parameter must lie in (0,1]");
  const int d = members_.front().dim();
  for (const auto& g : members_)
    if (g.dim() != d) throw ValidationError("beam set mixes index dimensions");
  canonical_sort(members_);
  if (!members_.front().is_zero()) throw ValidationError("beam set must contain g = 0");
  for (std::size_t i = 1; i < members_.size(); ++i)
    if (members_[i] == members_[i - 1]) throw ValidationError("duplicate beam " + members_[i].str());
}

std::optional<std::size_t> BeamSet::index_of(const LatticeIndex& g) const {
  if (g.is_zero()) return 0;
  const auto it = std::lower_bound(members_.begin() + 1, members_.end(), g);
  if (it == members_.end() || *it != g) return std::nullopt;
  return static_cast<std::size_t>(it - members_.begin());
}

double admissibility_margin(const std::vector<LatticeIndex>& g, const crystal::WaveVector& k0,
                            const crystal::LatticeFrame& frame) {
  const double rho0 = k0.normal_component();
  double m = std::numeric_limits<double>::infinity();
  for (const auto& n : g) m = std::min(m, crystal::beam_geometry(n, k0, frame).rho / rho0);
  return m;
}

BeamSet from_indices(std::vector<LatticeIndex> g, const crystal::WaveVector& k0,
                     const crystal::LatticeFrame& frame, Descriptor descriptor) {
  if (k0.dim() != frame.dim()) throw ValidationError("k0 and lattice dimensions differ");
  for (const auto& n : g) {
    if (n.dim() != frame.dim()) throw ValidationError("beam " + n.str() + " has wrong dimension");
    if (!(crystal::beam_geometry(n, k0, frame).rho > 0.0))
      throw ValidationError("beam " + n.str() + " is not admissible: rho_g <= 0");
  }
  const double margin = admissibility_margin(g, k0, frame);
  return {std::move(g), std::move(descriptor), std::min(margin, 1.0)};
}

BeamSet box(const LatticeIndex& lo, const LatticeIndex& hi, const crystal::WaveVector& k0,
            const crystal::LatticeFrame& frame) {
  const int d = frame.dim();
  if (lo.dim() != d || hi.dim() != d) throw ValidationError("box corners have wrong dimension");
  std::vector<LatticeIndex> g;
  LatticeIndex n = lo;
  for (int i = 0; i < d; ++i)
    if (lo[i] > hi[i]) throw ValidationError("box corner " + lo.str() + " exceeds " + hi.str());
  while (true) {
    g.push_back(n);
    int i = d - 1;
    while (i >= 0 && n[i] == hi[i]) n[i--] = 0;
    if (i < 0) break;
    for (int j = i + 1; j < d; ++j) n[j] = lo[j];
    ++n[i];
  }
  Descriptor desc{"box", {}};
  for (int i = 0; i < d; ++i) {
    desc.params.emplace_back("lo" + std::to_string(i + 1), lo[i]);
    desc.params.emplace_back("hi" + std::to_string(i + 1), hi[i]);
  }
  return from_indices(std::move(g), k0, frame, std::move(desc));
}

BeamSet g_ball(double radius, const crystal::WaveVector& k0, const crystal::LatticeFrame& frame) {
  if (!(radius >= 0.0)) throw DomainError("ball radius must be >= 0");
  return from_indices(crystal::dual_points(frame, radius), k0, frame, {"ball", {{"M_inv_nm", radius}}});
}

BeamSet g_gamma_truncated(double gamma, double r_cap, const crystal::WaveVector& k0,
                          const crystal::LatticeFrame& frame) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
  if (!(r_cap > 0.0) || !std::isfinite(r_cap)) throw DomainError("truncation radius must be finite and > 0");
  const double rho0 = k0.normal_component();
  auto g = filter(crystal::dual_points(frame, r_cap), [&](const LatticeIndex& n) {
    return crystal::beam_geometry(n, k0, frame).rho >= gamma * rho0;
  });
  return {std::move(g), {"gamma_truncated", {{"gamma", gamma}, {"R_cap_inv_nm", r_cap}}}, gamma};
}

EwaldSplit g_ewald(double radius, double s_star, const crystal::WaveVector& k0,
                   const crystal::LatticeFrame& frame) {
  if (!(s_star > 0.0)) throw DomainError("s_star must be > 0");
  const auto ball = g_ball(radius, k0, frame);
  std::vector<LatticeIndex> near, far;
  for (const auto& n : ball.members()) {
    const auto b = crystal::beam_geometry(n, k0, frame);
    (std::abs(*b.s) < s_star ? near : far).push_back(n);
  }
  return {from_indices(std::move(near), k0, frame,
                       {"ewald", {{"M_inv_nm", radius}, {"s_star_inv_nm", s_star}}}),
          std::move(far)};
}

double laue_zone_radius(const crystal::LatticeFrame& frame, const crystal::WaveVector& k0, int order) {
  if (order < 0) throw DomainError("Laue zone order must be >= 0");
  return std::sqrt((2.0 * order + 1.0) * frame.min_spacing() * k0.norm());
}

BeamSet lolz(const crystal::WaveVector& k0, const crystal::LatticeFrame& frame) {
  if (k0.dim() != frame.dim()) throw ValidationError("k0 and lattice dimensions differ");
  const double kappa = frame.min_spacing();
  // For g orthogonal to k0: dist = sqrt(|k0|^2+|g|^2) - |k0| <= kappa/2.
  const double radius = std::sqrt(kappa * k0.norm() + 0.25 * kappa * kappa);
  const auto& k = k0.components();
  const double slack = 1e-12 * k0.norm();
  auto g = filter(crystal::dual_points(frame, radius), [&](const LatticeIndex& n) {
    const auto p = frame.point(n);
    return std::abs(p.dot(k)) / k0.norm() <= tangent_tolerance &&
           crystal::ewald_distance(p, k0) <= 0.5 * kappa + slack;
  });

  // The in-plane points must span a (d-1)-dimensional lattice.
  const int d = frame.dim();
  Eigen::MatrixXd span(d, static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) span.col(static_cast<Eigen::Index>(i)) = frame.point(g[i]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(span);
  lu.setThreshold(1e-9);
  if (g.size() < 2 || lu.rank() < d - 1)
    throw ValidationError("tangent plane of k0 contains no (d-1)-dimensional sublattice within radius " +
                          std::to_string(radius) + " nm^-1; k0 is not along a zone axis");
  return from_indices(std::move(g), k0, frame, {"lolz", {{"M_inv_nm", radius}}});
}

BeamSet systematic_row(const LatticeIndex& g_star, int n_min, int n_max, const crystal::WaveVector& k0,
                       const crystal::LatticeFrame& frame) {
  if (g_star.is_zero()) throw ValidationError("row generator must be nonzero");
  if (n_min > 0 || n_max < 0) throw ValidationError("systematic row must include n = 0");
  std::vector<LatticeIndex> g;
  for (int n = n_min; n <= n_max; ++n) g.push_back(n * g_star);
  Descriptor desc{"systematic_row", {{"n_min", n_min}, {"n_max", n_max}}};
  for (int i = 0; i < g_star.dim(); ++i) desc.params.emplace_back("g_star" + std::to_string(i + 1), g_star[i]);
  return from_indices(std::move(g), k0, frame, std::move(desc));
}

BeamSet threshold_select(const potential::FourierPotential& pot, double u_min, double s_max,
                         const crystal::WaveVector& k0, const crystal::LatticeFrame& frame,
                         std::optional<double> radius_cap) {
  if (!(u_min >= 0.0)) throw DomainError("u_min must be >= 0");
  if (!(s_max > 0.0)) throw DomainError("s_max must be > 0");
  const int d = frame.dim();
  const double plane_tol = tangent_tolerance * frame.min_spacing();
  auto in_plane = [&](const LatticeIndex& n) { return std::abs(frame.point(n)(d - 1)) <= plane_tol; };

  double cap = radius_cap.value_or(std::numeric_limits<double>::infinity());
  if (std::isfinite(s_max)) {
    // In-plane rho_g = rho_0, so |s| < s_max forces |g|^2 - 2|k0||g| < 2 rho_0 s_max.
    const double k = k0.norm();
    cap = std::min(cap, k + std::sqrt(k * k + 2.0 * k0.normal_component() * s_max));
  }
  if (!std::isfinite(cap)) throw DomainError("threshold selection with s_max = inf needs a radius cap");

  std::vector<LatticeIndex> gens;
  for (const auto& [n, u] : pot.coefficients())
    if (!n.is_zero() && in_plane(n) && std::abs(u) >= u_min) gens.push_back(n);
  const IntegerSpan span(gens, d);

  auto g = filter(crystal::dual_points(frame, cap), [&](const LatticeIndex& n) {
    if (!in_plane(n) || !span.contains(n)) return false;
    const auto b = crystal::beam_geometry(n, k0, frame);
    return b.s && std::abs(*b.s) < s_max;
  });
  if (g.empty()) throw ValidationError("threshold selection left no beams");
  return from_indices(std::move(g), k0, frame,
                      {"threshold", {{"u_min_inv_nm2", u_min}, {"s_max_inv_nm", s_max}, {"R_cap_inv_nm", cap}}});
}

ValidationReport validate(const std::vector<LatticeIndex>& g, double gamma, const crystal::WaveVector& k0,
                          const crystal::LatticeFrame& frame) {
  ValidationReport r;
  std::set<LatticeIndex> seen;
  for (const auto& n : g) {
    if (n.is_zero()) r.has_origin = true;
    if (!seen.insert(n).second) r.duplicates.push_back(n);
    if (crystal::beam_geometry(n, k0, frame).rho < gamma * k0.normal_component()) r.violators.push_back(n);
  }
  r.margin = g.empty() ? 0.0 : admissibility_margin(g, k0, frame);
  r.passed = r.has_origin && r.duplicates.empty() && r.violators.empty() && gamma > 0.0 && gamma <= 1.0;
  return r;
}

ValidationReport validate(const BeamSet& set, double gamma, const crystal::WaveVector& k0,
                          const crystal::LatticeFrame& frame) {
  return validate(set.members(), gamma, k0, frame);
}

std::string to_table(const BeamSet& set, const crystal::WaveVector& k0, const crystal::LatticeFrame& frame) {
  std::ostringstream os;
  os << "# " << set.descriptor().str() << " gamma=" << fmt(set.gamma()) << " beams=" << set.size() << "\n#";
  for (int i = 0; i < set.dim(); ++i) os << " n" << i + 1;
  os << " rho_inv_nm sigma_inv_nm2 s_inv_nm abs_g_inv_nm\n";
  for (const auto& n : set.members()) {
    const auto b = crystal::beam_geometry(n, k0, frame);
    for (int i = 0; i < set.dim(); ++i) os << (i ? " " : "") << n[i];
    os << " " << fmt(b.rho) << " " << fmt(b.sigma) << " " << (b.s ? fmt(*b.s) : "undefined") << " "
       << fmt(b.g.norm()) << "\n";
  }
  return os.str();
}

}  // namespace dhw::beamsel
