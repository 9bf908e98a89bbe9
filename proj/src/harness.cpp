#include "dhw/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dhw/constants.hpp"
#include "dhw/error.hpp"

namespace dhw::harness {

namespace fs = std::filesystem;
using solver::CVector;
using solver::DhwSystem;
using solver::Solution;

namespace {

const double inf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string index_csv(const LatticeIndex& g) {
  std::string s;
  for (int i = 0; i < g.dim(); ++i) s += (i ? "," : "") + std::to_string(g[i]);
  return s;
}

std::shared_ptr<const DhwSystem> assemble(const beamsel::BeamSet& set, const potential::FourierPotential& pot,
                                          const crystal::WaveVector& k0, const crystal::LatticeFrame& frame) {
  return std::make_shared<const DhwSystem>(DhwSystem::assemble(set, pot, k0, frame));
}

// Flux norm of psi restricted to the members selected by `keep`.
template <class Keep>
double partial_flux(const DhwSystem& sys, const CVector& psi, Keep keep) {
  double s = 0.0;
  const auto& m = sys.beams().members();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (keep(m[i])) s += sys.rho()(static_cast<Eigen::Index>(i)) * std::norm(psi(static_cast<Eigen::Index>(i)));
  return std::sqrt(s);
}

bool is_subset(const beamsel::BeamSet& a, const beamsel::BeamSet& b) {
  return std::all_of(a.members().begin(), a.members().end(), [&](const auto& g) { return b.contains(g); });
}

class Tally {
 public:
  Tally(std::string system, bounds::ErrorCertificate cert) : cert_(std::move(cert)) {
    rec_.system = std::move(system);
    rec_.certificate = cert_.name;
  }
  void add(double z, double measured) {
    const double b = cert_(z);
    ++rec_.samples;
    rec_.max_measured = std::max(rec_.max_measured, measured);
    if (!(measured <= b)) ++rec_.violations;
    const double ratio = b > 0 ? measured / b : (measured > 0 ? inf : 0.0);
    rec_.worst_ratio = std::max(rec_.worst_ratio, ratio);
  }
  [[nodiscard]] DominanceRecord record() const { return rec_; }

 private:
  bounds::ErrorCertificate cert_;
  DominanceRecord rec_;
};

}  // namespace

// ---- beam sets --------------------------------------------------------------

beamsel::BeamSet build_beam_set(const ExperimentConfig& cfg, const BeamSetSpec& s) {
  const auto& f = cfg.frame;
  const auto& k0 = cfg.k0;
  const int d = f.dim();
  auto to_index = [d](const std::vector<int>& v) {
    LatticeIndex g(d);
    for (int i = 0; i < d; ++i) g[i] = v[static_cast<std::size_t>(i)];
    return g;
  };
  if (s.rule == "box") return beamsel::box(to_index(s.lo), to_index(s.hi), k0, f);
  if (s.rule == "row") return beamsel::systematic_row(to_index(s.g_hat), s.n_min, s.n_max, k0, f);
  if (s.rule == "ball") return beamsel::g_ball(s.radius_inv_nm, k0, f);
  if (s.rule == "gamma") return beamsel::g_gamma_truncated(s.gamma, s.radius_inv_nm, k0, f);
  if (s.rule == "ewald") return beamsel::g_ewald(s.radius_inv_nm, s.s_max_inv_nm, k0, f).ewald;
  if (s.rule == "lolz") return beamsel::lolz(k0, f);
  if (s.rule == "threshold")
    return beamsel::threshold_select(cfg.potential, s.u_min_inv_nm2, s.s_max_inv_nm, k0, f, s.radius_cap_inv_nm);
  if (s.rule == "custom") return beamsel::from_indices(s.indices, k0, f, {"custom", {}});
  throw ValidationError("unknown beam-set rule " + s.rule);
}

std::vector<NamedSet> build_beam_sets(const ExperimentConfig& cfg) {
  std::vector<NamedSet> out;
  for (const auto& s : cfg.beam_sets) {
    try {
      out.push_back({s.name, build_beam_set(cfg, s)});
    } catch (const ValidationError& e) {
      throw ValidationError("beam set " + s.name + ": " + e.what());
    }
  }
  return out;
}

potential::DecayEnvelope envelope(const ExperimentConfig& cfg) {
  return cfg.envelope ? *cfg.envelope : potential::fit_decay(cfg.potential);
}

bounds::BoundContext bound_context(const ExperimentConfig& cfg) {
  return {cfg.gamma, cfg.k0.normal_component(), envelope(cfg), cfg.frame, cfg.alpha_nm};
}

namespace {

std::size_t reference_index(const ExperimentConfig& cfg, const std::vector<NamedSet>& sets) {
  if (!cfg.reference.empty()) {
    for (std::size_t i = 0; i < sets.size(); ++i)
      if (sets[i].name == cfg.reference) return i;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < sets.size(); ++i)
    if (sets[i].set.size() > sets[best].set.size()) best = i;
  return best;
}

}  // namespace

// ---- files ------------------------------------------------------------------

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---- tables -----------------------------------------------------------------

int significant_digits(solver::complex a, solver::complex b, int cap) {
  if (b == solver::complex{}) throw ValidationError("significant_digits: reference is zero");
  auto part = [cap](double x, double y) {
    const double d = std::abs(x - y);
    int n = 0;
    while (n < cap && d <= 0.5 * std::pow(10.0, -(n + 1))) ++n;
    return n;
  };
  return std::min(part(a.real(), b.real()), part(a.imag(), b.imag()));
}

ExcitationGrid excitation_grid(const ExperimentConfig& cfg) {
  if (cfg.frame.dim() != 2) throw ValidationError("excitation table needs a 2D lattice");
  const auto sets = build_beam_sets(cfg);
  const auto& ref = sets[reference_index(cfg, sets)].set;
  int lo0 = 0, hi0 = 0, lo1 = 0, hi1 = 0;
  for (const auto& g : ref.members()) {
    lo0 = std::min(lo0, g[0]);
    hi0 = std::max(hi0, g[0]);
    lo1 = std::min(lo1, g[1]);
    hi1 = std::max(hi1, g[1]);
  }
  ExcitationGrid grid;
  for (int i = lo0; i <= hi0; ++i) grid.cols.push_back(i);
  for (int j = lo1; j <= hi1; ++j) {
    grid.rows.push_back(j);
    std::vector<double> row;
    for (int i = lo0; i <= hi0; ++i) {
      const auto geo = crystal::beam_geometry(LatticeIndex{i, j}, cfg.k0, cfg.frame);
      row.push_back(geo.s ? *geo.s : std::numeric_limits<double>::quiet_NaN());
    }
    grid.s.push_back(row);
  }
  return grid;
}

std::string excitation_table(const ExcitationGrid& grid) {
  std::ostringstream os;
  os << "|s_g| in nm^-1, rows: normal index n2, columns: transverse index n1\n";
  os << "sign note: s_g = sigma_g / (2 rho_g) of the equation as solved here; a time-reversed\n"
        "convention flips every sign, so magnitudes are listed\n";
  os << "  n2\\n1";
  for (int c : grid.cols) os << pad_left(std::to_string(c), 8);
  os << "\n";
  for (std::size_t r = 0; r < grid.rows.size(); ++r) {
    os << pad_left(std::to_string(grid.rows[r]), 7);
    for (double s : grid.s[r]) os << fmt("%8.2f", std::abs(s));
    os << "\n";
  }
  return os.str();
}

PlotData amplitude_plot_data(const Solution& sol, const std::vector<LatticeIndex>& filter) {
  const auto& m = sol.system->beams().members();
  const int d = sol.system->beams().dim();
  auto keep = [&](const LatticeIndex& g) {
    return filter.empty() || std::find(filter.begin(), filter.end(), g) != filter.end();
  };
  std::string head = "z_nm";
  for (int i = 1; i <= d; ++i) head += ",g_index_" + std::to_string(i);
  PlotData out;
  std::ostringstream s, e;
  s << head << ",abs_psi\n";
  for (std::size_t k = 0; k < sol.z.size(); ++k)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (keep(m[i]))
        s << fmt("%.17g", sol.z[k]) << "," << index_csv(m[i]) << ","
          << fmt("%.17g", std::abs(sol.psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)))) << "\n";
  e << "# z_nm = " << fmt("%.17g", sol.z.back()) << "\n";
  e << head.substr(5) << ",abs_psi\n";
  for (std::size_t i = 0; i < m.size(); ++i)
    if (keep(m[i]))
      e << index_csv(m[i]) << ","
        << fmt("%.17g", std::abs(sol.psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sol.z.size() - 1))))
        << "\n";
  out.series = s.str();
  out.snapshot = e.str();
  return out;
}

// ---- suites -----------------------------------------------------------------

std::vector<DominanceRecord> dominance_checks(const std::string& label, const bounds::BoundContext& ctx,
                                              const potential::FourierPotential& pot, const crystal::WaveVector& k0,
                                              const Solution& full, const std::vector<Solution>& inner,
                                              double s_star) {
  const auto& sys = *full.system;
  const auto& frame = ctx.frame();
  const auto& z = full.z;
  const auto n = z.size();
  if (!beamsel::validate(sys.beams(), ctx.gamma(), k0, frame).passed)
    throw ValidationError(label + ": gamma exceeds the admissibility margin of the set");
  std::vector<DominanceRecord> out;

  {
    const double w0 = solver::weighted_norm(sys, full.at(0), ctx.alpha());
    Tally t(label, bounds::weighted_growth(ctx, w0));
    for (std::size_t k = 0; k < n; ++k) t.add(z[k], solver::weighted_norm(sys, full.at(k), ctx.alpha()));
    out.push_back(t.record());
  }
  {
    Tally t(label, bounds::energy_bound(ctx));
    for (std::size_t k = 0; k < n; ++k) t.add(z[k], solver::sigma_norm(sys, full.at(k)));
    out.push_back(t.record());
  }
  {
    const auto [amp, leak] = bounds::free_beam_bounds(ctx);
    Tally ta(label, amp), tl(label, leak);
    const double u0 = pot.at(LatticeIndex::zero(frame.dim())).real();
    for (std::size_t k = 0; k < n; ++k) {
      const auto psi = full.at(k);
      ta.add(z[k], std::abs(solver::analytic_free_beam(u0, sys.rho0(), z[k]) - psi(0)));
      tl.add(z[k], partial_flux(sys, psi, [](const LatticeIndex& g) { return !g.is_zero(); }));
    }
    out.push_back(ta.record());
    out.push_back(tl.record());
  }
  {
    std::vector<LatticeIndex> ew;
    for (const auto& g : sys.beams().members()) {
      const auto s = crystal::beam_geometry(g, k0, frame).s;
      if (g.is_zero() || (s && std::abs(*s) < s_star)) ew.push_back(g);
    }
    const auto ew_set = beamsel::from_indices(ew, k0, frame, {"ewald", {{"s_star_inv_nm", s_star}}});
    const auto ew_sys = assemble(ew_set, pot, k0, frame);
    const auto ew_sol = solver::evolve(ew_sys, z, ew_sys->delta());
    const auto diff = solver::restrict_and_compare(ew_sol, full, ew_set);
    const auto [far, red] = bounds::ewald_bounds(ctx, s_star);
    Tally tf(label, far), tr(label, red);
    for (std::size_t k = 0; k < n; ++k) {
      tf.add(z[k], partial_flux(sys, full.at(k), [&](const LatticeIndex& g) { return !ew_set.contains(g); }));
      tr.add(z[k], diff.error[k]);
    }
    out.push_back(tf.record());
    out.push_back(tr.record());
  }

  std::vector<const Solution*> subs;
  for (const auto& s : inner)
    if (is_subset(s.system->beams(), sys.beams()) && s.system->size() < sys.size()) subs.push_back(&s);

  for (const auto* s : subs) {
    const auto& set = s->system->beams();
    const double m = bounds::effective_cutoff(set, sys.beams(), frame);
    const auto [b, c] = bounds::cutoff_bounds(ctx, m);
    const auto diff = solver::restrict_and_compare(*s, full, set);
    const std::string tag = label + "/" + set.descriptor().str();
    Tally tb(tag, b), tc(tag, c);
    for (std::size_t k = 0; k < n; ++k) {
      tb.add(z[k], diff.error[k]);
      tc.add(z[k], partial_flux(sys, full.at(k), [&](const LatticeIndex& g) { return !set.contains(g); }));
    }
    out.push_back(tb.record());
    out.push_back(tc.record());
  }

  for (std::size_t i = 0; i < subs.size(); ++i)
    for (std::size_t j = i + 1; j < subs.size(); ++j) {
      const auto& a = subs[i]->system->beams();
      const auto& b = subs[j]->system->beams();
      const double m = bounds::common_ball_radius(a, b, frame);
      std::vector<LatticeIndex> ball;
      for (const auto& g : a.members())
        if (frame.point(g).norm() < m) ball.push_back(g);
      const auto ball_set = beamsel::from_indices(ball, k0, frame, {"ball", {{"radius_inv_nm", m}}});
      const auto diff = solver::restrict_and_compare(*subs[i], *subs[j], ball_set);
      Tally t(label + "/" + a.descriptor().str() + " vs " + b.descriptor().str(), bounds::arbitrary_set_bound(ctx, m));
      for (std::size_t k = 0; k < n; ++k) t.add(z[k], diff.error[k]);
      out.push_back(t.record());
    }
  return out;
}

ConservationRecord conservation(const std::string& label, const Solution& sol) {
  const auto& sys = *sol.system;
  ConservationRecord r{label, sys.size(), 0.0, 0.0};
  const double f0 = solver::flux_norm(sys, sol.at(0));
  const double e0 = solver::energy_norm(sys, sol.at(0));
  for (std::size_t k = 0; k < sol.z.size(); ++k) {
    const auto psi = sol.at(k);
    r.flux_drift = std::max(r.flux_drift, std::abs(solver::flux_norm(sys, psi) - f0) / f0);
    if (e0 > 0) r.energy_drift = std::max(r.energy_drift, std::abs(solver::energy_norm(sys, psi) - e0) / e0);
  }
  return r;
}

LemmaRecord energy_lemma(const std::string& label, const DhwSystem& sys, std::mt19937_64& rng, std::size_t vectors) {
  std::normal_distribution<double> nd;
  const auto n = static_cast<Eigen::Index>(sys.size());
  const auto& h = sys.hamiltonian();
  const auto st = sys.sigma_tilde();
  const auto ut = sys.coupling_tilde();
  LemmaRecord r{label, vectors, 0, inf};
  for (std::size_t v = 0; v < vectors; ++v) {
    CVector a(n);
    for (auto& x : a) x = {nd(rng), nd(rng)};
    const double lhs = (h * a).squaredNorm();
    const double sig = st.cwiseProduct(a).squaredNorm();
    const double cpl = (ut * a).squaredNorm();
    const double slack = (lhs - (0.5 * sig - cpl)) / (lhs + 0.5 * sig + cpl);
    r.worst_slack = std::min(r.worst_slack, slack);
    if (slack < -1e-13) ++r.violations;
  }
  return r;
}

RandomSystem random_system(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  const double h1 = 2 + 4 * u(rng), h2 = 2 + 4 * u(rng);
  auto frame = crystal::LatticeFrame::rectangular({h1, h2}, 0.5);
  const potential::DecayEnvelope env{2 + 18 * u(rng), 0.2 + 0.8 * u(rng)};
  std::vector<std::pair<LatticeIndex, potential::complex>> e{{LatticeIndex{0, 0}, env.c * (2 * u(rng) - 1)}};
  for (int i = -4; i <= 4; ++i)
    for (int j = 0; j <= 3; ++j) {
      if (j == 0 && i <= 0) continue;
      const LatticeIndex g{i, j};
      // uniform in the unit disc, slightly shrunk so the envelope holds after rounding
      const double r = 0.999 * std::sqrt(u(rng)), ph = 2 * constants::pi * u(rng);
      e.emplace_back(g, env.c * std::exp(-env.alpha * frame.point(g).norm()) * std::polar(r, ph));
    }
  auto pot = potential::from_coefficients(frame, e);
  if (!potential::is_majorant(pot, env)) throw InvariantError("random potential escaped its envelope");
  crystal::Vector k(2);
  k << h1 * (2 * u(rng) - 1), 200 + 200 * u(rng);
  const crystal::WaveVector k0(k);
  std::uniform_int_distribution<int> width(0, 4);
  const int w = width(rng);
  const int lo = -std::uniform_int_distribution<int>(0, w)(rng);
  auto beams = beamsel::box({lo, -1}, {lo + w, 1}, k0, frame);
  const double z_end = (0.5 + 1.5 * u(rng)) * k(1) / env.c;
  return {frame, k0, std::move(pot), env, std::move(beams), z_end};
}

SuiteResult randomized_suite(std::uint64_t seed, int count, int samples) {
  std::mt19937_64 rng(seed);
  SuiteResult out;
  for (int i = 0; i < count; ++i) {
    const auto rs = random_system(rng);
    const std::string label = "random#" + std::to_string(i);
    const auto grid = solver::uniform_grid(rs.z_end, samples);
    auto sys = assemble(rs.beams, rs.potential, rs.k0, rs.frame);
    const auto full = solver::evolve(sys, grid, sys->delta());
    out.conservation.push_back(conservation(label, full));
    out.lemma.push_back(energy_lemma(label, *sys, rng));

    // inner sets: the central row and the ball of radius one lattice step
    std::vector<Solution> inner;
    std::vector<LatticeIndex> row, ball;
    const double r = rs.frame.min_spacing() * 1.0001;
    for (const auto& g : rs.beams.members()) {
      if (g[1] == 0) row.push_back(g);
      if (rs.frame.point(g).norm() <= r) ball.push_back(g);
    }
    for (auto* m : {&row, &ball}) {
      const auto set = beamsel::from_indices(*m, rs.k0, rs.frame, {m == &row ? "row" : "ball", {}});
      auto s = assemble(set, rs.potential, rs.k0, rs.frame);
      inner.push_back(solver::evolve(s, grid, s->delta()));
    }
    const double gamma = std::min(0.5, rs.beams.gamma());
    const bounds::BoundContext ctx(gamma, rs.k0.normal_component(), rs.envelope, rs.frame);
    auto recs = dominance_checks(label, ctx, rs.potential, rs.k0, full, inner, 1.0);
    out.dominance.insert(out.dominance.end(), recs.begin(), recs.end());
  }
  return out;
}

// ---- run --------------------------------------------------------------------

std::vector<bounds::ErrorCertificate> certificates(const ExperimentConfig& cfg) {
  const auto sets = build_beam_sets(cfg);
  const auto& ref = sets[reference_index(cfg, sets)].set;
  const auto ctx = bound_context(cfg);
  std::vector<bounds::ErrorCertificate> out;
  out.push_back(bounds::weighted_growth(ctx, ctx.delta_norm()));
  for (const auto& s : sets) {
    if (s.set.size() >= ref.size() || !is_subset(s.set, ref)) continue;
    auto [b, c] = bounds::cutoff_bounds(ctx, bounds::effective_cutoff(s.set, ref, cfg.frame));
    b.name += "[" + s.name + "]";
    c.name += "[" + s.name + "]";
    out.push_back(b);
    out.push_back(c);
  }
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      if (&sets[i].set == &ref || &sets[j].set == &ref) continue;
      auto a = bounds::arbitrary_set_bound(ctx, bounds::common_ball_radius(sets[i].set, sets[j].set, cfg.frame));
      a.name += "[" + sets[i].name + "," + sets[j].name + "]";
      out.push_back(a);
    }
  out.push_back(bounds::energy_bound(ctx));
  const auto [far, red] = bounds::ewald_bounds(ctx, cfg.s_star_inv_nm);
  out.push_back(far);
  out.push_back(red);
  const auto [amp, leak] = bounds::free_beam_bounds(ctx);
  out.push_back(amp);
  out.push_back(leak);
  return out;
}

RunReport run(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.config_name = cfg.name;
  rep.config_hash = cfg.hash;
  const auto sets = build_beam_sets(cfg);
  const std::size_t ref = reference_index(cfg, sets);
  rep.reference = sets[ref].name;
  rep.z_end = cfg.z_star_nm;
  const int samples = opts.z_samples.value_or(cfg.z_samples);
  if (samples < 1) throw ValidationError("z samples must be at least 1");
  const auto grid = solver::uniform_grid(cfg.z_star_nm, samples);

  for (const auto& s : sets) {
    const auto t1 = std::chrono::steady_clock::now();
    auto sys = assemble(s.set, cfg.potential, cfg.k0, cfg.frame);
    auto sol = solver::evolve(sys, grid, sys->delta());
    SetSummary sum;
    sum.name = s.name;
    sum.descriptor = s.set.descriptor().str();
    sum.beams = s.set.size();
    sum.margin = beamsel::admissibility_margin(s.set.members(), cfg.k0, cfg.frame);
    const auto cons = conservation(s.name, sol);
    sum.flux_drift = cons.flux_drift;
    sum.energy_drift = cons.energy_drift;
    for (const auto& g : cfg.report_modes)
      sum.modes_at_end.push_back(s.set.contains(g) ? sol.psi(static_cast<Eigen::Index>(*s.set.index_of(g)),
                                                             static_cast<Eigen::Index>(grid.size() - 1))
                                                   : solver::complex{});
    sum.seconds = seconds_since(t1);
    if (sum.flux_drift > cfg.tolerances.flux_rel)
      rep.failures.push_back(s.name + ": flux drift " + fmt("%.3g", sum.flux_drift) + " exceeds tolerance");
    if (sum.energy_drift > cfg.tolerances.energy_rel)
      rep.failures.push_back(s.name + ": energy drift " + fmt("%.3g", sum.energy_drift) + " exceeds tolerance");
    rep.sets.push_back(sum);
    rep.solutions.push_back(std::move(sol));
  }

  const auto& refsol = rep.solutions[ref];
  const auto& refset = sets[ref].set;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (i == ref || !is_subset(sets[i].set, refset)) continue;
    const auto diff = solver::restrict_and_compare(rep.solutions[i], refsol, sets[i].set);
    Comparison c;
    c.name = sets[i].name;
    c.error_at_end = diff.error.back();
    c.max_error = *std::max_element(diff.error.begin(), diff.error.end());
    for (std::size_t m = 0; m < cfg.report_modes.size(); ++m) {
      const auto b = rep.sets[ref].modes_at_end[m];
      c.digits.push_back(sets[i].set.contains(cfg.report_modes[m]) && b != solver::complex{}
                             ? significant_digits(rep.sets[i].modes_at_end[m], b)
                             : 0);
    }
    rep.comparisons.push_back(c);
  }

  const auto oracle_tol = opts.oracle_tol ? opts.oracle_tol : cfg.tolerances.oracle;
  if (oracle_tol) {
    const auto orc = solver::evolve_oracle(refsol.system, grid, refsol.system->delta(), *oracle_tol);
    rep.oracle_gap = (orc.psi - refsol.psi).cwiseAbs().maxCoeff();
  }

  const auto ctx = bound_context(cfg);
  if (ctx.gamma() > refset.gamma())
    throw ValidationError("bounds.gamma exceeds the admissibility margin of the reference set");
  rep.certificates = certificates(cfg);
  std::vector<Solution> inner;
  for (std::size_t i = 0; i < sets.size(); ++i)
    if (i != ref) inner.push_back(rep.solutions[i]);
  rep.dominance = dominance_checks(cfg.name, ctx, cfg.potential, cfg.k0, refsol, inner, cfg.s_star_inv_nm);
  for (const auto& d : rep.dominance)
    if (d.violations)
      rep.failures.push_back(d.system + ": " + d.certificate + " violated at " + std::to_string(d.violations) +
                             " samples");
  rep.ok = rep.failures.empty();

  if (opts.write_files) {
    const fs::path out = opts.out_dir.value_or(cfg.output_dir);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const auto& name = sets[i].name;
      std::ostringstream csv;
      solver::write_csv(rep.solutions[i], csv);
      const auto plot = amplitude_plot_data(rep.solutions[i]);
      const std::vector<std::pair<fs::path, std::string>> files{
          {out / ("psi_" + name + ".csv"), csv.str()},
          {out / ("amplitude_" + name + ".csv"), plot.series},
          {out / ("snapshot_" + name + ".csv"), plot.snapshot},
          {out / ("beams_" + name + ".txt"), beamsel::to_table(sets[i].set, cfg.k0, cfg.frame)}};
      for (const auto& [p, c] : files) {
        write_atomic(p, c);
        rep.files.push_back(p);
      }
    }
    rep.seconds = seconds_since(t0);
    std::vector<std::pair<fs::path, std::string>> files{
        {out / "certificates.txt", bounds::certificate_report(rep.certificates, {0.0, cfg.z_star_nm})},
        {out / "report.txt", report_text(rep, cfg)}};
    if (cfg.frame.dim() == 2) files.emplace_back(out / "excitation.txt", excitation_table(excitation_grid(cfg)));
    for (const auto& [p, c] : files) {
      write_atomic(p, c);
      rep.files.push_back(p);
    }
    rep.files.push_back(out / "report.json");
    write_atomic(out / "report.json", report_json(rep, cfg));
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

std::string solution_table(const ExperimentConfig& cfg, const RunReport& rep) {
  std::ostringstream os;
  auto c11 = [](solver::complex v) {
    return fmt("%+.11f", v.real()) + " " + (v.imag() < 0 ? "- " : "+ ") + fmt("%.11f", std::abs(v.imag())) + "i";
  };
  os << "psi_g at z = " << fmt("%.6g", rep.z_end) << " nm, reference " << rep.reference << "\n";
  os << "set     ";
  for (const auto& g : cfg.report_modes) os << pad("mode " + g.str(), 34);
  os << " digits\n";
  for (std::size_t i = 0; i < rep.sets.size(); ++i) {
    os << pad(rep.sets[i].name, 8);
    for (const auto& v : rep.sets[i].modes_at_end) os << c11(v) << "  ";
    std::string digits = "-";
    for (const auto& c : rep.comparisons)
      if (c.name == rep.sets[i].name && !c.digits.empty())
        digits = std::to_string(*std::min_element(c.digits.begin(), c.digits.end()));
    os << digits << "\n";
  }
  return os.str();
}

std::string report_text(const RunReport& rep, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "config " << rep.config_name << " hash " << hex64(rep.config_hash) << "\n";
  os << "status " << (rep.ok ? "OK" : "FAILED") << "\n";
  for (const auto& f : rep.failures) os << "  failure: " << f << "\n";
  os << "\nset      beams  margin     flux_drift  energy_drift  seconds\n";
  for (const auto& s : rep.sets)
    os << pad(s.name, 9)
       << fmt("%5.0f", static_cast<double>(s.beams)) << "  " << fmt("%.6f", s.margin) << "  "
       << fmt("%.3e", s.flux_drift) << "   " << fmt("%.3e", s.energy_drift) << "    " << fmt("%.3f", s.seconds)
       << "\n";
  os << "\nrestricted error vs " << rep.reference << " (flux norm)\n";
  for (const auto& c : rep.comparisons)
    os << "  " << c.name << ": at z_end " << fmt("%.6e", c.error_at_end) << ", max " << fmt("%.6e", c.max_error)
       << "\n";
  if (rep.oracle_gap) os << "\noracle vs eigen path, max component gap " << fmt("%.3e", *rep.oracle_gap) << "\n";
  os << "\n" << solution_table(cfg, rep);
  os << "\ndominance (measured <= certificate at every z sample)\n";
  for (const auto& d : rep.dominance)
    os << "  " << (d.violations ? "VIOLATED " : "ok       ") << d.certificate << "  " << d.system
       << "  worst ratio " << fmt("%.3e", d.worst_ratio) << "\n";
  os << "\nelapsed " << fmt("%.3f", rep.seconds) << " s\n";
  return os.str();
}

std::string report_json(const RunReport& rep, const ExperimentConfig& cfg) {
  using nlohmann::ordered_json;
  // Non-finite numbers have no JSON form; they are written as strings.
  auto num = [](double x) -> ordered_json {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  };
  ordered_json j;
  j["config"] = rep.config_name;
  j["config_hash_fnv1a64"] = hex64(rep.config_hash);
  j["status"] = rep.ok ? "OK" : "FAILED";
  j["failures"] = rep.failures;
  j["reference"] = rep.reference;
  j["z_end_nm"] = rep.z_end;
  j["tolerances"] = {{"flux_rel", cfg.tolerances.flux_rel}, {"energy_rel", cfg.tolerances.energy_rel}};
  for (const auto& s : rep.sets) {
    ordered_json m = ordered_json::array();
    for (std::size_t i = 0; i < s.modes_at_end.size(); ++i)
      m.push_back({{"g", cfg.report_modes[i].str()}, {"re", s.modes_at_end[i].real()}, {"im", s.modes_at_end[i].imag()}});
    j["sets"].push_back({{"name", s.name},
                         {"descriptor", s.descriptor},
                         {"beams", s.beams},
                         {"margin", s.margin},
                         {"flux_drift", s.flux_drift},
                         {"energy_drift", s.energy_drift},
                         {"modes_at_end", m}});
  }
  j["comparisons"] = ordered_json::array();
  for (const auto& c : rep.comparisons)
    j["comparisons"].push_back({{"name", c.name},
                                {"error_at_end", c.error_at_end},
                                {"max_error", c.max_error},
                                {"digits", c.digits}});
  if (rep.oracle_gap) j["oracle_gap"] = *rep.oracle_gap;
  j["certificates"] = ordered_json::array();
  for (const auto& c : rep.certificates)
    j["certificates"].push_back({{"name", c.name},
                                 {"formula", c.formula},
                                 {"units", c.units},
                                 {"constant", num(c.constant)},
                                 {"slope", num(c.slope)},
                                 {"rate", num(c.rate)},
                                 {"cap", num(c.cap)},
                                 {"at_z_end", num(c(rep.z_end))}});
  j["dominance"] = ordered_json::array();
  for (const auto& d : rep.dominance)
    j["dominance"].push_back({{"system", d.system},
                              {"certificate", d.certificate},
                              {"samples", d.samples},
                              {"violations", d.violations},
                              {"worst_ratio", num(d.worst_ratio)},
                              {"max_measured", num(d.max_measured)}});
  return j.dump(2) + "\n";
}

}  // namespace dhw::harness
