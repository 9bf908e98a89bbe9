#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dhw/beamsel.hpp"
#include "dhw/error.hpp"

using namespace dhw;
using namespace dhw::beamsel;
using crystal::LatticeFrame;
using crystal::Vector;
using crystal::WaveVector;

namespace {

const double a0 = 0.56503;
const double step = 4 / a0;

LatticeFrame gaas_frame() { return LatticeFrame::rectangular({step, step}, a0); }

WaveVector vec2(double x, double z) {
  Vector k(2);
  k << x, z;
  return WaveVector(k);
}

WaveVector gaas_k0() { return vec2(-2 / a0, 608.293); }

bool subset(const BeamSet& a, const BeamSet& b) {
  return std::all_of(a.members().begin(), a.members().end(), [&](const auto& g) { return b.contains(g); });
}

}  // namespace

TEST_CASE("canonical order and invariants") {
  const BeamSet s({{1, 0}, {-1, 0}, {0, 0}, {0, -2}}, {"t", {}}, 0.5);
  CHECK(s.members() == std::vector<LatticeIndex>{{0, 0}, {-1, 0}, {0, -2}, {1, 0}});
  CHECK(s.index_of({1, 0}) == 3u);
  CHECK_FALSE(s.contains({5, 5}));
  CHECK_THROWS_AS(BeamSet({{1, 0}}, {"t", {}}, 0.5), ValidationError);
  CHECK_THROWS_AS(BeamSet({{0, 0}, {1, 0}, {1, 0}}, {"t", {}}, 0.5), ValidationError);
  CHECK_THROWS_AS(BeamSet({{0, 0}}, {"t", {}}, 0.0), ValidationError);
}

TEST_CASE("ball") {
  const auto f = gaas_frame();
  const auto k0 = gaas_k0();
  const auto b0 = g_ball(0.0, k0, f);
  CHECK(b0.size() == 1);
  CHECK(b0.gamma() == 1.0);

  const auto b = g_ball(2.2 * step, k0, f);
  std::size_t brute = 0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      if (i * i + j * j <= 2.2 * 2.2) ++brute;
  CHECK(b.size() == brute);
  CHECK(brute == 13);
  CHECK(validate(b, b.gamma(), k0, f).passed);

  CHECK_THROWS_AS(g_ball(1.5 * k0.norm(), k0, f), ValidationError);

  double prev = 0;
  for (double m = 0; m < 5; m += 0.37) {
    const auto small = g_ball(m * step, k0, f);
    const auto big = g_ball((m + 0.37) * step, k0, f);
    CHECK(subset(small, big));
    CHECK(static_cast<double>(small.size()) >= prev);
    prev = static_cast<double>(small.size());
  }
}

TEST_CASE("gamma-truncated set") {
  const auto f = gaas_frame();
  const auto k0 = gaas_k0();
  const auto full = box({-2, -2}, {3, 2}, k0, f);
  CHECK(full.size() == 30);
  const auto g = g_gamma_truncated(0.5, 3 * step, k0, f);
  // every point of the disc is admissible at gamma = 1/2 here
  CHECK(g.size() == crystal::dual_points(f, 3 * step).size());
  for (const auto& n : full.members())
    if (f.point(n).norm() <= 3 * step * (1 + 1e-12)) CHECK(g.contains(n));
  CHECK(subset(g_ball(2 * step, k0, f), g));

  const auto tight = g_gamma_truncated(0.999999, 3 * step, k0, f);
  CHECK(tight.contains({0, 0}));
  for (const auto& n : tight.members()) CHECK(n[1] >= 0);

  CHECK_THROWS_AS(g_gamma_truncated(1.0, step, k0, f), DomainError);
  CHECK_THROWS_AS(g_gamma_truncated(0.5, 0.0, k0, f), DomainError);
}

TEST_CASE("Ewald split") {
  const auto f = gaas_frame();
  const auto k0 = gaas_k0();
  const double radius = std::hypot(3, 2) * step;

  const auto sp = g_ewald(radius, 1.0, k0, f);
  // only the g_z = 0 row of the 30-beam box is near the sphere
  const auto full = box({-2, -2}, {3, 2}, k0, f);
  std::vector<LatticeIndex> near_in_box;
  for (const auto& n : full.members())
    if (sp.ewald.contains(n)) near_in_box.push_back(n);
  CHECK(near_in_box.size() == 6);
  for (const auto& n : near_in_box) CHECK(n[1] == 0);

  const auto ball = g_ball(radius, k0, f);
  CHECK(sp.ewald.size() + sp.far.size() == ball.size());
  for (const auto& n : sp.far) CHECK_FALSE(sp.ewald.contains(n));

  const auto all = g_ewald(radius, 1e9, k0, f);
  CHECK(all.ewald.members() == ball.members());
  CHECK(all.far.empty());

  const auto tiny = g_ewald(radius, 1e-6, k0, f);
  CHECK(tiny.ewald.contains({0, 0}));
  CHECK(tiny.ewald.contains({1, 0}));

  CHECK(subset(g_ewald(radius, 0.1, k0, f).ewald, g_ewald(radius, 0.3, k0, f).ewald));
}

TEST_CASE("LOLZ") {
  const auto cubic = LatticeFrame::rectangular({1.0, 1.0, 1.0}, 1.0);
  Vector k(3);
  k << 0, 0, 200;
  const WaveVector k0(k);
  const auto l = lolz(k0, cubic);
  CHECK(l.contains({0, 0, 0}));
  CHECK(l.gamma() == 1.0);
  const double r = std::sqrt(200.0 + 0.25);
  std::size_t brute = 0;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j)
      if (i * i + j * j <= r * r) ++brute;
  CHECK(l.size() == brute);
  CHECK(laue_zone_radius(cubic, k0, 0) == doctest::Approx(std::sqrt(200.0)));
  CHECK(laue_zone_radius(cubic, k0, 1) == doctest::Approx(std::sqrt(600.0)));

  k << 0, 0, 400;
  const auto l2 = lolz(WaveVector(k), cubic);
  std::size_t brute2 = 0;
  const double r2 = std::sqrt(400.0 + 0.25);
  for (int i = -30; i <= 30; ++i)
    for (int j = -30; j <= 30; ++j)
      if (i * i + j * j <= r2 * r2) ++brute2;
  CHECK(l2.size() == brute2);
  // radius grows by sqrt 2, point count roughly doubles in 3D
  CHECK(static_cast<double>(l2.size()) / static_cast<double>(l.size()) == doctest::Approx(2.0).epsilon(0.1));

  k << std::sqrt(2.0), std::sqrt(3.0), 200;
  CHECK_THROWS_AS(lolz(WaveVector(k), cubic), ValidationError);
}

TEST_CASE("systematic row") {
  const auto f = gaas_frame();
  const auto k0 = gaas_k0();
  const LatticeIndex ghat{1, 0};
  const auto two = systematic_row(ghat, 0, 1, k0, f);
  CHECK(two.members() == std::vector<LatticeIndex>{{0, 0}, {1, 0}});
  const auto g2 = systematic_row(ghat, -1, 2, k0, f);
  CHECK(g2.members() == std::vector<LatticeIndex>{{0, 0}, {-1, 0}, {1, 0}, {2, 0}});
  CHECK(systematic_row(ghat, 0, 0, k0, f).size() == 1);
  CHECK_THROWS_AS(systematic_row(ghat, 1, 3, k0, f), ValidationError);
  CHECK_THROWS_AS(systematic_row({0, 0}, -1, 1, k0, f), ValidationError);
}

TEST_CASE("threshold selection") {
  // Row lattice with step 2/a0; odd multiples carry no potential.
  const auto f = LatticeFrame::rectangular({2 / a0, 2 / a0}, a0);
  std::vector<std::pair<LatticeIndex, potential::complex>> e{{{0, 0}, 10.0}};
  for (int j = 1; j <= 8; ++j) e.push_back({{j, 0}, j % 2 ? 0.0 : 3.0 / j});
  e.push_back({{0, 1}, 2.0});
  const auto pot = potential::from_coefficients(f, e);

  // With k_y = -2/a0 the row index j has s_j proportional to j(2-j), so on
  // the even sublattice j = 2m the cut |s| < 144 units (between the values
  // 120 at m = -5, 6 and 168 at m = -6, 7) keeps m in -5..6.
  const auto k0 = gaas_k0();
  const double unit = (2 / a0) * (2 / a0) / (2 * 608.293);
  const auto sel = threshold_select(pot, 0.1, 144 * unit, k0, f);
  std::vector<LatticeIndex> want;
  for (int m = -5; m <= 6; ++m) want.push_back({2 * m, 0});
  canonical_sort(want);
  CHECK(sel.members() == want);
  CHECK(sel.size() == 12);

  const auto all = threshold_select(pot, 0.0, std::numeric_limits<double>::infinity(), k0, f, 10 * (2 / a0));
  CHECK(all.size() == 21);  // u_min = 0 keeps the stored zeros, hence the full row
  for (const auto& n : all.members()) CHECK(n[1] == 0);

  CHECK_THROWS_AS(threshold_select(pot, 0.0, std::numeric_limits<double>::infinity(), k0, f), DomainError);
}

TEST_CASE("validation report") {
  const auto f = gaas_frame();
  const auto k0 = gaas_k0();
  const auto r0 = validate(std::vector<LatticeIndex>{{0, 0}}, 0.9, k0, f);
  CHECK(r0.passed);
  CHECK(r0.margin == 1.0);

  const auto full = box({-2, -2}, {3, 2}, k0, f);
  const auto r = validate(full, 0.5, k0, f);
  CHECK(r.passed);
  double min_rho = 1e300;
  for (const auto& n : full.members()) min_rho = std::min(min_rho, crystal::beam_geometry(n, k0, f).rho);
  CHECK(min_rho >= 594.0);
  CHECK(r.margin == doctest::Approx(min_rho / 608.293));

  const int deep = -static_cast<int>(std::ceil(608.293 / step)) - 1;
  const auto bad = validate(std::vector<LatticeIndex>{{0, 0}, {0, deep}}, 0.5, k0, f);
  CHECK_FALSE(bad.passed);
  CHECK(bad.violators.size() == 1);
  CHECK(bad.margin < 0);

  const auto dup = validate(std::vector<LatticeIndex>{{0, 0}, {1, 0}, {1, 0}}, 0.5, k0, f);
  CHECK_FALSE(dup.passed);
  CHECK_FALSE(validate(std::vector<LatticeIndex>{{1, 0}}, 0.5, k0, f).passed);

  for (const auto& s : {g_ball(2 * step, k0, f), g_gamma_truncated(0.5, 2 * step, k0, f),
                        g_ewald(3 * step, 1.0, k0, f).ewald, systematic_row({1, 0}, -2, 3, k0, f)})
    CHECK(validate(s, s.gamma(), k0, f).passed);
}

TEST_CASE("text table") {
  const auto f = gaas_frame();
  const auto k0 = gaas_k0();
  const auto t = to_table(systematic_row({1, 0}, 0, 1, k0, f), k0, f);
  CHECK(t.find("systematic_row") != std::string::npos);
  CHECK(std::count(t.begin(), t.end(), '\n') == 4);
}
