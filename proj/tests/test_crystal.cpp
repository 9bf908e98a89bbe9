#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "dhw/crystal.hpp"
#include "dhw/error.hpp"

using namespace dhw;
using namespace dhw::crystal;

namespace {

const double a0 = 0.56503;

LatticeFrame gaas_frame() { return LatticeFrame::rectangular({4.0 / a0, 4.0 / a0}, a0); }

WaveVector gaas_k0() {
  Vector k(2);
  k << -2.0 / a0, 608.293;
  return WaveVector(k);
}

}  // namespace

TEST_CASE("relativistic parameters match the tabulated voltages") {
  struct Row {
    double kv, k0, gamma, beta;
  };
  // wave number, mass ratio, velocity ratio at 100..400 kV
  const Row rows[] = {{100, 270.165, 1.196, 0.548},
                      {200, 398.734, 1.391, 0.695},
                      {300, 507.937, 1.587, 0.777},
                      {400, 608.293, 1.783, 0.828}};
  for (const auto& r : rows) {
    const auto p = relativistic_params(r.kv);
    CHECK(std::abs(p.wave_number / r.k0 - 1) <= 1e-3);
    CHECK(std::abs(p.gamma / r.gamma - 1) <= 1e-3);
    CHECK(std::abs(p.beta / r.beta - 1) <= 1e-3);
    CHECK(p.wave_number * p.wavelength_pm * 1e-3 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.beta == doctest::Approx(std::sqrt(1 - 1 / (p.gamma * p.gamma))).epsilon(1e-12));
  }
}

TEST_CASE("relativistic parameters: monotone, rest limit, domain") {
  double prev = 0.0;
  for (double e = 1; e <= 1000; e *= 1.5) {
    const auto p = relativistic_params(e);
    CHECK(p.wave_number > prev);
    prev = p.wave_number;
  }
  const auto slow = relativistic_params(1e-9);
  CHECK(slow.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(slow.beta < 1e-5);
  CHECK(slow.beta > 0.0);
  CHECK_THROWS_AS(relativistic_params(0.0), DomainError);
  CHECK_THROWS_AS(relativistic_params(-5.0), DomainError);
}

TEST_CASE("frame invariants") {
  const auto f = gaas_frame();
  CHECK(f.dim() == 2);
  CHECK(f.normal() == Vector::Unit(2, 1));
  CHECK(f.min_spacing() == doctest::Approx(4.0 / a0));

  Eigen::MatrixXd skew(2, 2);
  skew << 1.0, 0.9, 0.0, 0.2;
  const LatticeFrame s(skew, 1.0);
  // brute force over a box big enough to contain the shortest vector
  double best = 1e300;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j)
      if (i || j) best = std::min(best, s.point({i, j}).norm());
  CHECK(s.min_spacing() == doctest::Approx(best).epsilon(1e-14));

  Eigen::MatrixXd dep(2, 2);
  dep << 1.0, 2.0, 1.0, 2.0;
  CHECK_THROWS_AS(LatticeFrame(dep, 1.0), ValidationError);
}

TEST_CASE("wave vector must enter the crystal") {
  Vector k(2);
  k << 1.0, -1.0;
  CHECK_THROWS_AS(WaveVector{k}, ValidationError);
  k << 3.0, 4.0;
  CHECK(WaveVector(k).norm() == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("beam geometry in the GaAs setup") {
  const auto f = gaas_frame();
  const auto k0 = gaas_k0();

  const auto b0 = beam_geometry(LatticeIndex{0, 0}, k0, f);
  CHECK(b0.sigma == 0.0);
  CHECK(b0.s.value() == 0.0);
  CHECK(b0.rho == 608.293);
  CHECK(b0.ewald_dist == 0.0);

  const auto strong = beam_geometry(LatticeIndex{1, 0}, k0, f);
  CHECK(std::abs(strong.sigma) < 1e-10);
  CHECK(strong.ewald_dist < 1e-10);

  const auto up = beam_geometry(LatticeIndex{0, 1}, k0, f);
  CHECK(std::abs(*up.s) == doctest::Approx(7.04).epsilon(0.01 / 7.04));
  // the defining formula gives a negative value here
  CHECK(*up.s < 0.0);
}

TEST_CASE("ewald distance special points") {
  const auto k0 = gaas_k0();
  CHECK(ewald_distance(Vector::Zero(2), k0) == 0.0);
  CHECK(ewald_distance(-2.0 * k0.components(), k0) < 1e-10);
}

TEST_CASE("rho vanishing leaves s undefined") {
  Vector k(2);
  k << 0.0, 5.0;
  Vector g(2);
  g << 1.0, -5.0;
  const auto b = beam_geometry(g, WaveVector(k));
  CHECK(b.rho == 0.0);
  CHECK_FALSE(b.s.has_value());
}

TEST_CASE("random beams: algebraic identities") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const auto k0 = gaas_k0();
  for (int t = 0; t < 1000; ++t) {
    Vector g(2);
    g << u(rng), u(rng);
    const auto b = beam_geometry(g, k0);
    const double direct = k0.norm() * k0.norm() - (k0.components() + g).squaredNorm();
    CHECK(std::abs(b.sigma - direct) <= 1e-10 * std::max(1.0, std::abs(direct)) + 1e-9);
    const double e = b.ewald_dist;
    CHECK(std::abs(b.sigma) <= (2 * k0.norm() * e + e * e) * (1 + 1e-12));
    CHECK((b.sigma == 0.0) == (e == 0.0));
    const auto neg = beam_geometry(Vector(-g), k0);
    CHECK(b.rho + neg.rho == doctest::Approx(2 * k0.normal_component()).epsilon(1e-14));
    if (b.s) CHECK(*b.s == doctest::Approx(b.sigma / (2 * b.rho)).epsilon(1e-15));
  }
}

TEST_CASE("dual points") {
  const auto unit = LatticeFrame::rectangular({1.0, 1.0}, 1.0);
  CHECK(dual_points(unit, 0.0) == std::vector<LatticeIndex>{{0, 0}});
  CHECK(dual_points(unit, 1.0).size() == 5);

  std::size_t brute = 0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      if (i * i + j * j <= 2.1 * 2.1) ++brute;
  CHECK(brute == 13);
  const auto pts = dual_points(unit, 2.1);
  CHECK(pts.size() == brute);
  CHECK(std::is_sorted(pts.begin(), pts.end()));

  const std::set<LatticeIndex> set(pts.begin(), pts.end());
  for (const auto& p : pts) CHECK(set.count(-p) == 1);
  CHECK(set.count(LatticeIndex{0, 0}) == 1);

  CHECK_THROWS_AS(dual_points(unit, -1.0), DomainError);
}
