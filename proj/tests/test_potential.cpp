#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "dhw/error.hpp"
#include "dhw/potential.hpp"

using namespace dhw;
using namespace dhw::potential;
using crystal::LatticeFrame;

namespace {

const double a0 = 0.56503;

FourierPotential gaas_potential() {
  const auto f = LatticeFrame::rectangular({4 / a0, 4 / a0}, a0);
  return from_coefficients(f, {{{0, 0}, 10.0},
                               {{1, 0}, 3.0},
                               {{0, 1}, 3.0},
                               {{1, 1}, 2.0},
                               {{1, -1}, 2.0}});
}

// Plain double sum over a box, independent of the library's shell logic.
double brute_sum_2d(int m, double beta, double h1, double h2, int n) {
  long double s = 0;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const double r = std::hypot(i * h1, j * h2);
      s += std::pow(r, m) * std::exp(-beta * r);
    }
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("Hermitian completion") {
  const auto f = LatticeFrame::rectangular({1.0, 1.0}, 1.0);
  const auto p = from_coefficients(f, {{{1, 0}, complex(0, 1)}});
  CHECK(p.at({-1, 0}) == complex(0, -1));
  CHECK(p.at({5, 5}) == complex(0, 0));
  CHECK(p.hermitian_residual() == 0.0);

  CHECK_THROWS_AS(from_coefficients(f, {{{1, 0}, complex(1, 1)}, {{-1, 0}, complex(1, 1)}}),
                  ValidationError);
  CHECK_THROWS_AS(from_coefficients(f, {{{1, 0}, 1.0}, {{1, 0}, 1.0}}), ValidationError);
  // consistent explicit partner is fine
  CHECK_NOTHROW(from_coefficients(f, {{{1, 0}, complex(1, 1)}, {{-1, 0}, complex(1, -1)}}));
}

TEST_CASE("GaAs potential has the nine listed coefficients") {
  const auto p = gaas_potential();
  CHECK(p.size() == 9);
  CHECK(p.at({0, 0}) == 10.0);
  CHECK(p.at({-1, 0}) == 3.0);
  CHECK(p.at({0, -1}) == 3.0);
  CHECK(p.at({-1, -1}) == 2.0);
  CHECK(p.at({-1, 1}) == 2.0);
  CHECK(p.at({2, 0}) == 0.0);
}

TEST_CASE("random constructions stay Hermitian") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> idx(-4, 4);
  std::normal_distribution<double> val;
  const auto f = LatticeFrame::rectangular({1.0, 1.3, 0.7}, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::pair<LatticeIndex, complex>> e;
    std::set<LatticeIndex> used;
    for (int k = 0; k < 10; ++k) {
      LatticeIndex g{idx(rng), idx(rng), idx(rng)};
      if (used.count(g) || used.count(-g)) continue;
      used.insert(g);
      e.emplace_back(g, g.is_zero() ? complex(val(rng), 0) : complex(val(rng), val(rng)));
    }
    const auto p = from_coefficients(f, e);
    for (const auto& [g, u] : p.coefficients()) CHECK(p.at(-g) == std::conj(u));
  }
}

TEST_CASE("atomic model") {
  const auto f3 = LatticeFrame::rectangular({1.0, 1.0, 1.0}, 1.0);
  SUBCASE("flat form factor at the origin") {
    const auto p = from_atoms({{{0, 0, 0}, form_factors::constant(2.0), 0.0, "X"}}, f3, 2.5, 1.5);
    for (const auto& [g, u] : p.coefficients()) CHECK(u == complex(3.0, 0.0));
  }
  SUBCASE("Debye-Waller damping") {
    const double m = 0.05;
    const auto p = from_atoms({{{0, 0, 0}, form_factors::constant(1.0), m, "X"}}, f3, 3.0, 1.0);
    for (const auto& [g, u] : p.coefficients()) {
      const double g2 = f3.point(g).squaredNorm();
      CHECK(u.real() == doctest::Approx(std::exp(-m * g2)).epsilon(1e-14));
    }
    CHECK(std::abs(p.at({1, 0, 0})) > std::abs(p.at({1, 1, 0})));
    CHECK(std::abs(p.at({1, 1, 0})) > std::abs(p.at({2, 0, 0})));
  }
  SUBCASE("body-centred extinction") {
    const auto ff = form_factors::constant(1.0);
    const auto p = from_atoms({{{0, 0, 0}, ff, 0.0, "A"}, {{0.5, 0.5, 0.5}, ff, 0.0, "B"}}, f3, 3.0,
                              1.0);
    for (const auto& [g, u] : p.coefficients()) {
      // brute-force phase sum: 1 + (-1)^(h+k+l)
      const int parity = ((g[0] + g[1] + g[2]) % 2 + 2) % 2;
      CHECK(std::abs(u - complex(parity ? 0.0 : 2.0, 0.0)) < 1e-14);
    }
  }
  SUBCASE("translation changes phases only") {
    const auto ff = form_factors::element("As");
    const auto p = from_atoms({{{0.1, 0.2, 0.3}, ff, 0.003, "As"}}, f3, 3.0, 1.0);
    const auto q = from_atoms({{{0.35, 0.6, 0.0}, ff, 0.003, "As"}}, f3, 3.0, 1.0);
    for (const auto& [g, u] : p.coefficients()) CHECK(std::abs(u) == doctest::Approx(std::abs(q.at(g))));
    CHECK(p.hermitian_residual() <= hermitian_tolerance);
  }
  SUBCASE("non-even form factor rejected") {
    FormFactor odd = [](const crystal::Vector& g) { return complex(1.0 + g(0), 0.0); };
    CHECK_THROWS_AS(from_atoms({{{0, 0, 0}, odd, 0.0, "bad"}}, f3, 2.0, 1.0), ValidationError);
    FormFactor cplx = [](const crystal::Vector&) { return complex(1.0, 0.5); };
    CHECK_THROWS_AS(from_atoms({{{0, 0, 0}, cplx, 0.0, "bad"}}, f3, 2.0, 1.0), ValidationError);
  }
  CHECK_THROWS_AS(from_atoms({}, f3, 2.0, 1.0), ValidationError);
  CHECK_THROWS_AS(form_factors::element("Xx"), ValidationError);
}

TEST_CASE("decay envelope") {
  SUBCASE("exact exponential data is recovered") {
    const auto row = LatticeFrame::rectangular({0.7}, 1.0);
    const double c = 4.2, alpha = 0.31;
    std::vector<std::pair<LatticeIndex, complex>> e;
    for (int n = 0; n <= 6; ++n) e.push_back({{n}, c * std::exp(-alpha * 0.7 * n)});
    const auto env = fit_decay(from_coefficients(row, e));
    CHECK(env.c == doctest::Approx(c).epsilon(1e-9));
    CHECK(env.alpha == doctest::Approx(alpha).epsilon(1e-9));
  }
  SUBCASE("GaAs coefficients") {
    const auto p = gaas_potential();
    const auto env = fit_decay(p);
    CHECK(env.c >= 10.0);
    CHECK(env.alpha > 0.0);
    for (const auto& [g, u] : p.coefficients())
      CHECK(std::abs(u) <= env.c * std::exp(-env.alpha * p.frame().point(g).norm()));
    const auto wider = envelope_for_rate(p, env.alpha / 2);
    CHECK(is_majorant(p, wider));
    CHECK(wider.c <= env.c);
  }
  SUBCASE("GaAs form factors sit near the quoted envelope") {
    const double a = 0.56533;
    const auto fcc = LatticeFrame::rectangular({1 / a, 1 / a, 1 / a}, a);
    std::vector<AtomSite> sites;
    const double fcc_pos[4][3] = {{0, 0, 0}, {0, .5, .5}, {.5, 0, .5}, {.5, .5, 0}};
    for (const auto& x : fcc_pos) {
      sites.push_back({{x[0], x[1], x[2]}, form_factors::element("Ga"), 0.0, "Ga"});
      sites.push_back({{x[0] + .25, x[1] + .25, x[2] + .25}, form_factors::element("As"), 0.0, "As"});
    }
    // Scale chosen so that U_0 is about 10 nm^-2.
    auto p = from_atoms(sites, fcc, 12.0, 1.0);
    const double s = 10.0 / p.at({0, 0, 0}).real();
    p = from_atoms(sites, fcc, 12.0, s);
    const auto env = envelope_for_rate(p, 0.125);
    CHECK(env.c >= 10.1 / 2);
    CHECK(env.c <= 10.1 * 2);
  }
  SUBCASE("degenerate inputs") {
    const auto row = LatticeFrame::rectangular({1.0}, 1.0);
    CHECK_THROWS_AS(fit_decay(from_coefficients(row, {{{0}, 1.0}})), DomainError);
    CHECK_THROWS_AS(fit_decay(from_coefficients(row, {{{0}, 1.0}, {{1}, 2.0}})), DomainError);
  }
}

TEST_CASE("lattice sums") {
  SUBCASE("1D closed form") {
    const auto z = LatticeFrame::rectangular({1.0}, 1.0);
    for (double beta : {0.05, 0.3, 1.0, 4.0}) {
      const double q = std::exp(-beta);
      CHECK(std::abs(lattice_sum(0, beta, z) - (1 + q) / (1 - q)) <= 1e-10);
      // S_1 = 2 sum n q^n = 2q/(1-q)^2
      CHECK(std::abs(lattice_sum(1, beta, z) - 2 * q / ((1 - q) * (1 - q))) <= 1e-10);
    }
  }
  SUBCASE("2D brute force") {
    const auto sq = LatticeFrame::rectangular({1.0, 1.0}, 1.0);
    CHECK(std::abs(lattice_sum(0, 1.0, sq) - brute_sum_2d(0, 1.0, 1, 1, 60)) <= 1e-10);
    CHECK(std::abs(lattice_sum(1, 1.0, sq) - brute_sum_2d(1, 1.0, 1, 1, 60)) <= 1e-10);
    CHECK(std::abs(lattice_sum(2, 0.7, sq) - brute_sum_2d(2, 0.7, 1, 1, 90)) <= 1e-10);
    const auto rect = LatticeFrame::rectangular({0.8, 1.9}, 1.0);
    CHECK(std::abs(lattice_sum(0, 0.5, rect) - brute_sum_2d(0, 0.5, 0.8, 1.9, 150)) <= 1e-10);
  }
  SUBCASE("limits and monotonicity") {
    const auto sq = LatticeFrame::rectangular({1.0, 1.0}, 1.0);
    CHECK(lattice_sum(0, 80.0, sq) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lattice_sum(1, 80.0, sq) < 1e-30);
    double prev = 1e300;
    for (double beta = 0.2; beta < 10; beta *= 1.4) {
      const double s = lattice_sum(0, beta, sq);
      CHECK(s >= 1.0);
      CHECK(s < prev);
      prev = s;
    }
    CHECK_THROWS_AS(lattice_sum(0, 0.0, sq), DomainError);
    CHECK_THROWS_AS(lattice_sum(0, -1.0, sq), DomainError);
    CHECK_THROWS_AS(lattice_sum(3, 1.0, sq), DomainError);
  }
}
