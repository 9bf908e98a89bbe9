#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "dhw/error.hpp"
#include "dhw/harness.hpp"

using namespace dhw;
using namespace dhw::harness;
namespace fs = std::filesystem;

namespace {

const fs::path configs = DHW_CONFIG_DIR;
const double a0 = 0.56503;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dhw_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string minimal(const std::string& extra) {
  return R"({"lattice": {"dimension": 2, "a0_nm": 0.5, "step_over_a0": 2},
             "incidence": {"k0_normal_inv_nm": 300},
             "thickness": {"z_star_nm": 10},
             "potential": {"coefficients_inv_nm2": [{"g": [0, 0], "re": 1}, {"g": [1, 0], "re": 0.5}]},
             "beam_sets": [{"name": "a", "rule": "row", "g_hat": [1, 0], "n_min": -1, "n_max": 1}])" +
         extra + "}";
}

}  // namespace

TEST_CASE("FNV-1a") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("config loading") {
  const auto cfg = load_config(configs / "gaas_400kv.json");
  CHECK(cfg.name == "gaas_400kv");
  CHECK(cfg.k0.components()(0) == doctest::Approx(-2 / a0).epsilon(1e-15));
  CHECK(cfg.k0.components()(1) == 608.293);
  CHECK(cfg.frame.reference_length() == a0);
  CHECK(cfg.z_samples == 512);
  CHECK(cfg.gamma == 0.5);
  CHECK(cfg.potential.size() == 9);
  const auto sets = build_beam_sets(cfg);
  REQUIRE(sets.size() == 5);
  const std::vector<std::size_t> sizes{30, 2, 4, 6, 18};
  for (std::size_t i = 0; i < 5; ++i) CHECK(sets[i].set.size() == sizes[i]);

  const auto again = load_config(configs / "gaas_400kv.json");
  CHECK(again.hash == cfg.hash);
  CHECK(parse_config(minimal(""), ".").hash != parse_config(minimal(R"(, "name": "x")"), ".").hash);

  CHECK_THROWS_AS(parse_config(minimal(R"(, "z_star": 3)"), "."), ValidationError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "bounds": {"gamma": 1.5})"), "."), ValidationError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "reference": "nope")"), "."), ValidationError);
  CHECK_THROWS_AS(parse_config("{not json", "."), ValidationError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "name": 3)"), "."), ValidationError);
  CHECK_THROWS_AS(load_config(configs / "missing.json"), ValidationError);
  const std::string bad_env = R"({"lattice": {"dimension": 2, "a0_nm": 0.5, "step_over_a0": 2},
      "incidence": {"k0_normal_inv_nm": 300}, "thickness": {"z_star_nm": 10},
      "potential": {"coefficients_inv_nm2": [{"g": [0, 0], "re": 1}], "envelope": {"c_inv_nm2": 0.5, "alpha_nm": 1}},
      "beam_sets": [{"name": "a", "rule": "ball", "radius_inv_nm": 0}]})";
  CHECK_THROWS_AS(parse_config(bad_env, "."), ValidationError);

  const auto kv = parse_config(R"({"lattice": {"dimension": 2, "a0_nm": 0.5, "step_over_a0": 2},
      "incidence": {"voltage_kv": 400, "k0_transverse_dual": [0.25]}, "thickness": {"z_star_nm": 10},
      "potential": {"coefficients_inv_nm2": [{"g": [0, 0], "re": 1}, {"g": [1, 0], "re": 0.5}]},
      "beam_sets": [{"name": "a", "rule": "ball", "radius_inv_nm": 0}]})",
                               ".");
  CHECK(kv.k0.norm() == doctest::Approx(crystal::relativistic_params(400).wave_number).epsilon(1e-14));
  CHECK(kv.k0.components()(0) == doctest::Approx(1.0));
}

TEST_CASE("significant digits") {
  using C = solver::complex;
  const C g00{-0.16444251537, -0.06764807576}, g10{0.37791412093, -0.90774682391};
  CHECK(significant_digits(g00, g00) >= 11);
  CHECK(significant_digits({-0.16153606468, -0.07740830300}, g00) == 1);
  CHECK(significant_digits({0.42515771142, -0.88721717658}, g10) == 1);
  CHECK(significant_digits({-0.16446909478, -0.06766454587}, g00) == 4);
  CHECK(significant_digits({-0.16445260546, -0.06764875833}, g00) == 4);
  CHECK(significant_digits({0.37789496977, -0.90775362575}, g10) == 4);
  CHECK(significant_digits({-0.16444252690, -0.06764808597}, g00) == 7);
  CHECK(significant_digits({0.37791410830, -0.90774683865}, g10) == 7);
  CHECK_THROWS_AS(significant_digits(g00, C{}), ValidationError);

  // a relative perturbation of 10^-k never leaves more than k+1 digits (|b| in [0.1, 1))
  for (int k = 2; k <= 12; ++k)
    for (const C b : {g00 * 2.0, g10, C{0.5, 0.25}, C{-0.9, 0.11}}) {
      const C a{b.real() * (1 + std::pow(10.0, -k)), b.imag()};
      CHECK(significant_digits(a, b) <= k + 1);
    }
}

TEST_CASE("excitation table") {
  const auto grid = excitation_grid(load_config(configs / "gaas_400kv.json"));
  REQUIRE(grid.rows.size() == 5);
  REQUIRE(grid.cols.size() == 6);
  const std::vector<double> middle{0.25, 0.08, 0, 0, 0.08, 0.25};
  for (std::size_t c = 0; c < 6; ++c) CHECK(std::abs(std::abs(grid.s[2][c]) - middle[c]) <= 0.01);
  CHECK(grid.s[2][2] == 0.0);
  CHECK(grid.s[2][3] == 0.0);
  CHECK(std::abs(std::abs(grid.s[0][0]) - 14.07) <= 0.01);
  const auto t = excitation_table(grid);
  CHECK(t.find("14.07") != std::string::npos);
  CHECK(t.find("sign note") != std::string::npos);
}

TEST_CASE("reference run") {
  const auto cfg = load_config(configs / "gaas_400kv.json");
  const auto out = scratch("gaas");
  RunOptions opt;
  opt.out_dir = out;
  opt.oracle_tol = 1e-10;
  const auto rep = run(cfg, opt);
  CHECK(rep.ok);
  CHECK(rep.reference == "G");
  REQUIRE(rep.comparisons.size() == 4);
  // row minimum over the two reported modes
  const std::vector<int> ladder{1, 4, 4};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& d = rep.comparisons[i].digits;
    CHECK(*std::min_element(d.begin(), d.end()) == ladder[i]);
  }
  for (int d : rep.comparisons[3].digits) CHECK(d >= 7);
  REQUIRE(rep.oracle_gap);
  CHECK(*rep.oracle_gap < 1e-6);
  for (const auto& s : rep.sets) {
    CHECK(s.flux_drift <= 1e-10);
    CHECK(s.energy_drift <= 1e-9);
  }
  CHECK(rep.dominance.size() == 6 + 8 + 6);
  for (const auto& d : rep.dominance) {
    INFO(d.system << " " << d.certificate);
    CHECK(d.violations == 0);
    CHECK(d.samples == 513);
  }
  for (const auto& f : rep.files) CHECK(fs::exists(f));
  CHECK(fs::exists(out / "psi_G.csv"));
  CHECK(fs::exists(out / "report.json"));
  for (const auto& e : fs::directory_iterator(out)) CHECK(e.path().extension() != ".tmp");
  CHECK(slurp(out / "report.json").find(hex64(cfg.hash)) != std::string::npos);

  // endpoint snapshot: the four strongest beams are the central row -1..2
  const auto& sol = rep.solutions[0];
  std::vector<std::pair<double, LatticeIndex>> amp;
  for (std::size_t i = 0; i < sol.system->size(); ++i)
    amp.emplace_back(std::abs(sol.psi(static_cast<Eigen::Index>(i), sol.psi.cols() - 1)),
                     sol.system->beams().members()[i]);
  std::sort(amp.rbegin(), amp.rend());
  std::vector<LatticeIndex> top{amp[0].second, amp[1].second, amp[2].second, amp[3].second};
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<LatticeIndex>{{-1, 0}, {0, 0}, {1, 0}, {2, 0}});

  // determinism
  const auto out2 = scratch("gaas2");
  opt.out_dir = out2;
  opt.oracle_tol.reset();
  run(cfg, opt);
  for (const auto* f : {"psi_G.csv", "psi_G3.csv", "amplitude_G4.csv", "snapshot_G.csv"})
    CHECK(slurp(out / f) == slurp(out2 / f));
}

TEST_CASE("violated tolerance marks the run failed") {
  auto cfg = parse_config(minimal(R"(, "tolerances": {"flux_rel": 1e-300, "energy_rel": 1e-300})"), ".");
  RunOptions opt;
  opt.write_files = false;
  opt.z_samples = 50;
  const auto rep = run(cfg, opt);
  CHECK_FALSE(rep.ok);
  CHECK_FALSE(rep.failures.empty());
}

TEST_CASE("free beam") {
  const auto cfg = load_config(configs / "free_beam.json");
  RunOptions opt;
  opt.write_files = false;
  const auto rep = run(cfg, opt);
  CHECK(rep.ok);
  const auto& sol = rep.solutions[0];
  double worst = 0;
  for (Eigen::Index k = 0; k < sol.psi.cols(); ++k) worst = std::max(worst, std::abs(std::abs(sol.psi(0, k)) - 1));
  CHECK(worst <= 1e-13);
  const auto plot = amplitude_plot_data(sol);
  CHECK(std::count(plot.series.begin(), plot.series.end(), '\n') == 202);
}

TEST_CASE("two-beam beating") {
  const auto cfg = load_config(configs / "two_beam.json");
  RunOptions opt;
  opt.write_files = false;
  const auto rep = run(cfg, opt);
  CHECK(rep.ok);
  const auto& sol = rep.solutions[0];
  for (Eigen::Index k = 0; k < sol.psi.cols(); ++k)
    CHECK(std::norm(sol.psi(0, k)) + std::norm(sol.psi(1, k)) == doctest::Approx(1.0).epsilon(1e-12));

  // I_0 first vanishes at half the period rho0 / |U_g|
  const auto& sys = *sol.system;
  const double period = 608.293 / 3.0;
  auto i0 = [&](double z) { return std::norm(sys.propagate(sys.delta(), z)(0)); };
  const auto [zmin, fmin] = boost::math::tools::brent_find_minima(i0, 0.3 * period, 0.7 * period, 40);
  CHECK(fmin < 1e-14);
  CHECK(2 * zmin == doctest::Approx(period).epsilon(1e-6));

  // z = 0 snapshot: one nonzero bubble
  solver::Solution first{sol.system, {0.0}, sol.psi.leftCols(1)};
  const auto snap = amplitude_plot_data(first).snapshot;
  CHECK(snap.find("0,0,1\n") != std::string::npos);
  CHECK(snap.find("1,0,0\n") != std::string::npos);
}

TEST_CASE("randomized suite") {
  const auto r = randomized_suite(11, 4, 64);
  CHECK(r.conservation.size() == 4);
  for (const auto& c : r.conservation) {
    CHECK(c.beams <= 16);
    CHECK(c.flux_drift <= 1e-10);
    CHECK(c.energy_drift <= 1e-9);
  }
  for (const auto& l : r.lemma) CHECK(l.violations == 0);
  for (const auto& d : r.dominance) {
    INFO(d.system << " " << d.certificate);
    CHECK(d.violations == 0);
  }
  const auto again = randomized_suite(11, 4, 64);
  REQUIRE(again.dominance.size() == r.dominance.size());
  for (std::size_t i = 0; i < r.dominance.size(); ++i) CHECK(again.dominance[i].max_measured == r.dominance[i].max_measured);
}

TEST_CASE("atomic write") {
  const auto dir = scratch("atomic");
  write_atomic(dir / "sub" / "x.txt", "hello");
  CHECK(slurp(dir / "sub" / "x.txt") == "hello");
  write_atomic(dir / "sub" / "x.txt", "bye");
  CHECK(slurp(dir / "sub" / "x.txt") == "bye");
  CHECK_FALSE(fs::exists(dir / "sub" / "x.txt.tmp"));
}
