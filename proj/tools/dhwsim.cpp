// dhwsim: command-line front end of the experiment harness.
//
// Exit codes: 0 ok, 1 validation error, 2 numeric failure, 3 invariant violation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dhw/error.hpp"
#include "dhw/harness.hpp"

namespace {

using namespace dhw;
namespace fs = std::filesystem;

struct Args {
  std::string config;
  std::optional<std::string> out;
  std::optional<int> zsamples;
  std::optional<double> tol;
  std::uint64_t seed = 1;
};

harness::RunOptions options(const Args& a, bool write) {
  harness::RunOptions o;
  if (a.out) o.out_dir = fs::path(*a.out);
  o.z_samples = a.zsamples;
  o.oracle_tol = a.tol;
  o.write_files = write;
  return o;
}

int simulate(const Args& a) {
  const auto cfg = harness::load_config(a.config);
  const auto rep = harness::run(cfg, options(a, true));
  std::cout << harness::report_text(rep, cfg);
  std::cout << "wrote " << rep.files.size() << " files to " << (a.out ? fs::path(*a.out) : cfg.output_dir).string()
            << "\n";
  return rep.ok ? 0 : 3;
}

int beams(const Args& a) {
  const auto cfg = harness::load_config(a.config);
  for (const auto& s : harness::build_beam_sets(cfg)) {
    const auto table = beamsel::to_table(s.set, cfg.k0, cfg.frame);
    std::cout << "## " << s.name << " (" << s.set.size() << " beams)\n" << table << "\n";
    if (a.out) harness::write_atomic(fs::path(*a.out) / ("beams_" + s.name + ".txt"), table);
  }
  return 0;
}

int bounds_cmd(const Args& a) {
  const auto cfg = harness::load_config(a.config);
  const auto certs = harness::certificates(cfg);
  const auto text = bounds::certificate_report(certs, {0.0, cfg.z_star_nm});
  std::cout << text;

  const auto rep = harness::run(cfg, options(a, false));
  const auto suite = harness::randomized_suite(a.seed, 20, a.zsamples.value_or(512));
  std::size_t checked = 0, violated = 0;
  std::string log;
  auto tally = [&](const std::vector<harness::DominanceRecord>& recs) {
    for (const auto& d : recs) {
      ++checked;
      if (d.violations) {
        ++violated;
        log += "VIOLATED " + d.certificate + " on " + d.system + "\n";
      }
    }
  };
  tally(rep.dominance);
  tally(suite.dominance);
  std::cout << "dominance: " << checked << " certificate checks (config + " << suite.conservation.size()
            << " random systems, seed " << a.seed << "), " << violated << " violated\n"
            << log;
  if (a.out) {
    harness::write_atomic(fs::path(*a.out) / "certificates.txt", text);
    harness::write_atomic(fs::path(*a.out) / "dominance.json", harness::report_json(rep, cfg));
  }
  return violated ? 3 : 0;
}

int table(const Args& a) {
  const auto cfg = harness::load_config(a.config);
  std::string text;
  if (cfg.frame.dim() == 2) text += harness::excitation_table(harness::excitation_grid(cfg)) + "\n";
  const auto rep = harness::run(cfg, options(a, false));
  text += harness::solution_table(cfg, rep);
  std::cout << text;
  if (a.out) harness::write_atomic(fs::path(*a.out) / "tables.txt", text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Darwin-Howie-Whelan diffraction simulator with a-priori error certificates"};
  app.require_subcommand(1);
  Args args;

  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--zsamples", args.zsamples, "number of z intervals")->check(CLI::PositiveNumber);
    sub->add_option("--tol", args.tol, "oracle integrator tolerance")->check(CLI::Range(1e-13, 1e-6));
    sub->add_option("--seed", args.seed, "seed for the randomized suites");
    return sub;
  };
  auto* sim = add("simulate", "solve every beam set, compare, write CSV/JSON and the report");
  auto* bms = add("beams", "print beam-set tables");
  auto* bnd = add("bounds", "certificate report and dominance suites");
  auto* tbl = add("table", "excitation-error and solution tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return simulate(args);
    if (bms->parsed()) return beams(args);
    if (bnd->parsed()) return bounds_cmd(args);
    if (tbl->parsed()) return table(args);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
