#pragma once

// Experiment runner: config loading, beam-set solves, comparison tables,
// certificate checks and output files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dhw/beamsel.hpp"
#include "dhw/bounds.hpp"
#include "dhw/crystal.hpp"
#include "dhw/potential.hpp"
#include "dhw/solver.hpp"

namespace dhw::harness {

/// One named beam-set recipe from the config. Only the fields used by `rule`
/// are meaningful.
struct BeamSetSpec {
  std::string name;
  std::string rule;  // box, row, ball, gamma, ewald, lolz, threshold, custom
  std::vector<int> lo, hi;
  std::vector<int> g_hat;
  int n_min = 0, n_max = 0;
  double radius_inv_nm = 0.0;
  double gamma = 0.0;
  double s_max_inv_nm = 0.0;
  double u_min_inv_nm2 = 0.0;
  std::optional<double> radius_cap_inv_nm;
  std::vector<LatticeIndex> indices;
};

struct Tolerances {
  double flux_rel = 1e-10;
  double energy_rel = 1e-9;
  std::optional<double> oracle;  // run the RKF78 oracle on the reference set when set
};

struct ExperimentConfig {
  std::string name;
  crystal::LatticeFrame frame;
  crystal::WaveVector k0;
  std::optional<double> voltage_kv;
  double z_star_nm;
  int z_samples;
  potential::FourierPotential potential;
  std::optional<potential::DecayEnvelope> envelope;  // fitted when absent
  std::vector<BeamSetSpec> beam_sets;
  std::string reference;  // largest set when not given
  double gamma;
  std::optional<double> alpha_nm;
  double s_star_inv_nm;
  Tolerances tolerances;
  std::vector<LatticeIndex> report_modes;
  std::filesystem::path output_dir;
  std::uint64_t hash;  // FNV-1a of the canonical JSON text
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t h);

/// Parses a JSON config. Relative file references resolve against `base_dir`.
/// Throws ValidationError on unknown keys, missing keys or bad values.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Potential file: {"coefficients_inv_nm2": [{"g": [..], "re": x, "im": y}, ...]}.
potential::FourierPotential load_potential(const std::filesystem::path& path, const crystal::LatticeFrame& frame);

struct NamedSet {
  std::string name;
  beamsel::BeamSet set;
};

beamsel::BeamSet build_beam_set(const ExperimentConfig& cfg, const BeamSetSpec& spec);
std::vector<NamedSet> build_beam_sets(const ExperimentConfig& cfg);
potential::DecayEnvelope envelope(const ExperimentConfig& cfg);
bounds::BoundContext bound_context(const ExperimentConfig& cfg);

/// Writes `content` to `path` through a temporary file in the same directory.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Largest n such that |re a - re b| and |im a - im b| are both at most
/// half a unit in the n-th decimal place, capped at `cap`. Throws
/// ValidationError when b = 0.
int significant_digits(solver::complex a, solver::complex b, int cap = 17);

struct ExcitationGrid {
  std::vector<int> cols;  // first index
  std::vector<int> rows;  // last (normal) index
  std::vector<std::vector<double>> s;  // s[row][col], signed, nm^-1
};

/// s_g over the bounding box of the reference set (2D configs only).
ExcitationGrid excitation_grid(const ExperimentConfig& cfg);
std::string excitation_table(const ExcitationGrid& grid);

/// Long CSV (z_nm, g_index_1..d, abs_psi) and an endpoint snapshot (g, abs_psi).
struct PlotData {
  std::string series;
  std::string snapshot;
};
PlotData amplitude_plot_data(const solver::Solution& sol, const std::vector<LatticeIndex>& filter = {});

// ---- suites -------------------------------------------------------------

struct DominanceRecord {
  std::string system;
  std::string certificate;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max measured / bound
  double max_measured = 0.0;
};

/// Checks every certificate on one system. `full` is the largest set; `inner`
/// are proper subsets used for the cut-off and two-set bounds.
std::vector<DominanceRecord> dominance_checks(const std::string& label, const bounds::BoundContext& ctx,
                                              const potential::FourierPotential& pot, const crystal::WaveVector& k0,
                                              const solver::Solution& full,
                                              const std::vector<solver::Solution>& inner, double s_star);

struct ConservationRecord {
  std::string system;
  std::size_t beams = 0;
  double flux_drift = 0.0;    // max relative deviation of the flux norm
  double energy_drift = 0.0;  // max relative deviation of the energy norm
};

ConservationRecord conservation(const std::string& label, const solver::Solution& sol);

struct LemmaRecord {
  std::string system;
  std::size_t vectors = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0;  // min of ||H A||^2 - (||Sigma A||^2 / 2 - ||U A||^2), scaled
};

/// ||H A||^2 >= ||Sigma A||^2 / 2 - ||U A||^2 for random vectors A (symmetrized matrices).
LemmaRecord energy_lemma(const std::string& label, const solver::DhwSystem& sys, std::mt19937_64& rng,
                         std::size_t vectors = 100);

/// Random admissible 2D system with a potential under a known envelope.
struct RandomSystem {
  crystal::LatticeFrame frame;
  crystal::WaveVector k0;
  potential::FourierPotential potential;
  potential::DecayEnvelope envelope;
  beamsel::BeamSet beams;  // at most 16 beams
  double z_end;
};

RandomSystem random_system(std::mt19937_64& rng);

struct SuiteResult {
  std::vector<DominanceRecord> dominance;
  std::vector<ConservationRecord> conservation;
  std::vector<LemmaRecord> lemma;
};

/// `count` random systems with `samples` z-intervals each.
SuiteResult randomized_suite(std::uint64_t seed, int count = 20, int samples = 512);

// ---- run ----------------------------------------------------------------

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> z_samples;
  std::optional<double> oracle_tol;
  bool write_files = true;
};

struct SetSummary {
  std::string name;
  std::string descriptor;
  std::size_t beams = 0;
  double margin = 0.0;
  double flux_drift = 0.0;
  double energy_drift = 0.0;
  std::vector<solver::complex> modes_at_end;  // config report_modes at z_end, zero when absent
  double seconds = 0.0;
};

struct Comparison {
  std::string name;
  double error_at_end = 0.0;  // restricted flux-norm error vs the reference
  double max_error = 0.0;
  std::vector<int> digits;  // per report mode
};

struct RunReport {
  std::string config_name;
  std::uint64_t config_hash = 0;
  bool ok = true;
  std::vector<std::string> failures;
  std::string reference;
  double z_end = 0.0;
  std::vector<SetSummary> sets;
  std::vector<Comparison> comparisons;
  std::optional<double> oracle_gap;  // max component gap oracle vs eigen path on the reference set
  std::vector<bounds::ErrorCertificate> certificates;
  std::vector<DominanceRecord> dominance;
  std::vector<std::filesystem::path> files;
  std::vector<solver::Solution> solutions;  // same order as sets
  double seconds = 0.0;
};

RunReport run(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Fig. 10 style table: modes at z_end with 11 decimals and digit counts.
std::string solution_table(const ExperimentConfig& cfg, const RunReport& report);
std::string report_json(const RunReport& report, const ExperimentConfig& cfg);
std::string report_text(const RunReport& report, const ExperimentConfig& cfg);

/// Certificates for the config's reference set (z-independent inputs only).
std::vector<bounds::ErrorCertificate> certificates(const ExperimentConfig& cfg);

}  // namespace dhw::harness
