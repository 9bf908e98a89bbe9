// JSON config loading. Every physical quantity carries its unit in the key.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dhw/error.hpp"
#include "dhw/harness.hpp"

namespace dhw::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void allow_only(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items())
    if (!ok.count(k)) throw ValidationError(where + ": unknown key '" + k + "'");
}

const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ValidationError(what + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(what + ": not finite");
  return x;
}

double positive(const json& v, const std::string& what) {
  const double x = number(v, what);
  if (x <= 0) throw ValidationError(what + ": must be positive");
  return x;
}

int integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ValidationError(what + ": expected an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& v, const std::string& what) {
  if (!v.is_array()) throw ValidationError(what + ": expected an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

std::vector<int> integers(const json& v, const std::string& what) {
  if (!v.is_array()) throw ValidationError(what + ": expected an array");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(integer(x, what));
  return out;
}

LatticeIndex index(const json& v, int dim, const std::string& what) {
  const auto n = integers(v, what);
  if (static_cast<int>(n.size()) != dim) throw ValidationError(what + ": index has wrong dimension");
  LatticeIndex g(dim);
  for (int i = 0; i < dim; ++i) g[i] = n[static_cast<std::size_t>(i)];
  return g;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

crystal::LatticeFrame parse_lattice(const json& j) {
  allow_only(j, "lattice", {"dimension", "a0_nm", "step_over_a0", "spacings_inv_nm", "reference_length_nm"});
  const int dim = integer(need(j, "dimension", "lattice"), "lattice.dimension");
  if (dim != 2 && dim != 3) throw ValidationError("lattice.dimension must be 2 or 3");
  std::vector<double> spacings;
  std::optional<double> a0;
  if (j.contains("a0_nm")) a0 = positive(j.at("a0_nm"), "lattice.a0_nm");
  if (j.contains("spacings_inv_nm")) {
    if (j.contains("step_over_a0")) throw ValidationError("lattice: give spacings_inv_nm or step_over_a0, not both");
    spacings = numbers(j.at("spacings_inv_nm"), "lattice.spacings_inv_nm");
  } else {
    if (!a0) throw ValidationError("lattice: step_over_a0 needs a0_nm");
    const double step = positive(need(j, "step_over_a0", "lattice"), "lattice.step_over_a0") / *a0;
    spacings.assign(static_cast<std::size_t>(dim), step);
  }
  if (static_cast<int>(spacings.size()) != dim) throw ValidationError("lattice: spacings do not match dimension");
  for (double s : spacings)
    if (!(s > 0)) throw ValidationError("lattice: spacings must be positive");
  double ref = 0;
  if (j.contains("reference_length_nm"))
    ref = positive(j.at("reference_length_nm"), "lattice.reference_length_nm");
  else if (a0)
    ref = *a0;
  else
    throw ValidationError("lattice: need reference_length_nm or a0_nm");
  return crystal::LatticeFrame::rectangular(spacings, ref);
}

std::pair<crystal::WaveVector, std::optional<double>> parse_incidence(const json& j,
                                                                      const crystal::LatticeFrame& frame) {
  allow_only(j, "incidence", {"k0_inv_nm", "k0_transverse_dual", "k0_normal_inv_nm", "voltage_kv"});
  const int d = frame.dim();
  if (j.contains("k0_inv_nm")) {
    if (j.size() != 1) throw ValidationError("incidence: k0_inv_nm excludes the other keys");
    const auto k = numbers(j.at("k0_inv_nm"), "incidence.k0_inv_nm");
    if (static_cast<int>(k.size()) != d) throw ValidationError("incidence: k0 has wrong dimension");
    return {crystal::WaveVector(Eigen::Map<const crystal::Vector>(k.data(), d)), std::nullopt};
  }
  // transverse part in units of the dual basis (e.g. -0.5 for half a lattice step)
  crystal::Vector k = crystal::Vector::Zero(d);
  if (j.contains("k0_transverse_dual")) {
    const auto t = numbers(j.at("k0_transverse_dual"), "incidence.k0_transverse_dual");
    if (static_cast<int>(t.size()) != d - 1) throw ValidationError("incidence: transverse part needs d-1 entries");
    LatticeIndex unit(d);
    for (int i = 0; i < d - 1; ++i) {
      unit = LatticeIndex(d);
      unit[i] = 1;
      k += t[static_cast<std::size_t>(i)] * frame.point(unit);
    }
    k(d - 1) = 0.0;
  }
  std::optional<double> kv;
  if (j.contains("k0_normal_inv_nm")) {
    if (j.contains("voltage_kv")) throw ValidationError("incidence: give k0_normal_inv_nm or voltage_kv, not both");
    k(d - 1) = positive(j.at("k0_normal_inv_nm"), "incidence.k0_normal_inv_nm");
  } else if (j.contains("voltage_kv")) {
    kv = positive(j.at("voltage_kv"), "incidence.voltage_kv");
    const double kk = crystal::relativistic_params(*kv).wave_number;
    const double t2 = k.squaredNorm();
    if (t2 >= kk * kk) throw ValidationError("incidence: transverse part exceeds |k0|");
    k(d - 1) = std::sqrt(kk * kk - t2);
  } else {
    throw ValidationError("incidence: need k0_inv_nm, k0_normal_inv_nm or voltage_kv");
  }
  return {crystal::WaveVector(k), kv};
}

std::vector<std::pair<LatticeIndex, potential::complex>> parse_coefficients(const json& arr, int dim,
                                                                            const std::string& where) {
  if (!arr.is_array() || arr.empty()) throw ValidationError(where + ": expected a non-empty array");
  std::vector<std::pair<LatticeIndex, potential::complex>> out;
  for (const auto& e : arr) {
    allow_only(e, where, {"g", "re", "im"});
    const auto g = index(need(e, "g", where), dim, where + ".g");
    const double re = number(need(e, "re", where), where + ".re");
    const double im = e.contains("im") ? number(e.at("im"), where + ".im") : 0.0;
    out.emplace_back(g, potential::complex(re, im));
  }
  return out;
}

BeamSetSpec parse_set(const json& j, int dim) {
  if (!j.is_object()) throw ValidationError("beam_sets: entries must be objects");
  BeamSetSpec s;
  if (!j.contains("name") || !j.at("name").is_string()) throw ValidationError("beam_sets: entry without name");
  s.name = j.at("name").get<std::string>();
  const std::string w = "beam_sets." + s.name;
  if (!j.contains("rule") || !j.at("rule").is_string()) throw ValidationError(w + ": missing rule");
  s.rule = j.at("rule").get<std::string>();
  if (s.rule == "box") {
    allow_only(j, w, {"name", "rule", "lo", "hi"});
    s.lo = integers(need(j, "lo", w), w + ".lo");
    s.hi = integers(need(j, "hi", w), w + ".hi");
    if (static_cast<int>(s.lo.size()) != dim || static_cast<int>(s.hi.size()) != dim)
      throw ValidationError(w + ": lo/hi have wrong dimension");
  } else if (s.rule == "row") {
    allow_only(j, w, {"name", "rule", "g_hat", "n_min", "n_max"});
    s.g_hat = integers(need(j, "g_hat", w), w + ".g_hat");
    if (static_cast<int>(s.g_hat.size()) != dim) throw ValidationError(w + ": g_hat has wrong dimension");
    s.n_min = integer(need(j, "n_min", w), w + ".n_min");
    s.n_max = integer(need(j, "n_max", w), w + ".n_max");
  } else if (s.rule == "ball") {
    allow_only(j, w, {"name", "rule", "radius_inv_nm"});
    s.radius_inv_nm = number(need(j, "radius_inv_nm", w), w + ".radius_inv_nm");
  } else if (s.rule == "gamma") {
    allow_only(j, w, {"name", "rule", "gamma", "radius_inv_nm"});
    s.gamma = number(need(j, "gamma", w), w + ".gamma");
    s.radius_inv_nm = positive(need(j, "radius_inv_nm", w), w + ".radius_inv_nm");
  } else if (s.rule == "ewald") {
    allow_only(j, w, {"name", "rule", "radius_inv_nm", "s_max_inv_nm"});
    s.radius_inv_nm = positive(need(j, "radius_inv_nm", w), w + ".radius_inv_nm");
    s.s_max_inv_nm = positive(need(j, "s_max_inv_nm", w), w + ".s_max_inv_nm");
  } else if (s.rule == "lolz") {
    allow_only(j, w, {"name", "rule"});
  } else if (s.rule == "threshold") {
    allow_only(j, w, {"name", "rule", "u_min_inv_nm2", "s_max_inv_nm", "radius_cap_inv_nm"});
    s.u_min_inv_nm2 = number(need(j, "u_min_inv_nm2", w), w + ".u_min_inv_nm2");
    s.s_max_inv_nm = positive(need(j, "s_max_inv_nm", w), w + ".s_max_inv_nm");
    if (j.contains("radius_cap_inv_nm"))
      s.radius_cap_inv_nm = positive(j.at("radius_cap_inv_nm"), w + ".radius_cap_inv_nm");
  } else if (s.rule == "custom") {
    allow_only(j, w, {"name", "rule", "indices"});
    const auto& arr = need(j, "indices", w);
    if (!arr.is_array()) throw ValidationError(w + ".indices: expected an array");
    for (const auto& g : arr) s.indices.push_back(index(g, dim, w + ".indices"));
  } else {
    throw ValidationError(w + ": unknown rule '" + s.rule + "'");
  }
  return s;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

potential::FourierPotential load_potential(const fs::path& path, const crystal::LatticeFrame& frame) {
  const json j = parse_json(read_file(path), path.string());
  allow_only(j, path.string(), {"description", "coefficients_inv_nm2"});
  return potential::from_coefficients(
      frame, parse_coefficients(need(j, "coefficients_inv_nm2", path.string()), frame.dim(), "coefficients_inv_nm2"));
}

namespace {

ExperimentConfig build_config(const json& j, const fs::path& base_dir) {
  allow_only(j, "config",
             {"name", "description", "lattice", "incidence", "thickness", "potential", "beam_sets", "reference",
              "bounds", "tolerances", "report_modes", "output_dir"});
  std::string canonical = j.dump();

  const std::string name = j.contains("name") ? j.at("name").get<std::string>() : "experiment";
  auto frame = parse_lattice(need(j, "lattice", "config"));
  const int dim = frame.dim();
  auto [k0, kv] = parse_incidence(need(j, "incidence", "config"), frame);

  const auto& th = need(j, "thickness", "config");
  allow_only(th, "thickness", {"z_star_nm", "z_samples"});
  const double z_star = positive(need(th, "z_star_nm", "thickness"), "thickness.z_star_nm");
  const int z_samples = th.contains("z_samples") ? integer(th.at("z_samples"), "thickness.z_samples") : 512;
  if (z_samples < 1) throw ValidationError("thickness.z_samples must be at least 1");

  const auto& pj = need(j, "potential", "config");
  allow_only(pj, "potential", {"file", "coefficients_inv_nm2", "envelope"});
  std::optional<potential::FourierPotential> pot;
  if (pj.contains("file")) {
    if (pj.contains("coefficients_inv_nm2")) throw ValidationError("potential: give file or coefficients, not both");
    const fs::path p = base_dir / pj.at("file").get<std::string>();
    if (!fs::exists(p)) throw ValidationError("potential file not found: " + p.string());
    pot = load_potential(p, frame);
    canonical += parse_json(read_file(p), p.string()).dump();
  } else {
    pot = potential::from_coefficients(
        frame, parse_coefficients(need(pj, "coefficients_inv_nm2", "potential"), dim, "potential.coefficients_inv_nm2"));
  }
  std::optional<potential::DecayEnvelope> env;
  if (pj.contains("envelope")) {
    const auto& e = pj.at("envelope");
    allow_only(e, "potential.envelope", {"c_inv_nm2", "alpha_nm"});
    env = potential::DecayEnvelope{positive(need(e, "c_inv_nm2", "envelope"), "envelope.c_inv_nm2"),
                                   positive(need(e, "alpha_nm", "envelope"), "envelope.alpha_nm")};
    if (!potential::is_majorant(*pot, *env)) throw ValidationError("potential.envelope does not majorize |U_g|");
  }

  std::vector<BeamSetSpec> sets;
  const auto& bs = need(j, "beam_sets", "config");
  if (!bs.is_array() || bs.empty()) throw ValidationError("beam_sets: expected a non-empty array");
  std::set<std::string> names;
  for (const auto& e : bs) {
    sets.push_back(parse_set(e, dim));
    if (!names.insert(sets.back().name).second) throw ValidationError("beam_sets: duplicate name " + sets.back().name);
  }
  std::string reference;
  if (j.contains("reference")) {
    reference = j.at("reference").get<std::string>();
    if (!names.count(reference)) throw ValidationError("reference names no beam set: " + reference);
  }

  double gamma = 0.5, s_star = 1.0;
  std::optional<double> alpha;
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    allow_only(b, "bounds", {"gamma", "alpha_nm", "s_star_inv_nm"});
    if (b.contains("gamma")) gamma = number(b.at("gamma"), "bounds.gamma");
    if (b.contains("alpha_nm")) alpha = positive(b.at("alpha_nm"), "bounds.alpha_nm");
    if (b.contains("s_star_inv_nm")) s_star = positive(b.at("s_star_inv_nm"), "bounds.s_star_inv_nm");
    if (!(gamma > 0 && gamma < 1)) throw ValidationError("bounds.gamma must lie in (0, 1)");
  }

  Tolerances tol;
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    allow_only(t, "tolerances", {"flux_rel", "energy_rel", "oracle"});
    if (t.contains("flux_rel")) tol.flux_rel = positive(t.at("flux_rel"), "tolerances.flux_rel");
    if (t.contains("energy_rel")) tol.energy_rel = positive(t.at("energy_rel"), "tolerances.energy_rel");
    if (t.contains("oracle")) tol.oracle = positive(t.at("oracle"), "tolerances.oracle");
  }

  std::vector<LatticeIndex> modes;
  if (j.contains("report_modes")) {
    if (!j.at("report_modes").is_array()) throw ValidationError("report_modes: expected an array");
    for (const auto& g : j.at("report_modes")) modes.push_back(index(g, dim, "report_modes"));
  } else {
    modes.push_back(LatticeIndex::zero(dim));
  }

  const fs::path out = j.contains("output_dir") ? fs::path(j.at("output_dir").get<std::string>()) : fs::path("out") / name;

  return ExperimentConfig{name,  frame, k0,    kv,   z_star, z_samples, std::move(*pot), env,
                          sets,  reference, gamma, alpha, s_star, tol,   modes, out,  fnv1a64(canonical)};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  const json j = parse_json(text, "config");
  try {
    return build_config(j, base_dir);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config not found: " + path.string());
  return parse_config(read_file(path), path.parent_path());
}

}  // namespace dhw::harness
