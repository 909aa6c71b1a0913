#include "pactomo/pipeline.hpp"

#include "pactomo/error.hpp"
#include "pactomo/pat_detector.hpp"
#include "pactomo/volume_io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace pactomo {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void bad(const std::string& what) { throw PreconditionError("config: " + what); }

// Rejects keys outside `allowed` so that typos do not pass silently.
void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) bad("unknown key " + where + "." + item.key());
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + " has the wrong type");
  }
}

Vec3 read_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) bad(where + " must be a 3-vector");
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    if (!v[a].is_number()) bad(where + " must be numeric");
    out[a] = v[a].get<double>();
  }
  return out;
}

const char* shape_name(PulseShape s) {
  switch (s) {
    case PulseShape::raised_cosine: return "raised_cosine";
    case PulseShape::smooth_bump: return "smooth_bump";
    case PulseShape::gaussian: return "gaussian";
  }
  return "";
}

PulseShape parse_shape(const std::string& s) {
  if (s == "raised_cosine") return PulseShape::raised_cosine;
  if (s == "smooth_bump") return PulseShape::smooth_bump;
  if (s == "gaussian") return PulseShape::gaussian;
  bad("unknown pulse shape " + s);
}

FieldModel pat_field_model(const std::string& s) {
  if (s == "incident") return FieldModel::incident;
  if (s == "born") return FieldModel::born;
  if (s == "full") return FieldModel::full;
  bad("unknown PAT model " + s);
}

void validate(const ExperimentConfig& c) {
  const auto& d = c.grid.dims();
  if (!(c.grid.spacing() > 0.0)) bad("grid spacing must be positive");
  if (d[0] < 3 || d[1] < 3 || d[2] < 3) bad("grid needs at least 3 points per axis");
  if (!(c.frequency_step > 0.0) || c.frequency_count < 2) bad("frequency lattice needs a positive step and 2 points");
  for (const auto& inc : c.inclusions)
    if (!(inc.radius > 0.0) || !(inc.damping > 0.0) || !(inc.resonance > 0.0))
      bad("inclusions need positive radius, resonance and damping");
  if (!(c.gruneisen >= 0.0) || !std::isfinite(c.gruneisen)) bad("gruneisen must be finite and >= 0");
  if (c.pulse_centers.empty()) bad("pulse bank is empty");
  if (!(c.pulse_half_width > 0.0)) bad("pulse half width must be positive");
  const auto lattice = FrequencyLattice::uniform(c.frequency_step, c.frequency_count);
  for (std::size_t i = 0; i < c.pulse_centers.size(); ++i) {
    const double nu = c.pulse_centers[i];
    if (!(nu > c.pulse_half_width)) bad("pulse centers must exceed the half width");
    if (!lattice.find(nu)) bad("pulse center " + fmt(nu) + " is not on the frequency lattice");
    if (i > 0 && !(nu > c.pulse_centers[i - 1])) bad("pulse centers must increase");
  }
  if (std::abs(c.polarization[2]) > 0.0 || std::abs(c.polarization.norm() - 1.0) > 1e-12)
    bad("polarization must be a unit vector with zero third component");
  if (!(c.detector_distance > 0.0)) bad("detector distance must be positive");
  if (!(c.aperture > 0.0) || c.aperture > kPi / 2.0) bad("aperture must lie in (0, pi/2]");
  if (c.directions == 0) bad("detector needs at least one direction");
  if (!(c.jitter >= 0.0) || c.jitter > 1.0) bad("jitter must lie in [0, 1]");
  if (c.pat_model != "narrowband") pat_field_model(c.pat_model);
  if (!(c.c > 0.0)) bad("c must be positive");
  if (!(c.solver_tol > 0.0) || !(c.fredholm_tol > 0.0) || !(c.gamma.tol > 0.0) || !(c.profile_tol > 0.0))
    bad("tolerances must be positive");
  if (c.solver_max_iterations == 0 || c.gamma.max_iterations == 0) bad("iteration limits must be positive");
  if (!(c.gamma.reg >= 0.0)) bad("inversion.reg must be >= 0");
  if (!(c.gamma.beta_threshold > 0.0 && c.gamma.beta_threshold < 1.0) ||
      !(c.gamma.q_threshold > 0.0 && c.gamma.q_threshold < 1.0))
    bad("inversion thresholds must lie in (0, 1)");
  if (c.cone_stride == 0) bad("cone stride must be positive");
  if (!(c.cone_min_frequency <= c.cone_max_frequency)) bad("cone frequency range is empty");
  if (c.workers == 0) bad("workers must be positive");
  if (c.output.empty()) bad("output directory is empty");
  const auto& known = all_check_names();
  for (const auto& n : c.verify_checks)
    if (std::find(known.begin(), known.end(), n) == known.end()) bad("unknown check " + n);
  if (!c.inject_fault.empty() && c.inject_fault != "symmetry") bad("only the symmetry fixture can be broken");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::vector<PulseSpectrum> make_pulses(const ExperimentConfig& c) {
  std::vector<PulseSpectrum> out;
  for (double nu : c.pulse_centers) {
    PulseSpectrum::Params p;
    p.center = nu;
    p.half_width = c.pulse_half_width;
    p.polarization = c.polarization;
    p.shape = c.pulse_shape;
    out.emplace_back(p);
  }
  return out;
}

std::size_t center_slice(const Grid3& g) { return g.dims()[2] / 2; }

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  only_keys(j, "config", {"grid", "frequencies", "medium", "gruneisen", "pulses", "detector", "pat", "c",
                          "solver", "inversion", "output", "seed", "workers", "verify"});
  ExperimentConfig c;

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    only_keys(g, "grid", {"spacing", "dims"});
    double h = c.grid.spacing();
    std::array<std::size_t, 3> dims = c.grid.dims();
    read(g, "spacing", h, "grid");
    read(g, "dims", dims, "grid");
    if (!(h > 0.0)) bad("grid spacing must be positive");
    c.grid = Grid3::centered(h, dims);
  }
  if (j.contains("frequencies")) {
    const auto& f = j["frequencies"];
    only_keys(f, "frequencies", {"step", "count"});
    read(f, "step", c.frequency_step, "frequencies");
    read(f, "count", c.frequency_count, "frequencies");
  }

  c.inclusions = {{Vec3(0.05, 0.0, -0.05), 0.6, 1.0, 2.0, 0.5}};
  if (j.contains("medium")) {
    const auto& m = j["medium"];
    only_keys(m, "medium", {"inclusions", "boundary_width"});
    read(m, "boundary_width", c.boundary_width, "medium");
    if (m.contains("inclusions")) {
      if (!m["inclusions"].is_array()) bad("medium.inclusions must be a list");
      c.inclusions.clear();
      for (const auto& inc : m["inclusions"]) {
        only_keys(inc, "medium.inclusions[]", {"center", "radius", "strength", "resonance", "damping"});
        for (const char* k : {"center", "radius", "strength", "resonance", "damping"})
          if (!inc.contains(k)) bad(std::string("inclusion is missing ") + k);
        LorentzInclusion li{read_vec3(inc["center"], "inclusion center"), 0, 0, 0, 0};
        read(inc, "radius", li.radius, "inclusion");
        read(inc, "strength", li.strength, "inclusion");
        read(inc, "resonance", li.resonance, "inclusion");
        read(inc, "damping", li.damping, "inclusion");
        c.inclusions.push_back(li);
      }
    }
  }
  read(j, "gruneisen", c.gruneisen, "config");

  for (int m = 1; m <= 48; ++m) c.pulse_centers.push_back(0.125 * m);
  if (j.contains("pulses")) {
    const auto& p = j["pulses"];
    only_keys(p, "pulses", {"centers", "half_width", "shape", "polarization"});
    if (p.contains("centers")) {
      const auto& cs = p["centers"];
      c.pulse_centers.clear();
      if (cs.is_array()) {
        read(p, "centers", c.pulse_centers, "pulses");
      } else {
        only_keys(cs, "pulses.centers", {"first", "step", "count"});
        double first = 0.0, step = 0.0;
        std::size_t count = 0;
        read(cs, "first", first, "pulses.centers");
        read(cs, "step", step, "pulses.centers");
        read(cs, "count", count, "pulses.centers");
        for (std::size_t i = 0; i < count; ++i) c.pulse_centers.push_back(first + step * double(i));
      }
    }
    read(p, "half_width", c.pulse_half_width, "pulses");
    if (p.contains("shape")) {
      std::string s;
      read(p, "shape", s, "pulses");
      c.pulse_shape = parse_shape(s);
    }
    if (p.contains("polarization")) c.polarization = read_vec3(p["polarization"], "pulses.polarization");
  }
  if (j.contains("detector")) {
    const auto& d = j["detector"];
    only_keys(d, "detector", {"distance", "aperture", "directions", "jitter"});
    read(d, "distance", c.detector_distance, "detector");
    read(d, "aperture", c.aperture, "detector");
    read(d, "directions", c.directions, "detector");
    read(d, "jitter", c.jitter, "detector");
  }
  if (j.contains("pat")) {
    only_keys(j["pat"], "pat", {"model"});
    read(j["pat"], "model", c.pat_model, "pat");
  }
  read(j, "c", c.c, "config");
  if (j.contains("solver")) {
    only_keys(j["solver"], "solver", {"tol", "max_iterations"});
    read(j["solver"], "tol", c.solver_tol, "solver");
    read(j["solver"], "max_iterations", c.solver_max_iterations, "solver");
  }
  if (j.contains("inversion")) {
    const auto& v = j["inversion"];
    only_keys(v, "inversion", {"profile_tol", "fredholm_tol", "reg", "tol", "max_iterations", "beta_threshold",
                               "q_threshold", "penalty", "cone"});
    read(v, "profile_tol", c.profile_tol, "inversion");
    read(v, "fredholm_tol", c.fredholm_tol, "inversion");
    read(v, "reg", c.gamma.reg, "inversion");
    read(v, "tol", c.gamma.tol, "inversion");
    read(v, "max_iterations", c.gamma.max_iterations, "inversion");
    read(v, "beta_threshold", c.gamma.beta_threshold, "inversion");
    read(v, "q_threshold", c.gamma.q_threshold, "inversion");
    if (v.contains("penalty")) {
      std::string s;
      read(v, "penalty", s, "inversion");
      if (s == "amplitude") c.gamma.penalty = GammaPenalty::amplitude;
      else if (s == "inverse_gradient") c.gamma.penalty = GammaPenalty::inverse_gradient;
      else bad("unknown penalty " + s);
    }
    if (v.contains("cone")) {
      const auto& k = v["cone"];
      only_keys(k, "inversion.cone", {"min_frequency", "max_frequency", "stride"});
      read(k, "min_frequency", c.cone_min_frequency, "inversion.cone");
      read(k, "max_frequency", c.cone_max_frequency, "inversion.cone");
      read(k, "stride", c.cone_stride, "inversion.cone");
    }
  }
  std::string out = c.output.string();
  read(j, "output", out, "config");
  c.output = fs::path(out);
  if (c.output.is_relative() && !base.empty()) c.output = base / c.output;
  read(j, "seed", c.seed, "config");
  read(j, "workers", c.workers, "config");
  if (j.contains("verify")) {
    only_keys(j["verify"], "verify", {"checks", "inject_fault"});
    read(j["verify"], "checks", c.verify_checks, "verify");
    read(j["verify"], "inject_fault", c.inject_fault, "verify");
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto c = parse_config(ss.str(), path.parent_path());
  if (const char* env = std::getenv("PACTOMO_WORKERS")) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || w < 1) bad("PACTOMO_WORKERS must be a positive integer");
    c.workers = std::size_t(w);
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"spacing", c.grid.spacing()}, {"dims", c.grid.dims()}};
  j["frequencies"] = {{"step", c.frequency_step}, {"count", c.frequency_count}};
  json incs = json::array();
  for (const auto& i : c.inclusions)
    incs.push_back({{"center", {i.center[0], i.center[1], i.center[2]}},
                    {"radius", i.radius},
                    {"strength", i.strength},
                    {"resonance", i.resonance},
                    {"damping", i.damping}});
  j["medium"] = {{"inclusions", incs}, {"boundary_width", c.boundary_width}};
  j["gruneisen"] = c.gruneisen;
  j["pulses"] = {{"centers", c.pulse_centers},
                 {"half_width", c.pulse_half_width},
                 {"shape", shape_name(c.pulse_shape)},
                 {"polarization", {c.polarization[0], c.polarization[1], c.polarization[2]}}};
  j["detector"] = {{"distance", c.detector_distance},
                   {"aperture", c.aperture},
                   {"directions", c.directions},
                   {"jitter", c.jitter}};
  j["pat"] = {{"model", c.pat_model}};
  j["c"] = c.c;
  j["solver"] = {{"tol", c.solver_tol}, {"max_iterations", c.solver_max_iterations}};
  j["inversion"] = {
      {"profile_tol", c.profile_tol},
      {"fredholm_tol", c.fredholm_tol},
      {"reg", c.gamma.reg},
      {"tol", c.gamma.tol},
      {"max_iterations", c.gamma.max_iterations},
      {"beta_threshold", c.gamma.beta_threshold},
      {"q_threshold", c.gamma.q_threshold},
      {"penalty", c.gamma.penalty == GammaPenalty::amplitude ? "amplitude" : "inverse_gradient"},
      {"cone", {{"min_frequency", c.cone_min_frequency},
                {"max_frequency", c.cone_max_frequency},
                {"stride", c.cone_stride}}}};
  j["seed"] = c.seed;
  j["verify"] = {{"checks", c.verify_checks}, {"inject_fault", c.inject_fault}};
  return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 failed");
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    out += buf;
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void write_manifest(const fs::path& dir, const std::string& name, const ExperimentConfig& config,
                    std::vector<fs::path> files) {
  std::sort(files.begin(), files.end());
  json entries = json::array();
  for (const auto& f : files)
    entries.push_back({{"name", f.generic_string()},
                       {"sha256", sha256_file(dir / f)},
                       {"bytes", fs::file_size(dir / f)}});
  json m;
  m["format"] = "pactomo-manifest";
  m["config_sha256"] = sha256_hex(config_to_json(config));
  m["files"] = entries;
  write_text(dir / name, m.dump(2) + "\n");
}

ForwardResult run_forward(const ExperimentConfig& config) {
  validate(config);
  const auto lattice = FrequencyLattice::uniform(config.frequency_step, config.frequency_count);
  auto medium = build_lorentzian_phantom(config.grid, lattice, config.inclusions, config.boundary_width);
  auto gamma = GruneisenField::constant(config.grid, config.gruneisen);
  const auto pulses = make_pulses(config);
  const auto dirs = cap_directions(config.directions, config.aperture, config.jitter, config.seed);

  auto oct = synthesize_oct_record(medium, pulses, dirs, config.detector_distance, config.c, config.workers);

  const std::size_t nv = config.grid.size();
  PATRecord pat{config.grid, config.pulse_centers, std::vector<double>(pulses.size() * nv)};
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    std::vector<double> p;
    if (config.pat_model == "narrowband") {
      p = narrowband_pressure(medium, gamma, config.pulse_centers[i]);
    } else {
      PressureOptions opt;
      opt.model = pat_field_model(config.pat_model);
      opt.c = config.c;
      opt.solver_tol = config.solver_tol;
      opt.workers = config.workers;
      p = initial_pressure(medium, gamma, pulses[i], opt);
    }
    std::copy(p.begin(), p.end(), pat.values.begin() + std::ptrdiff_t(i * nv));
  }

  const fs::path& dir = config.output;
  ensure_dir(dir);
  std::vector<fs::path> files;
  write_text(dir / "config.json", config_to_json(config));
  files.push_back("config.json");
  write_volume(dir / "medium", to_volume(medium));
  files.insert(files.end(), {"medium.json", "medium.bin"});
  write_volume(dir / "gruneisen", VolumeData{config.grid, {}, false, false, gamma.values, {}});
  files.insert(files.end(), {"gruneisen.json", "gruneisen.bin"});
  write_oct_csv(dir / "oct.csv", oct);
  files.push_back("oct.csv");
  write_pat_record(dir / "pat", pat);
  files.insert(files.end(), {"pat.json", "pat.bin"});

  std::ostringstream h;
  h << "nu,direction,theta_x,theta_y,theta_z,re_h_tilde,im_h_tilde,abs_h_tilde\n";
  for (std::size_t m = 0; m < oct.frequencies.size(); ++m)
    for (std::size_t d = 0; d < oct.directions.size(); ++d) {
      const cplx v = oct.at(m, d);
      const Vec3& t = oct.directions[d];
      h << fmt(oct.frequencies[m]) << ',' << d << ',' << fmt(t[0]) << ',' << fmt(t[1]) << ',' << fmt(t[2])
        << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << ',' << fmt(std::abs(v)) << '\n';
    }
  write_text(dir / "table_h_tilde.csv", h.str());
  files.push_back("table_h_tilde.csv");

  std::ostringstream p;
  p << "nu,integral,max,min\n";
  const double h3 = config.grid.voxel_volume();
  for (std::size_t m = 0; m < pat.frequencies.size(); ++m) {
    const auto s = pat.slice(m);
    double sum = 0.0;
    for (double x : s) sum += x * h3;
    p << fmt(pat.frequencies[m]) << ',' << fmt(sum) << ',' << fmt(*std::max_element(s.begin(), s.end()))
      << ',' << fmt(*std::min_element(s.begin(), s.end())) << '\n';
  }
  write_text(dir / "table_pat_profile.csv", p.str());
  files.push_back("table_pat_profile.csv");

  write_manifest(dir, "manifest.json", config, files);
  files.push_back("manifest.json");
  return {std::move(medium), std::move(gamma), std::move(oct), std::move(pat), std::move(files)};
}

InversionResult run_inversion(const ExperimentConfig& config, const OCTRecord& oct, const PATRecord& pat) {
  validate(config);
  if (oct.frequencies.empty() || oct.directions.empty() || oct.values.empty())
    throw PreconditionError("run_inversion: OCT record is empty");
  if (oct.values.size() != oct.frequencies.size() * oct.directions.size())
    throw PreconditionError("run_inversion: OCT record size mismatch");
  if (oct.frequencies.size() != pat.frequencies.size())
    throw PreconditionError("run_inversion: OCT and PAT records use different frequency lattices");
  for (std::size_t m = 0; m < oct.frequencies.size(); ++m)
    if (std::abs(oct.frequencies[m] - pat.frequencies[m]) > 1e-9 * std::abs(pat.frequencies[m]))
      throw PreconditionError("run_inversion: OCT and PAT records use different frequency lattices");

  auto split = material_split(pat, config.profile_tol);
  std::vector<std::size_t> used;
  std::vector<std::string> warnings;
  std::vector<fs::path> files;
  const std::set<std::size_t> dropped(split.dropped.begin(), split.dropped.end());
  std::vector<std::size_t> excluded;
  std::size_t in_range = 0;
  for (std::size_t m = 0; m < oct.frequencies.size(); ++m) {
    const double nu = oct.frequencies[m];
    bool use = nu >= config.cone_min_frequency && nu <= config.cone_max_frequency;
    if (use) use = (in_range++ % config.cone_stride) == 0;
    if (use && dropped.count(m)) {
      warnings.push_back("frequency " + fmt(nu) + " dropped: material profile vanishes");
      use = false;
    }
    if (use) used.push_back(m);
    else excluded.push_back(m);
  }
  if (used.empty()) throw PreconditionError("run_inversion: no usable cone frequency");

  const double dir_weight = cap_area(config.aperture) / double(oct.directions.size());
  auto cone = make_cone_sampling(oct.frequencies, oct.directions, dir_weight, config.c, excluded);
  std::vector<cplx> h(cone.size());
  for (std::size_t n = 0; n < cone.size(); ++n) {
    const auto& s = cone.samples[n];
    h[n] = oct.at(s.frequency_index, s.direction_index);
  }
  const auto hhat = normalized_data(h, split, cone);

  FredholmOptions fo;
  fo.tol = config.fredholm_tol;
  fo.max_iterations = config.solver_max_iterations;
  fo.workers = config.workers;
  auto fredholm = fredholm_solve(hhat, split, cone, fo);

  GammaOptions go = config.gamma;
  go.workers = config.workers;
  auto estimate = recover_gamma(fredholm.gamma_hat, split, cone, go);

  const fs::path& dir = config.output;
  ensure_dir(dir);
  write_gamma_estimate(dir / "gamma", estimate);
  files.insert(files.end(), {"gamma.json", "gamma.bin", "gamma_diagnostics.txt"});
  write_gamma_hat_csv(dir / "gamma_hat.csv", cone, fredholm.gamma_hat);
  files.push_back("gamma_hat.csv");

  const auto& d = estimate.diagnostics;
  std::ostringstream s;
  s << "key,value\n"
    << "cone_samples," << cone.size() << '\n'
    << "frequencies_used," << used.size() << '\n'
    << "frequencies_dropped," << split.dropped.size() << '\n'
    << "material_residual_norm," << fmt(split.residual_norm) << '\n'
    << "fredholm_operator_norm," << fmt(fredholm.operator_norm) << '\n'
    << "fredholm_iterations," << fredholm.iterations << '\n'
    << "fredholm_relative_residual," << fmt(fredholm.relative_residual) << '\n'
    << "fredholm_used_gmres," << (fredholm.used_gmres ? 1 : 0) << '\n'
    << "gamma_data_residual," << fmt(d.data_residual) << '\n'
    << "gamma_mask_fraction," << fmt(d.mask_fraction) << '\n'
    << "gamma_lambda," << fmt(d.lambda) << '\n'
    << "gamma_cg_iterations," << d.cg_iterations << '\n';
  write_text(dir / "summary.csv", s.str());
  files.push_back("summary.csv");

  const Grid3& g = estimate.grid;
  const std::size_t k = center_slice(g);
  std::ostringstream t;
  t << "i,j,x,y,z,gamma,q,mask\n";
  for (std::size_t i = 0; i < g.dims()[0]; ++i)
    for (std::size_t jj = 0; jj < g.dims()[1]; ++jj) {
      const std::size_t v = g.index(i, jj, k);
      const Vec3 y = g.center(v);
      t << i << ',' << jj << ',' << fmt(y[0]) << ',' << fmt(y[1]) << ',' << fmt(y[2]) << ','
        << fmt(estimate.values[v]) << ',' << fmt(estimate.q[v]) << ',' << (estimate.mask[v] ? 1 : 0)
        << '\n';
    }
  write_text(dir / "table_gamma_slice.csv", t.str());
  files.push_back("table_gamma_slice.csv");

  std::ostringstream w;
  for (const auto& msg : warnings) w << msg << '\n';
  write_text(dir / "warnings.txt", w.str());
  files.push_back("warnings.txt");

  write_manifest(dir, "inversion_manifest.json", config, files);
  files.push_back("inversion_manifest.json");
  return {std::move(split), std::move(cone), std::move(fredholm), std::move(estimate), std::move(used),
          std::move(warnings), std::move(files)};
}

std::vector<CheckResult> run_verify(const ExperimentConfig& config) {
  auto results = run_checks(config.verify_checks, config.inject_fault);
  if (!config.output.empty()) {
    ensure_dir(config.output);
    std::ostringstream out;
    out << "name,passed,measured,tolerance,detail\n";
    for (const auto& r : results)
      out << r.name << ',' << (r.passed ? 1 : 0) << ',' << fmt(r.measured) << ',' << fmt(r.tolerance) << ",\""
          << r.detail << "\"\n";
    write_text(config.output / "verify_report.csv", out.str());
  }
  return results;
}

std::string describe_artifact(const fs::path& path) {
  std::ostringstream out;
  const auto ext = path.extension().string();
  if (ext == ".csv") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header, line;
    std::getline(in, header);
    std::size_t rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    out << path.filename().string() << ": CSV table, " << rows << " rows\ncolumns: " << header << '\n';
    return out.str();
  }
  if (ext != ".json" && ext != ".bin") throw IoError("unknown artifact type: " + path.string());
  fs::path sidecar = path;
  sidecar.replace_extension(".json");
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open " + sidecar.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(sidecar.string() + ": " + e.what());
  }
  const std::string format = j.value("format", "");
  if (format == "pactomo-manifest") {
    out << sidecar.filename().string() << ": manifest, " << j["files"].size()
        << " files, config sha256 " << j["config_sha256"].get<std::string>() << '\n';
    for (const auto& f : j["files"])
      out << "  " << f["name"].get<std::string>() << "  " << f["bytes"].get<std::uintmax_t>() << " bytes  "
          << f["sha256"].get<std::string>() << '\n';
    return out.str();
  }
  if (format == "pactomo-volume") {
    const auto v = read_volume(sidecar);
    const auto& d = v.grid.dims();
    double lo = 0.0, hi = 0.0;
    if (!v.real.empty()) {
      lo = *std::min_element(v.real.begin(), v.real.end());
      hi = *std::max_element(v.real.begin(), v.real.end());
    }
    out << sidecar.filename().string() << ": " << (v.is_complex ? "complex" : "real") << " volume " << d[0]
        << 'x' << d[1] << 'x' << d[2] << " spacing " << fmt(v.grid.spacing()) << ", " << v.frequencies.size()
        << " frequencies";
    if (!v.frequencies.empty())
      out << " [" << fmt(v.frequencies.front()) << ", " << fmt(v.frequencies.back()) << "]";
    out << "\nreal part range [" << fmt(lo) << ", " << fmt(hi) << "]\n";
    return out.str();
  }
  out << sidecar.filename().string() << ": JSON document with keys";
  for (const auto& item : j.items()) out << ' ' << item.key();
  out << '\n';
  return out.str();
}

}  // namespace pactomo
