#pragma once

#include "pactomo/inversion.hpp"
#include "pactomo/oct_detector.hpp"
#include "pactomo/verify.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pactomo {

/// One experiment, read from a JSON file. Every field has a default; see
/// README for the key tree.
struct ExperimentConfig {
  Grid3 grid = Grid3::centered(0.25, {8, 8, 8});
  /// Medium lattice uniform(step, count), starting at 0.
  double frequency_step = 0.125;
  std::size_t frequency_count = 49;

  std::vector<LorentzInclusion> inclusions;
  std::size_t boundary_width = 1;
  double gruneisen = 1.0;

  /// Pulse bank: one pulse per center.
  std::vector<double> pulse_centers;
  double pulse_half_width = 0.0625;
  PulseShape pulse_shape = PulseShape::smooth_bump;
  Vec3 polarization = Vec3::UnitX();

  /// Detector distance R, cap half-angle, direction count and jitter.
  double detector_distance = 200.0;
  double aperture = 1.0;
  std::size_t directions = 48;
  double jitter = 0.5;

  /// PAT field model: narrowband, incident, born or full.
  std::string pat_model = "narrowband";

  double c = kDefaultLightSpeed;
  double solver_tol = 1e-10;
  std::size_t solver_max_iterations = 500;

  double profile_tol = 1e-8;
  double fredholm_tol = 1e-10;
  GammaOptions gamma;
  /// Pulse centers in [cone_min_frequency, cone_max_frequency], every
  /// cone_stride-th, enter the cone.
  double cone_min_frequency = 0.0;
  double cone_max_frequency = 1e300;
  std::size_t cone_stride = 1;

  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  std::vector<std::string> verify_checks = default_check_names();
  std::string inject_fault;
};

/// Parses and validates a configuration; throws PreconditionError on any
/// inconsistency. `base` resolves a relative output directory.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base = {});

/// Reads a configuration file. PACTOMO_WORKERS, when set, overrides the
/// worker count.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of a configuration with all defaults filled in.
std::string config_to_json(const ExperimentConfig& config);

/// Lowercase hex SHA-256 of a byte string and of a file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ForwardResult {
  SusceptibilityField medium;
  GruneisenField gamma;
  OCTRecord oct;
  PATRecord pat;
  std::vector<std::filesystem::path> files;  ///< relative to the output directory
};

/// Builds the phantom, synthesizes the OCT and PAT records and writes the
/// medium, Grueneisen field, records, CSV tables and manifest.json.
ForwardResult run_forward(const ExperimentConfig& config);

struct InversionResult {
  MaterialSplit split;
  ConeSampling cone;
  FredholmResult fredholm;
  GammaEstimate estimate;
  std::vector<std::size_t> used_frequencies;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
};

/// material split, second-kind solve and Grueneisen fit; writes the estimate,
/// diagnostics, cone data and tables into `config.output`. Frequencies where
/// the material profile vanishes are dropped with a warning.
InversionResult run_inversion(const ExperimentConfig& config, const OCTRecord& oct,
                              const PATRecord& pat);

/// Runs the configured checks and writes verify_report.csv when the output
/// directory is set.
std::vector<CheckResult> run_verify(const ExperimentConfig& config);

/// Manifest of `files` under `dir`: content hashes and sizes plus the
/// configuration hash, written to `dir/name`.
void write_manifest(const std::filesystem::path& dir, const std::string& name,
                    const ExperimentConfig& config, std::vector<std::filesystem::path> files);

/// One-paragraph description of an artifact (volume sidecar, CSV table or
/// manifest).
std::string describe_artifact(const std::filesystem::path& path);

}  // namespace pactomo
