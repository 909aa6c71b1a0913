#include "pactomo/error.hpp"
#include "pactomo/pat_detector.hpp"
#include "pactomo/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace pactomo;

namespace {

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::precondition: return "precondition";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

void print_files(const std::filesystem::path& dir, const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << "  " << (dir / f).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pactomo: hybrid OCT/PAT forward modelling and Grueneisen inversion"};
  app.require_subcommand(1);

  std::string config_path, oct_path, pat_path, artifact;

  auto* forward = app.add_subcommand("forward", "synthesize OCT and PAT records from a phantom");
  forward->add_option("config", config_path, "experiment config (JSON)")->required();

  auto* invert = app.add_subcommand("invert", "recover the Grueneisen field from OCT and PAT records");
  invert->add_option("config", config_path, "experiment config (JSON)")->required();
  invert->add_option("oct", oct_path, "OCT record (CSV)")->required();
  invert->add_option("pat", pat_path, "PAT record (volume sidecar or stem)")->required();

  auto* verify = app.add_subcommand("verify", "run the built-in verification checks");
  verify->add_option("config", config_path, "experiment config (JSON)")->required();

  auto* info = app.add_subcommand("info", "describe an artifact");
  info->add_option("artifact", artifact, "volume, CSV table or manifest")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*forward) {
      const auto config = load_config(config_path);
      const auto r = run_forward(config);
      std::cout << "forward: " << r.oct.frequencies.size() << " frequencies, " << r.oct.directions.size()
                << " directions, " << config.grid.size() << " voxels\n";
      print_files(config.output, r.files);
    } else if (*invert) {
      const auto config = load_config(config_path);
      const auto oct = read_oct_csv(oct_path);
      const auto pat = read_pat_record(pat_path);
      const auto r = run_inversion(config, oct, pat);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      const auto& d = r.estimate.diagnostics;
      std::cout << "invert: " << r.cone.size() << " cone samples, operator norm " << r.fredholm.operator_norm
                << ", data residual " << d.data_residual << ", mask fraction " << d.mask_fraction << '\n';
      print_files(config.output, r.files);
    } else if (*verify) {
      const auto config = load_config(config_path);
      const auto results = run_verify(config);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << format_check(r) << '\n';
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    } else if (*info) {
      std::cout << describe_artifact(artifact);
    }
  } catch (const Error& e) {
    std::cerr << "pactomo: " << category_name(e.category()) << " error: " << e.what() << '\n';
    return int(e.category());
  } catch (const std::exception& e) {
    std::cerr << "pactomo: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
