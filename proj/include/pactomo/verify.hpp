#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pactomo {

/// Outcome of one property or oracle check.
struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// "PASS name measured=... tolerance=... detail" on one line.
std::string format_check(const CheckResult& result);

/// Linearity of the detector field in the illumination for three
/// pulse/polarization configurations (Born model) on an n^3 phantom; the
/// largest relative violation must stay below 1e-8.
CheckResult check_oct_linearity_suite(std::size_t n = 16);

/// Relative gap between h~ from the Born far field and from the
/// Lippmann-Schwinger far field over a four-point contrast sweep; the
/// log-log slope must be 1 within 0.15.
CheckResult check_born_scaling();

/// Frequency-domain kernel against the time-domain retarded-field oracle for
/// a Gaussian-blob current at `probes` points (at most 3); 1% relative.
CheckResult check_retarded_oracle(std::size_t probes = 3);

/// Time route against spectral route of the absorbed energy on random
/// band-limited fixtures; 1e-8 relative.
CheckResult check_plancherel(std::size_t fixtures = 20, std::uint64_t seed = 1);

/// Discrete Hilbert transform of the Lorentzian real part against the
/// analytic imaginary part over the interior 80% of the lattice; 1%.
CheckResult check_kramers_kronig();

/// h~ at R and 2R; 1e-10 relative.
CheckResult check_r_cancellation();

/// With a zero residual the second-kind solve returns the data exactly.
CheckResult check_fredholm_identity();

/// Manufactured solution with operator norm rescaled to 0.45; recovery
/// within 10 times the solver tolerance.
CheckResult check_manufactured_solution(double tol = 1e-10);

/// Conjugate extension of the half lattice against an explicit symmetric
/// +-omega lattice in the absorbed-energy integral. `broken` perturbs one
/// negative-frequency value of the fixture.
CheckResult check_symmetry(bool broken = false);

/// Names accepted by run_checks, in default order.
const std::vector<std::string>& default_check_names();
const std::vector<std::string>& all_check_names();

/// Runs the named checks; `fault` names a check whose fixture is broken
/// deliberately (only "symmetry" supports it). Unknown names throw.
std::vector<CheckResult> run_checks(const std::vector<std::string>& names,
                                    const std::string& fault = {});

}  // namespace pactomo
