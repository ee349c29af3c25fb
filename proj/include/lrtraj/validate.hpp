#pragma once

#include <functional>
#include <string>
#include <vector>

namespace lrtraj {

/* Kolmogorov-Smirnov distance of a sample against a reference CDF, and the
 * asymptotic p-value (with the small-sample correction of the usual
 * lambda = D (sqrt(n) + 0.12 + 0.11/sqrt(n)) form). */
double ksStatistic(std::vector<double> sample,
                   const std::function<double(double)>& cdf);
double kolmogorovPValue(double d, std::size_t n);

struct AcceptanceOptions {
  std::string cliPath;  // binary exercised by the determinism criterion
  std::string outDir;   // scratch space and report location
};

/* Runs the ten acceptance criteria, printing one PASS/FAIL line each and
 * writing the same lines to <outDir>/acceptance_report.txt. Returns true
 * when every criterion passes. */
bool runAcceptance(const AcceptanceOptions& options);

}  // namespace lrtraj
