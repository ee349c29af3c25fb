#pragma once

#include <string>
#include <vector>

#include "lrtraj/sampler.hpp"

namespace lrtraj {

/* Nested split of chains into superchains for the convergence diagnostic:
 * draws[k][m] holds the post-warmup trace of subchain m in superchain k. */
double nestedRhatCore(const std::vector<std::vector<std::vector<double>>>& draws);

double nestedRhat(const PosteriorDraws& draws, const std::string& path);
double nestedRhatColumn(const PosteriorDraws& draws, int col);

struct ConvergenceEntry {
  std::string path;
  double rhat = 1.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceEntry> entries;
  int failures = 0;
  double threshold = 1.1;

  double failFraction() const {
    return entries.empty() ? 0.0
                           : static_cast<double>(failures) /
                                 static_cast<double>(entries.size());
  }
};

ConvergenceReport convergenceReport(const PosteriorDraws& draws,
                                    double threshold = 1.1);

}  // namespace lrtraj
