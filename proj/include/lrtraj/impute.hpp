#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lrtraj/sampler.hpp"
#include "lrtraj/simulator.hpp"

namespace lrtraj {

struct ImputedDatasetSet {
  std::vector<LongitudinalDataset> datasets;
  std::vector<int> drawRows;  // posterior draw row feeding each copy
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(datasets.size()); }
};

/* Fills every missing cell of `data` from the posterior predictive
 * distribution, once per each of D equally spaced post-warmup draws.
 * Draws must come from a full-variant fit; participants unknown to that
 * fit get subject effects drawn fresh under the draw's covariance. */
ImputedDatasetSet imputeMissing(const PosteriorDraws& draws,
                                const LongitudinalDataset& data,
                                const ModelSpec& spec, int copies,
                                std::uint64_t seed);

struct PreservationEntry {
  std::string covariate;
  std::string coefficient;  // "level", "age", or "win<j>"
  std::string path;         // parameter path, empty when absent
  bool structurallyAbsent = false;
  double fullMean = 0.0;
  double probability = 0.0;  // Pr(deleted-fit draw >= full-fit mean)
};

/* Compares the deleted-data fit against the complete-data fit over every
 * fixed-effect coefficient of one factor. Coefficients the model never has
 * (birth-year strata never interact with age windows) appear flagged as
 * structurally absent so the table keeps its full shape. */
std::vector<PreservationEntry> fixedEffectPreservationCheck(
    const PosteriorDraws& fullFit, const PosteriorDraws& deletedFit,
    const std::string& factor);

struct PooledEstimate {
  double point = 0.0;
  double withinVariance = 0.0;   // mean of per-dataset variances
  double betweenVariance = 0.0;  // sample variance of points
  double totalVariance = 0.0;    // W + (1 + 1/D) B
  int count = 0;

  double sd() const;
};

/* Rubin's rules over (point, variance) pairs from D completed datasets. */
PooledEstimate rubinPool(
    const std::vector<std::pair<double, double>>& estimates);

/* Ordinary least-squares slope of one factor's observed values on age,
 * with its sampling variance. The downstream scalar estimator pooled in
 * the validation experiments. */
std::pair<double, double> ageSlopeEstimate(const LongitudinalDataset& data,
                                           int factor);

struct CoverageResult {
  int covered = 0;
  int total = 0;

  double fraction() const {
    return total == 0 ? 0.0
                      : static_cast<double>(covered) /
                            static_cast<double>(total);
  }
};

/* Fraction of held-out cells whose true value falls inside the central
 * `level` interval of the imputed values. Held-out cells whose record was
 * dropped outright (fully masked exams) are skipped. */
CoverageResult predictiveIntervalCoverage(const ImputedDatasetSet& imputed,
                                          const LongitudinalDataset& base,
                                          const ModelSpec& spec,
                                          const std::vector<HeldOutCell>& held,
                                          double level = 0.95);

}  // namespace lrtraj
