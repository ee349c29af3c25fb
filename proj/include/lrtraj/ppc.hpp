#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lrtraj/sampler.hpp"

namespace lrtraj {

/* Lazy posterior-predictive replicate generator. Replicate j is a full
 * synthetic copy of the dataset generated at the observed design points
 * from the j-th post-warmup draw, with the missingness mask preserved.
 * Nothing is materialized until asked for. */
class Replicates {
 public:
  Replicates(const PosteriorDraws& draws, const LongitudinalDataset& data,
             const ModelSpec& spec);

  int count() const { return static_cast<int>(rows_.size()); }
  ParameterState state(int j) const;
  LongitudinalDataset datasetForDraw(int j) const;

  const std::vector<GibbsKernel::CellInfo>& cells() const { return cells_; }

  /* Standardized residuals for draw j, aligned with cells(). The observed
   * residual is (y - mu)/sd and the replicated one uses a fresh error draw,
   * where mu folds the error's mean shift into the fitted trajectory and sd
   * is the error standard deviation for that factor and age window. */
  void residuals(int j, std::vector<double>* observed,
                 std::vector<double>* replicated) const;

 private:
  const PosteriorDraws& draws_;
  LongitudinalDataset data_;
  GibbsKernel kernel_;
  std::vector<GibbsKernel::CellInfo> cells_;
  std::vector<int> rows_;
};

struct DiscrepancyEntry {
  std::string key;                 // e.g. "sbp:dbp" or "young:full:sbp"
  std::vector<double> observed;    // statistic per contributing draw
  std::vector<double> replicated;
  int successes = 0;               // draws with replicated >= observed
  double ppp() const {
    return observed.empty() ? 0.0
                            : static_cast<double>(successes) /
                                  static_cast<double>(observed.size());
  }
};

struct DiscrepancyReport {
  std::string check;
  std::vector<DiscrepancyEntry> entries;
};

/* Cross-factor correlation of within-participant residual pairs, compared
 * between observed and replicated data. sameAge pairs cells from the same
 * exam (distinct factors); otherwise all ordered cross-exam pairs within a
 * participant are used and same-factor pairs are included. Requires draws
 * from a no-cohort fit. */
DiscrepancyReport withinSubjectCorrelationPPP(const PosteriorDraws& draws,
                                              const LongitudinalDataset& data,
                                              const ModelSpec& spec,
                                              bool sameAge);

/* Correlation across cohort pairs of window-averaged residuals, per factor.
 * Cohort pairs sharing fewer than two populated windows are absent.
 * Requires draws from a no-participant fit. */
DiscrepancyReport crossCohortCorrelationPPP(const PosteriorDraws& draws,
                                            const LongitudinalDataset& data,
                                            const ModelSpec& spec);

struct VarianceRatioEntry {
  std::string factor;
  int window = 0;
  double ratio = 0.0;  // mean over draws of Var(obs resid)/Var(rep resid)
  int cellCount = 0;
};

/* Per (factor, window) mean variance ratio; windows with fewer than two
 * observed cells are omitted. */
std::vector<VarianceRatioEntry> varianceRatio(const PosteriorDraws& draws,
                                              const LongitudinalDataset& data,
                                              const ModelSpec& spec);

struct QqTable {
  std::vector<std::string> factors;
  std::vector<double> probs;                    // 199 points, 0.005..0.995
  std::vector<std::vector<double>> observed;    // [factor][prob]
  std::vector<std::vector<double>> replicated;  // [factor][prob]
};

/* Paired empirical quantiles of observed vs replicated standardized
 * residuals, pooled over cells and (at most maxDraws equally spaced)
 * post-warmup draws. */
QqTable qqExport(const PosteriorDraws& draws, const LongitudinalDataset& data,
                 const ModelSpec& spec, int maxDraws = 256);

/* Matched quantiles of two raw residual pools on the standard 199-point
 * probability grid. */
void pairedQuantiles(std::vector<float> observed, std::vector<float> replicated,
                     std::vector<double>* probs, std::vector<double>* qObserved,
                     std::vector<double>* qReplicated);

}  // namespace lrtraj
