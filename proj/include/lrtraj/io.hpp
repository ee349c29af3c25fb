#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lrtraj/impute.hpp"
#include "lrtraj/ppc.hpp"
#include "lrtraj/rhat.hpp"
#include "lrtraj/sampler.hpp"
#include "lrtraj/simulator.hpp"

namespace lrtraj {

/* Shortest round-trip decimal form of a finite double. */
std::string formatDouble(double v);

struct IngestReport {
  int droppedFullyMissing = 0;
  std::vector<std::vector<int>> recordCount;   // [cohort][factor] scheduled
  std::vector<std::vector<int>> missingCount;  // [cohort][factor]

  double missingPercent(int cohort, int factor) const;
};

/* Long-format CSV dataset files.
 *
 * Schema (exact): header
 *   cohort,participant,sex,age,race_black,edu_hs,edu_hsplus,birth_year,rf_1,...,rf_L
 * one row per exam, missing marker NA, UTF-8, LF line endings. Exams with
 * every factor missing are dropped on ingest (counted in the report). */
void emitDataset(const LongitudinalDataset& data, const std::string& path);
LongitudinalDataset ingestDataset(const std::string& path,
                                  const ModelSpec& spec,
                                  IngestReport* report = nullptr);

void saveMissingnessReport(const IngestReport& report,
                           const LongitudinalDataset& data,
                           const ModelSpec& spec, const std::string& path);

/* Posterior draws: one CSV row per draw with superchain/subchain/iteration/
 * warmup key columns followed by one column per scalar parameter, plus a
 * sidecar metadata file (seed, variant, chain dimensions) next to it. */
void saveDraws(const PosteriorDraws& draws, const std::string& csvPath);
PosteriorDraws loadDraws(const std::string& csvPath, const ModelSpec& spec,
                         const LongitudinalDataset& data);
std::string drawsMetaPath(const std::string& csvPath);

void saveConvergence(const ConvergenceReport& report, const std::string& path);

void saveGroundTruth(const GroundTruth& truth, const ParamLayout& layout,
                     const std::string& path);
GroundTruth loadGroundTruth(const std::string& path, const ParamLayout& layout);

void saveHeldOut(const std::vector<HeldOutCell>& cells,
                 const std::string& path);
std::vector<HeldOutCell> loadHeldOut(const std::string& path);

void saveDiscrepancyReport(const DiscrepancyReport& report,
                           const std::string& path);
void saveVarianceRatios(const std::vector<VarianceRatioEntry>& entries,
                        const std::string& path);
void saveQqTable(const QqTable& table, const std::string& path);
void savePreservationTable(const std::vector<PreservationEntry>& table,
                           const std::string& path);

/* estimate,variance rows for Rubin's-rules pooling */
std::vector<std::pair<double, double>> loadEstimates(const std::string& path);
void saveEstimates(const std::vector<std::pair<double, double>>& estimates,
                   const std::string& path);
void savePooled(const PooledEstimate& pooled, const std::string& path);

/* Run configuration: a single JSON document, unknown keys rejected.
 *
 *   {
 *     "seed": 42,                 // required
 *     "data": "data.csv",         // dataset path (fit/ppc/impute/delete)
 *     "output_dir": "out",        // required
 *     "truth": "truth.json",      // optional, for truth-jitter init
 *     "model": { "risk_factors": [...], "age_min": ..., "age_max": ...,
 *                "breakpoints": [...], "birth_year_cuts": [...],
 *                "sex_stratum": "M", "birth_year_age_interaction": true },
 *     "sampler": { "superchains": ..., "subchains": ..., "iterations": ...,
 *                  "warmup": ..., "init": "subsample-posterior",
 *                  "subsample_fraction": 0.1, "initial_step": 0.25 },
 *     "simulate": { "profiles": [ {...}, ... ] },   // optional overrides
 *     "experiment": { "deletions": [ {"factor": "...", "age_below": ...,
 *                                     "cohort": "..."} ],
 *                     "imputations": 128, "qq_draws": 256 }
 *   }
 *
 * model.risk_factors is required; everything else in model/sampler defaults.
 * simulate.profiles defaults to the built-in three-cohort design. */
struct RunConfig {
  std::uint64_t seed = 0;
  std::string dataPath;
  std::string outputDir;
  std::string truthPath;
  ModelSpec model;
  SamplerConfig sampler;
  std::vector<CohortProfile> profiles;
  std::vector<DeletionRule> deletions;
  int imputations = 128;
  int qqDraws = 256;
};

RunConfig loadConfig(const std::string& path);

}  // namespace lrtraj
