#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lrtraj/covariance.hpp"
#include "lrtraj/dataset.hpp"
#include "lrtraj/model.hpp"
#include "lrtraj/state.hpp"

namespace lrtraj {

/* Block missingness: one factor unobserved below an age or not collected at
 * all in the cohort. */
struct BlockMissingRule {
  int factor = 0;
  double belowAge = std::numeric_limits<double>::quiet_NaN();
  bool entirely = false;
};

/* One synthetic cohort: enrollment window, exam schedule, covariate mix and
 * missingness plan. */
struct CohortProfile {
  std::string name;
  std::string sex = "M";
  double enrollAgeLo = 18.0;
  double enrollAgeHi = 30.0;
  double followUpYears = 30.0;
  double examSpacingYears = 3.0;
  int participantCount = 100;
  double pBlack = 0.25;
  double pEduHs = 0.35;
  double pEduHsPlus = 0.40;  // remainder is the reference category
  std::array<double, 4> birthYearMix{0.25, 0.25, 0.25, 0.25};
  std::vector<double> missRate;  // per factor, per-exam missing probability
  std::vector<BlockMissingRule> blockRules;

  void validate(const ModelSpec& spec) const;
};

/* Generating parameters plus the realized random effects, kept for
 * parameter-recovery and imputation-coverage checks. */
struct GroundTruth {
  ParameterState state;
  std::uint64_t seed = 0;
};

struct SimulationResult {
  LongitudinalDataset data;
  GroundTruth truth;
};

/* The population part of a desk-scale ground truth: alpha, Sigma (also
 * returned in factored Delta/Gamma form for the moment formulas), Lambda,
 * omega, psi. Random-effect blocks are left empty. */
struct DeskTruth {
  ParameterState state;
  Eigen::MatrixXd delta;  // 2L x 2L
  Eigen::MatrixXd gamma;  // L x L

  PopulationParams population() const;
};

DeskTruth defaultDeskTruth(const ModelSpec& spec, int K);

/* Three cohorts mimicking a young-enrollment, a mid-age and a full-lifespan
 * study, 100 participants each. */
std::vector<CohortProfile> deskProfiles(int L);

/* Generate a dataset under the given truth. truth must carry population
 * blocks; subject and cohort effects are drawn here (cohort effects once per
 * cohort, jointly across cohorts). Exams outside the spec age range and
 * fully-missing exams are dropped. */
SimulationResult simulateDataset(const std::vector<CohortProfile>& profiles,
                                 const ModelSpec& spec,
                                 const ParameterState& truth,
                                 std::uint64_t seed);

/* Deletion experiment: mask observed values of one factor, restricted by age
 * and/or cohort. factor is required plus at least one restriction. */
struct DeletionRule {
  std::string factor;
  double ageBelow = std::numeric_limits<double>::quiet_NaN();
  std::string cohort;  // empty = any cohort

  bool hasAgeBelow() const { return ageBelow == ageBelow; }
};

struct HeldOutCell {
  std::string participant;
  double age = 0.0;
  std::string factor;
  double value = 0.0;
};

struct DeletionResult {
  LongitudinalDataset data;
  std::vector<HeldOutCell> heldOut;
  std::size_t droppedRecords = 0;  // records left with no observed factor
};

DeletionResult applyDeletionExperiment(const LongitudinalDataset& data,
                                       const DeletionRule& rule,
                                       const ModelSpec& spec);

}  // namespace lrtraj
