#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace lrtraj {

/* Baseline covariate coding, fixed by the data schema:
 *   0 intercept, 1 race_black, 2 edu_hs, 3 edu_hsplus,
 *   4 by_c2, 5 by_c3, 6 by_c4  (birth-year strata, reference = c1).
 * Reference categories: non-Black, less than high school, earliest
 * birth-year stratum. Intercept, race and education carry per-window slope
 * deviations; birth-year never does. Whether birth-year carries a linear-age
 * coefficient is a model switch. */
struct CovariateScheme {
  bool birthYearAgeInteraction = true;

  static constexpr int kCount = 7;
  int count() const { return kCount; }
  bool windowInteracting(int c) const { return c <= 3; }
  bool ageInteracting(int c) const { return c <= 3 || birthYearAgeInteraction; }
  int windowCount() const { return 4; }
  int ageCount() const { return birthYearAgeInteraction ? 7 : 4; }
  static const char* name(int c);
};

struct ModelSpec {
  std::vector<std::string> riskFactors;   // L names, also data column names
  double ageMin = 17.0;
  double ageMax = 100.0;
  std::vector<double> breakpoints = {28, 38, 48, 58, 68, 78};  // P-1 cuts
  std::vector<int> birthYearCuts = {1915, 1929, 1945};
  CovariateScheme covariates;
  std::string sexStratum = "M";  // fits run on one sex stratum at a time

  int L() const { return static_cast<int>(riskFactors.size()); }
  int P() const { return static_cast<int>(breakpoints.size()) + 1; }

  /* 0-based window index for an age; intervals are (lower, upper], the first
   * window closed below at ageMin. Ages outside [ageMin, ageMax] are a
   * domain error. */
  int windowIndex(double a) const;

  /* birth-year stratum 0..3 from the raw year */
  int birthYearStratum(int year) const;

  int factorIndex(const std::string& name) const;  // -1 if unknown

  void validate() const;  // throws std::invalid_argument on a bad spec

  static ModelSpec defaults(int L = 3);
};

/* Basis A(a) = (1, a, w_1(a), ..., w_P(a)), w_p(a) = a when a lies in
 * window p and 0 otherwise; length P + 2. */
Eigen::VectorXd buildBasis(double a, const ModelSpec& spec);

/* Expand P-1 free window-deviation coefficients to all P windows; the last
 * window's coefficient is the negative sum of the free ones, so the full
 * vector sums to zero. */
Eigen::VectorXd applyConstraint(const Eigen::VectorXd& freeAlpha);

/* Inner product of buildBasis(a) with a P+2 coefficient vector. */
double trajectory(double a, const Eigen::VectorXd& beta, const ModelSpec& spec);

/* Layout of one factor's fixed-effect coefficient vector (free form):
 *   [level coefficients | age coefficients | window deviations w=0..P-2
 *    for each window-interacting covariate].
 * The expanded deviation for the last window is determined by the
 * sum-to-zero constraint and is not stored. */
struct AlphaLayout {
  int P = 0;
  CovariateScheme cov;

  explicit AlphaLayout(const ModelSpec& spec)
      : P(spec.P()), cov(spec.covariates) {}
  AlphaLayout() = default;

  int levelOffset() const { return 0; }
  int ageOffset() const { return cov.count(); }
  int windowOffset() const { return cov.count() + cov.ageCount(); }
  int size() const { return windowOffset() + (P - 1) * cov.windowCount(); }

  int levelIndex(int c) const { return c; }
  /* c must be ageInteracting */
  int ageIndex(int c) const;
  /* w in 0..P-2; c must be windowInteracting (c in 0..3) */
  int windowIndex(int w, int c) const {
    return windowOffset() + w * cov.windowCount() + c;
  }

  /* Expanded deviation coefficient for window w (0..P-1) and covariate c;
   * zero when c does not interact with windows. */
  double windowDeviation(const Eigen::VectorXd& alpha, int w, int c) const;
};

/* Covariate design vector x for one participant (length kCount). */
Eigen::VectorXd covariateVector(int raceBlack, int eduHs, int eduHsPlus,
                                int birthYear, const ModelSpec& spec);

/* h_l^(p)(X) = X^T alpha_l^(p) with the window constraint expanded.
 * p = 0 level, p = 1 age slope, p >= 2 window p-2. */
double fixedSlopePart(const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                      int p, const ModelSpec& spec);

/* Fixed-effect design row for one exam: the coefficient vector dotted with
 * this row equals the fixed part of the trajectory at age a. */
Eigen::VectorXd alphaDesignRow(const Eigen::VectorXd& x, double a,
                               const ModelSpec& spec);

/* Slope vector beta of length P+2 for one (factor, participant, cohort):
 *   beta^(p) = h^(p)(X) + subject^(p)    (p = 0, 1; subject has length 2)
 *   beta^(p) = h^(p)(X)                   (p >= 2)
 * plus the cohort effect on every p when one is supplied. */
Eigen::VectorXd buildBeta(const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                          const Eigen::Vector2d* subject,
                          const Eigen::VectorXd* cohort, const ModelSpec& spec);

struct RankReport {
  Eigen::Index rows = 0;
  Eigen::Index columns = 0;
  Eigen::Index rank = 0;
  bool fullRank = false;
  double tolerance = 0.0;
  bool constrained = true;
};

class LongitudinalDataset;

/* Rank of the per-factor fixed-effect design over all records. With
 * constrained = false the design carries age plus all P window columns per
 * window-interacting covariate, which is structurally rank deficient. */
RankReport designMatrixRankCheck(const ModelSpec& spec,
                                 const LongitudinalDataset& data,
                                 bool constrained = true);

}  // namespace lrtraj
