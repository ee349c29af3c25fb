#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lrtraj/model.hpp"
#include "lrtraj/rng.hpp"

namespace lrtraj {

/* Block-scaled product: the (l, l') 2x2 block of the result is
 * gamma(l, l') * Delta_block(l, l'). Validates that the result is symmetric
 * positive definite. */
Eigen::MatrixXd blockKronecker(const Eigen::MatrixXd& Delta,
                               const Eigen::MatrixXd& Gamma);

/* Cholesky factor with SPD failure reported as std::runtime_error naming the
 * offending leading minor. */
Eigen::MatrixXd choleskyLower(const Eigen::MatrixXd& m, const char* what);

/* Draw from N(0, cov). An exactly zero matrix yields an exact zero draw. */
Eigen::VectorXd mvnDraw(const Eigen::MatrixXd& cov, Rng& rng);

/* Wishart(df, scale) via the Bartlett decomposition; df > dim - 1. */
Eigen::MatrixXd wishartDraw(double df, const Eigen::MatrixXd& scale, Rng& rng);

/* Inverse-Wishart(df, scale): inverse of a Wishart(df, scale^[-1]) draw. */
Eigen::MatrixXd inverseWishartDraw(double df, const Eigen::MatrixXd& scale,
                                   Rng& rng);

/* Subject effects: 2xL matrix whose vectorization (stacked per factor:
 * (level_1, slope_1, level_2, slope_2, ...)) is N(0, Sigma). */
Eigen::MatrixXd sampleSubjectEffects(const Eigen::MatrixXd& Sigma, Rng& rng);

/* Cohort effects for one factor: K x (P+2) matrix; column p is an
 * independent N(0, Lambda) draw across cohorts. */
Eigen::MatrixXd sampleCohortEffects(const Eigen::MatrixXd& Lambda, int coeffCount,
                                    Rng& rng);

struct SkewNormal {
  double omega = 1.0;  // scale, > 0
  double psi = 0.0;    // shape

  double delta() const { return psi / std::sqrt(1.0 + psi * psi); }
  double mean() const;
  double variance() const;
  double sd() const { return std::sqrt(variance()); }
  double logDensity(double e) const;
  double draw(Rng& rng) const;  // omega * (delta*|Z0| + sqrt(1-delta^2)*Z1)
};

double skewNormalDraw(double omega, double psi, Rng& rng);
double skewNormalLogDensity(double e, double omega, double psi);

/* Population-level parameters entering the closed-form moments. */
struct PopulationParams {
  Eigen::MatrixXd Delta;               // 2L x 2L
  Eigen::MatrixXd Gamma;               // L x L
  std::vector<Eigen::MatrixXd> Lambda; // per factor, K x K
  Eigen::MatrixXd omega;               // L x P error scales
  Eigen::VectorXd psi;                 // L

  int L() const { return static_cast<int>(Gamma.rows()); }
  int K() const { return Lambda.empty() ? 0 : static_cast<int>(Lambda[0].rows()); }
  Eigen::MatrixXd sigma() const { return blockKronecker(Delta, Gamma); }
  double errorVariance(int l, int window) const;  // skew-normal variance
};

/* The six same/cross subject-cohort-factor configurations with closed-form
 * second moments. */
enum class MomentCase {
  SameSubjectSameFactor,         // variance
  SameSubjectCrossFactor,        // same exam age
  SameCohortCrossSubject,        // same factor
  SameCohortCrossSubjectCrossFactor,  // identically zero
  CrossCohortSameFactor,
  CrossCohortCrossFactor,        // identically zero
};

/* Arguments for a pair of observations. Fields not used by a case are
 * ignored; same-subject cases require a == aPrime. */
struct MomentArgs {
  int l = 0, lPrime = 0;
  int k = 0, kPrime = 0;
  double a = 0.0, aPrime = 0.0;
};

double analyticVariance(int l, int k, double a, const PopulationParams& params,
                        const ModelSpec& spec);
double analyticCovariance(MomentCase c, const MomentArgs& args,
                          const PopulationParams& params, const ModelSpec& spec);
double analyticCorrelation(MomentCase c, const MomentArgs& args,
                           const PopulationParams& params, const ModelSpec& spec);

}  // namespace lrtraj
