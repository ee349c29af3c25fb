#pragma once

#include <Eigen/Dense>

#include "lrtraj/covariance.hpp"
#include "lrtraj/dataset.hpp"
#include "lrtraj/model.hpp"
#include "lrtraj/state.hpp"

namespace lrtraj {

/* Prior hyperparameters. Covariance scale matrices are identity; degrees of
 * freedom are dimension + 2 so the priors are proper but weak. */
struct PriorSettings {
  double alphaSd = 10.0;
  double psiSd = 10.0;
  double omegaScale = 2.5;  // half-Cauchy scale

  double sigmaDf(int L) const { return 2.0 * L + 2.0; }
  double lambdaDf(int K) const { return K + 2.0; }
};

double normalLogDensity(double x, double mean, double sd);
double halfCauchyLogDensity(double x, double scale);  // -inf for x <= 0
double multivariateLgamma(int p, double a);

/* Zero-mean multivariate normal log-density. */
double mvnLogDensity(const Eigen::VectorXd& x, const Eigen::MatrixXd& cov);

double inverseWishartLogDensity(const Eigen::MatrixXd& X, double df,
                                const Eigen::MatrixXd& scale);

/* Per-factor slope vectors for every participant: beta[i][l], each length
 * P+2, with whatever subject and cohort effects the state carries. */
std::vector<std::vector<Eigen::VectorXd>> buildAllBetas(
    const ParameterState& s, const LongitudinalDataset& data,
    const ModelSpec& spec);

/* Observed-data log-likelihood: skew-normal density of every observed cell
 * around its trajectory mean. */
double logLikelihoodObserved(const ParameterState& s,
                             const LongitudinalDataset& data,
                             const ModelSpec& spec);

/* Joint log-prior of the state, including the hierarchical terms for the
 * subject and cohort effects it carries. */
double logPrior(const ParameterState& s, const PriorSettings& prior);

double logPosterior(const ParameterState& s, const LongitudinalDataset& data,
                    const ModelSpec& spec, const PriorSettings& prior);

}  // namespace lrtraj
