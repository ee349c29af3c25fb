#pragma once

/* Independent reference implementations used only by the tests. Everything
 * here is written from the documented conventions with its own arithmetic,
 * so agreement with the library is evidence rather than tautology. */

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "lrtraj/dataset.hpp"
#include "lrtraj/model.hpp"
#include "lrtraj/state.hpp"

namespace oracle {

/* Trajectory mean of one observed cell, rebuilt from scratch: covariate
 * coding, free-coefficient packing, sum-to-zero expansion, piecewise basis. */
double cellMean(const lrtraj::ModelSpec& spec, const lrtraj::ParameterState& s,
                const lrtraj::LongitudinalDataset& data, int record,
                int factor);

/* Textbook densities. */
double logMultiGamma(int p, double a);
double mvnLogDensity(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                     const Eigen::MatrixXd& cov);
double invWishartLogDensity(const Eigen::MatrixXd& x, double df,
                            const Eigen::MatrixXd& scale);

/* Composite Simpson rule with an even interval count. */
double simpson(const std::function<double(double)>& f, double lo, double hi,
               int intervals);

/* Small-sample statistics (divisor n-1 where it applies). */
double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);
double covariance(const std::vector<double>& a, const std::vector<double>& b);

/* Two-sample Kolmogorov-Smirnov distance. */
double ksTwoSample(std::vector<double> a, std::vector<double> b);

/* CDF of a normal truncated to [0, inf). */
double truncatedNormalCdf(double x, double mu, double sd);

}  // namespace oracle
