#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "lrtraj/likelihood.hpp"
#include "oracles.hpp"

using namespace lrtraj;

namespace {

ParamLayout makeLayout(const ModelSpec& spec, const LongitudinalDataset& data,
                       Variant v) {
  std::vector<std::string> ids;
  for (const auto& p : data.participants) ids.push_back(p.id);
  return ParamLayout(spec, data.cohorts, ids, v);
}

double refHalfCauchy(double x, double s) {
  return std::log(2.0) - std::log(M_PI) - std::log(s) -
         std::log1p((x / s) * (x / s));
}

/* textbook prior sum over whatever blocks the state carries */
double refPrior(const ParameterState& s, const PriorSettings& prior) {
  const int L = static_cast<int>(s.alpha.size());
  double total = 0.0;
  for (const auto& a : s.alpha)
    for (Eigen::Index j = 0; j < a.size(); ++j)
      total += normalLogDensity(a[j], 0.0, prior.alphaSd);
  for (int l = 0; l < L; ++l) {
    total += normalLogDensity(s.psi[l], 0.0, prior.psiSd);
    for (Eigen::Index w = 0; w < s.omega.cols(); ++w)
      total += refHalfCauchy(s.omega(l, w), prior.omegaScale);
  }
  if (s.sigma.size() > 0) {
    const Eigen::Index d = s.sigma.rows();
    total += oracle::invWishartLogDensity(
        s.sigma, prior.sigmaDf(L), Eigen::MatrixXd::Identity(d, d));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < s.subjectEffect.cols(); ++i)
      total += oracle::mvnLogDensity(s.subjectEffect.col(i), zero, s.sigma);
  }
  if (!s.lambda.empty() && s.lambda[0].rows() > 0) {
    const Eigen::Index K = s.lambda[0].rows();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(K);
    for (int l = 0; l < L; ++l) {
      total += oracle::invWishartLogDensity(
          s.lambda[static_cast<std::size_t>(l)], prior.lambdaDf(static_cast<int>(K)),
          Eigen::MatrixXd::Identity(K, K));
      const auto& ce = s.cohortEffect[static_cast<std::size_t>(l)];
      for (Eigen::Index p = 0; p < ce.cols(); ++p)
        total += oracle::mvnLogDensity(ce.col(p), zero,
                                       s.lambda[static_cast<std::size_t>(l)]);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("scalar log-densities match their closed forms") {
  CHECK(normalLogDensity(0.0, 0.0, 1.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  const double x = 1.3, m = 0.2, sd = 2.0;
  CHECK(normalLogDensity(x, m, sd) ==
        doctest::Approx(std::log(1.0 / (sd * std::sqrt(2.0 * M_PI)) *
                                 std::exp(-0.5 * (x - m) * (x - m) / (sd * sd))))
            .epsilon(1e-12));

  CHECK(halfCauchyLogDensity(1.0, 1.0) ==
        doctest::Approx(-std::log(M_PI)).epsilon(1e-14));
  for (double v : {0.1, 0.7, 3.0, 25.0})
    CHECK(halfCauchyLogDensity(v, 2.5) ==
          doctest::Approx(refHalfCauchy(v, 2.5)).epsilon(1e-13));
  CHECK(std::isinf(halfCauchyLogDensity(0.0, 1.0)));
  CHECK(std::isinf(halfCauchyLogDensity(-2.0, 1.0)));

  for (int p = 1; p <= 4; ++p)
    for (double a : {2.5, 4.0, 7.5})
      CHECK(multivariateLgamma(p, a) ==
            doctest::Approx(oracle::logMultiGamma(p, a)).epsilon(1e-13));
}

TEST_CASE("matrix log-densities match textbook formulas") {
  Rng rng = Rng::stream(61, 0);
  Eigen::MatrixXd m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = rng.normal();
  const Eigen::MatrixXd cov =
      m * m.transpose() + Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd x(3);
  x << 0.4, -1.1, 2.2;

  CHECK(mvnLogDensity(x, cov) ==
        doctest::Approx(oracle::mvnLogDensity(x, Eigen::VectorXd::Zero(3), cov))
            .epsilon(1e-12));
  CHECK_THROWS_AS(mvnLogDensity(x, -cov), std::runtime_error);

  const Eigen::MatrixXd X = cov + 0.5 * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(3, 3);
  CHECK(inverseWishartLogDensity(X, 7.0, S) ==
        doctest::Approx(oracle::invWishartLogDensity(X, 7.0, S))
            .epsilon(1e-12));
  CHECK(std::isinf(inverseWishartLogDensity(-X, 7.0, S)));
  CHECK_THROWS_AS(inverseWishartLogDensity(X, 7.0, -S), std::runtime_error);
}

TEST_CASE("observed-data log-likelihood sums the right cells") {
  const ModelSpec spec = testutil::toySpec2();
  LongitudinalDataset data = testutil::toyData(spec, 2, 3, 19);
  data.records[1].observed[0] = 0;
  data.records[1].y[0] = std::numeric_limits<double>::quiet_NaN();
  data.records[4].observed[1] = 0;
  data.records[4].y[1] = std::numeric_limits<double>::quiet_NaN();

  for (Variant v : {Variant::Full, Variant::NoCohort, Variant::NoParticipant}) {
    CAPTURE(variantName(v));
    Rng rng = Rng::stream(62, static_cast<std::uint64_t>(v));
    const ParamLayout layout = makeLayout(spec, data, v);
    const ParameterState s = testutil::randomState(layout, rng);

    double expect = 0.0;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      const Record& r = data.records[i];
      const int w = spec.windowIndex(r.age);
      for (int l = 0; l < spec.L(); ++l) {
        if (!r.isObserved(l)) continue;
        const double mu =
            oracle::cellMean(spec, s, data, static_cast<int>(i), l);
        expect += skewNormalLogDensity(r.y[l] - mu, s.omega(l, w), s.psi[l]);
      }
    }
    CHECK(logLikelihoodObserved(s, data, spec) ==
          doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("slope vectors carry the effects the state has") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 2, 23);
  Rng rng = Rng::stream(63, 0);
  const ParamLayout layout = makeLayout(spec, data, Variant::Full);
  const ParameterState s = testutil::randomState(layout, rng);

  const auto beta = buildAllBetas(s, data, spec);
  REQUIRE(beta.size() == data.participants.size());
  REQUIRE(beta[0].size() == 2);
  CHECK(beta[0][0].size() == spec.P() + 2);

  ParameterState bare = s;
  bare.subjectEffect.resize(0, 0);
  bare.cohortEffect.clear();
  const auto betaBare = buildAllBetas(bare, data, spec);
  // subject effects shift only the level and age entries
  const Eigen::VectorXd diff = beta[1][0] - betaBare[1][0] -
                               s.cohortEffect[0].row(
                                    data.participants[1].cohort).transpose();
  CHECK(diff[0] == doctest::Approx(s.subjectEffect(0, 1)).epsilon(1e-12));
  CHECK(diff[1] == doctest::Approx(s.subjectEffect(1, 1)).epsilon(1e-12));
  for (int q = 2; q < spec.P() + 2; ++q)
    CHECK(diff[q] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("joint prior follows the textbook factorization") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 3, 29);
  const PriorSettings prior;
  CHECK(prior.alphaSd == 10.0);
  CHECK(prior.omegaScale == 2.5);
  CHECK(prior.sigmaDf(2) == 6.0);
  CHECK(prior.lambdaDf(3) == 5.0);

  for (Variant v : {Variant::Full, Variant::NoCohort, Variant::NoParticipant}) {
    CAPTURE(variantName(v));
    Rng rng = Rng::stream(64, static_cast<std::uint64_t>(v));
    const ParamLayout layout = makeLayout(spec, data, v);
    const ParameterState s = testutil::randomState(layout, rng);
    CHECK(logPrior(s, prior) ==
          doctest::Approx(refPrior(s, prior)).epsilon(1e-10));
    CHECK(logPosterior(s, data, spec, prior) ==
          doctest::Approx(logLikelihoodObserved(s, data, spec) +
                          logPrior(s, prior))
              .epsilon(1e-12));
  }
}

TEST_CASE("impossible states get a log-prior of negative infinity") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 2, 31);
  const PriorSettings prior;
  Rng rng = Rng::stream(65, 0);
  const ParamLayout layout = makeLayout(spec, data, Variant::Full);
  const ParameterState good = testutil::randomState(layout, rng);
  REQUIRE(std::isfinite(logPrior(good, prior)));

  ParameterState bad = good;
  bad.omega(0, 0) = 0.0;
  CHECK(std::isinf(logPrior(bad, prior)));

  bad = good;
  bad.sigma = -Eigen::MatrixXd::Identity(4, 4);
  CHECK(std::isinf(logPrior(bad, prior)));

  bad = good;
  bad.lambda[1] = -Eigen::MatrixXd::Identity(2, 2);
  CHECK(std::isinf(logPrior(bad, prior)));
}

TEST_CASE("skew-normal density stays finite deep in the tail") {
  CHECK(std::isfinite(skewNormalLogDensity(-30.0, 1.0, 3.0)));
  CHECK(std::isfinite(skewNormalLogDensity(200.0, 0.5, -2.0)));
  // moderate-range closed form
  const double e = 0.7, om = 1.3, ps = -0.4;
  const double z = e / om;
  const double ref = std::log(2.0) - std::log(om) -
                     0.5 * std::log(2.0 * M_PI) - 0.5 * z * z +
                     std::log(0.5 * std::erfc(-ps * z / std::sqrt(2.0)));
  CHECK(skewNormalLogDensity(e, om, ps) == doctest::Approx(ref).epsilon(1e-13));
}
