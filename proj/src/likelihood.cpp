#include "lrtraj/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrtraj {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double normalLogDensity(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

double halfCauchyLogDensity(double x, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  const double z = x / scale;
  return std::log(2.0) - std::log(M_PI) - std::log(scale) - std::log1p(z * z);
}

double multivariateLgamma(int p, double a) {
  double r = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int j = 1; j <= p; ++j) r += std::lgamma(a + 0.5 * (1.0 - j));
  return r;
}

double mvnLogDensity(const Eigen::VectorXd& x, const Eigen::MatrixXd& cov) {
  const Eigen::Index n = x.size();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("mvn covariance is not positive definite");
  Eigen::MatrixXd Lm = llt.matrixL();
  const double logDet = Lm.diagonal().array().log().sum();
  Eigen::VectorXd z = Lm.triangularView<Eigen::Lower>().solve(x);
  return -0.5 * n * kLog2Pi - logDet - 0.5 * z.squaredNorm();
}

double inverseWishartLogDensity(const Eigen::MatrixXd& X, double df,
                                const Eigen::MatrixXd& scale) {
  const int p = static_cast<int>(X.rows());
  Eigen::LLT<Eigen::MatrixXd> lltX(X);
  if (lltX.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  Eigen::LLT<Eigen::MatrixXd> lltS(scale);
  if (lltS.info() != Eigen::Success)
    throw std::runtime_error("inverse-Wishart scale is not positive definite");
  Eigen::MatrixXd Lx = lltX.matrixL();
  Eigen::MatrixXd Ls = lltS.matrixL();
  const double logDetX = 2.0 * Lx.diagonal().array().log().sum();
  const double logDetS = 2.0 * Ls.diagonal().array().log().sum();
  const double trace = lltX.solve(scale).trace();
  return 0.5 * df * logDetS - 0.5 * df * p * std::log(2.0) -
         multivariateLgamma(p, 0.5 * df) -
         0.5 * (df + p + 1.0) * logDetX - 0.5 * trace;
}

std::vector<std::vector<Eigen::VectorXd>> buildAllBetas(
    const ParameterState& s, const LongitudinalDataset& data,
    const ModelSpec& spec) {
  const int L = spec.L();
  std::vector<std::vector<Eigen::VectorXd>> beta(
      data.participants.size(),
      std::vector<Eigen::VectorXd>(static_cast<size_t>(L)));
  for (size_t i = 0; i < data.participants.size(); ++i) {
    const Participant& p = data.participants[i];
    Eigen::VectorXd x =
        covariateVector(p.raceBlack, p.eduHs, p.eduHsPlus, p.birthYear, spec);
    for (int l = 0; l < L; ++l) {
      Eigen::Vector2d subj;
      const Eigen::Vector2d* subjPtr = nullptr;
      if (s.hasSubject()) {
        subj = s.subject(static_cast<int>(i), l);
        subjPtr = &subj;
      }
      Eigen::VectorXd coh;
      const Eigen::VectorXd* cohPtr = nullptr;
      if (s.hasCohort()) {
        coh = s.cohortEffect[static_cast<size_t>(l)].row(p.cohort).transpose();
        cohPtr = &coh;
      }
      beta[i][static_cast<size_t>(l)] =
          buildBeta(x, s.alpha[static_cast<size_t>(l)], subjPtr, cohPtr, spec);
    }
  }
  return beta;
}

double logLikelihoodObserved(const ParameterState& s,
                             const LongitudinalDataset& data,
                             const ModelSpec& spec) {
  const int L = spec.L();
  auto beta = buildAllBetas(s, data, spec);
  double total = 0.0;
  for (const Record& r : data.records) {
    const int w = spec.windowIndex(r.age);
    Eigen::VectorXd basis = buildBasis(r.age, spec);
    for (int l = 0; l < L; ++l) {
      if (!r.isObserved(l)) continue;
      const double mu =
          basis.dot(beta[static_cast<size_t>(r.participant)][static_cast<size_t>(l)]);
      total += skewNormalLogDensity(r.y[l] - mu, s.omega(l, w), s.psi[l]);
    }
  }
  return total;
}

double logPrior(const ParameterState& s, const PriorSettings& prior) {
  const int L = static_cast<int>(s.alpha.size());
  const int P = static_cast<int>(s.omega.cols());
  double total = 0.0;
  for (int l = 0; l < L; ++l)
    for (Eigen::Index j = 0; j < s.alpha[static_cast<size_t>(l)].size(); ++j)
      total += normalLogDensity(s.alpha[static_cast<size_t>(l)][j], 0.0,
                                prior.alphaSd);
  for (int l = 0; l < L; ++l) {
    total += normalLogDensity(s.psi[l], 0.0, prior.psiSd);
    for (int w = 0; w < P; ++w)
      total += halfCauchyLogDensity(s.omega(l, w), prior.omegaScale);
  }
  if (s.sigma.size() > 0) {
    const Eigen::MatrixXd eye =
        Eigen::MatrixXd::Identity(2 * L, 2 * L);
    const double iw = inverseWishartLogDensity(s.sigma, prior.sigmaDf(L), eye);
    total += iw;
    if (std::isfinite(iw))
      for (Eigen::Index i = 0; i < s.subjectEffect.cols(); ++i)
        total += mvnLogDensity(s.subjectEffect.col(i), s.sigma);
  }
  if (!s.lambda.empty() && s.lambda[0].rows() > 0) {
    const int K = static_cast<int>(s.lambda[0].rows());
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(K, K);
    for (int l = 0; l < L; ++l) {
      const double iw = inverseWishartLogDensity(
          s.lambda[static_cast<size_t>(l)], prior.lambdaDf(K), eye);
      total += iw;
      if (!std::isfinite(iw)) continue;
      const Eigen::MatrixXd& ce = s.cohortEffect[static_cast<size_t>(l)];
      for (Eigen::Index p = 0; p < ce.cols(); ++p)
        total += mvnLogDensity(ce.col(p), s.lambda[static_cast<size_t>(l)]);
    }
  }
  return total;
}

double logPosterior(const ParameterState& s, const LongitudinalDataset& data,
                    const ModelSpec& spec, const PriorSettings& prior) {
  return logLikelihoodObserved(s, data, spec) + logPrior(s, prior);
}

}  // namespace lrtraj
