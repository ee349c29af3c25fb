#include "lrtraj/covariance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrtraj {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)

double normalLogPdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }
double normalLogCdf(double z) {
  /* stable in the left tail via erfc */
  if (z > -8.0) return std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
  double l = std::log(0.5) + std::log(std::erfc(-z / std::sqrt(2.0)));
  if (std::isfinite(l)) return l;
  /* asymptotic tail */
  return normalLogPdf(z) - std::log(-z);
}
}  // namespace

Eigen::MatrixXd blockKronecker(const Eigen::MatrixXd& Delta,
                               const Eigen::MatrixXd& Gamma) {
  const Eigen::Index L = Gamma.rows();
  if (Gamma.cols() != L || Delta.rows() != 2 * L || Delta.cols() != 2 * L)
    throw std::invalid_argument("blockKronecker: Delta must be 2Lx2L, Gamma LxL");
  Eigen::MatrixXd Sigma(2 * L, 2 * L);
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index lp = 0; lp < L; ++lp)
      Sigma.block<2, 2>(2 * l, 2 * lp) =
          Gamma(l, lp) * Delta.block<2, 2>(2 * l, 2 * lp);
  if (!Sigma.isApprox(Sigma.transpose(), 1e-12))
    throw std::runtime_error("blockKronecker: result not symmetric");
  choleskyLower(Sigma, "blockKronecker result");
  return Sigma;
}

Eigen::MatrixXd choleskyLower(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    /* locate the offending leading minor for the report */
    Eigen::Index bad = m.rows();
    for (Eigen::Index d = 1; d <= m.rows(); ++d) {
      Eigen::LLT<Eigen::MatrixXd> sub(m.topLeftCorner(d, d));
      if (sub.info() != Eigen::Success) {
        bad = d;
        break;
      }
    }
    throw std::runtime_error(std::string(what) +
                             ": not positive definite (leading minor of order " +
                             std::to_string(bad) + ")");
  }
  return llt.matrixL();
}

Eigen::VectorXd mvnDraw(const Eigen::MatrixXd& cov, Rng& rng) {
  const Eigen::Index n = cov.rows();
  if (cov.isZero(0.0)) return Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd Lchol = choleskyLower(cov, "mvnDraw covariance");
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return Lchol * z;
}

Eigen::MatrixXd wishartDraw(double df, const Eigen::MatrixXd& scale, Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (!(df > static_cast<double>(p) - 1.0))
    throw std::invalid_argument("wishartDraw: df must exceed dim - 1");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(rng.chisq(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  Eigen::MatrixXd Lchol = choleskyLower(scale, "wishartDraw scale");
  Eigen::MatrixXd LA = Lchol * A;
  return LA * LA.transpose();
}

Eigen::MatrixXd inverseWishartDraw(double df, const Eigen::MatrixXd& scale,
                                   Rng& rng) {
  Eigen::MatrixXd inv =
      scale.llt().solve(Eigen::MatrixXd::Identity(scale.rows(), scale.cols()));
  Eigen::MatrixXd W = wishartDraw(df, 0.5 * (inv + inv.transpose()), rng);
  Eigen::MatrixXd X =
      W.llt().solve(Eigen::MatrixXd::Identity(W.rows(), W.cols()));
  return 0.5 * (X + X.transpose());
}

Eigen::MatrixXd sampleSubjectEffects(const Eigen::MatrixXd& Sigma, Rng& rng) {
  const Eigen::Index L = Sigma.rows() / 2;
  if (Sigma.rows() != 2 * L || Sigma.cols() != 2 * L)
    throw std::invalid_argument("sampleSubjectEffects: Sigma must be 2Lx2L");
  Eigen::VectorXd v = mvnDraw(Sigma, rng);
  Eigen::MatrixXd b(2, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    b(0, l) = v[2 * l];
    b(1, l) = v[2 * l + 1];
  }
  return b;
}

Eigen::MatrixXd sampleCohortEffects(const Eigen::MatrixXd& Lambda,
                                    int coeffCount, Rng& rng) {
  const Eigen::Index K = Lambda.rows();
  Eigen::MatrixXd b(K, coeffCount);
  for (int p = 0; p < coeffCount; ++p) b.col(p) = mvnDraw(Lambda, rng);
  return b;
}

double SkewNormal::mean() const {
  return omega * delta() * std::sqrt(2.0 / kPi);
}

double SkewNormal::variance() const {
  double d = delta();
  return omega * omega * (1.0 - 2.0 * d * d / kPi);
}

double SkewNormal::logDensity(double e) const {
  if (!(omega > 0.0)) throw std::domain_error("skew normal scale must be > 0");
  double z = e / omega;
  return std::log(2.0) - std::log(omega) + normalLogPdf(z) +
         normalLogCdf(psi * z);
}

double SkewNormal::draw(Rng& rng) const {
  if (!(omega >= 0.0)) throw std::domain_error("skew normal scale must be >= 0");
  double d = delta();
  double z0 = rng.normal();
  double z1 = rng.normal();
  return omega * (d * std::abs(z0) + std::sqrt(1.0 - d * d) * z1);
}

double skewNormalDraw(double omega, double psi, Rng& rng) {
  if (!(omega > 0.0)) throw std::domain_error("skew normal scale must be > 0");
  return SkewNormal{omega, psi}.draw(rng);
}

double skewNormalLogDensity(double e, double omega, double psi) {
  return SkewNormal{omega, psi}.logDensity(e);
}

double PopulationParams::errorVariance(int l, int window) const {
  return SkewNormal{omega(l, window), psi[l]}.variance();
}

namespace {

/* gamma_ll' * (1, a) DeltaBlock(l, l') (1, a)^T. The off-diagonal block of a
 * symmetric Delta is itself not symmetric, so both cross entries appear. */
double subjectTerm(const PopulationParams& p, int l, int lp, double a) {
  double d00 = p.Delta(2 * l, 2 * lp);
  double d01 = p.Delta(2 * l, 2 * lp + 1);
  double d10 = p.Delta(2 * l + 1, 2 * lp);
  double d11 = p.Delta(2 * l + 1, 2 * lp + 1);
  return p.Gamma(l, lp) * (d00 + a * (d01 + d10) + a * a * d11);
}

double basisDot(const ModelSpec& spec, double a, double ap) {
  return buildBasis(a, spec).dot(buildBasis(ap, spec));
}

void requireSameAge(const MomentArgs& args) {
  if (args.a != args.aPrime)
    throw std::invalid_argument(
        "same-subject moments are defined at a single exam age");
}

}  // namespace

double analyticVariance(int l, int k, double a, const PopulationParams& params,
                        const ModelSpec& spec) {
  double lkk = params.Lambda[static_cast<size_t>(l)](k, k);
  return subjectTerm(params, l, l, a) + lkk * basisDot(spec, a, a) +
         params.errorVariance(l, spec.windowIndex(a));
}

double analyticCovariance(MomentCase c, const MomentArgs& args,
                          const PopulationParams& params,
                          const ModelSpec& spec) {
  switch (c) {
    case MomentCase::SameSubjectSameFactor:
      requireSameAge(args);
      return analyticVariance(args.l, args.k, args.a, params, spec);
    case MomentCase::SameSubjectCrossFactor:
      requireSameAge(args);
      return subjectTerm(params, args.l, args.lPrime, args.a);
    case MomentCase::SameCohortCrossSubject:
      return params.Lambda[static_cast<size_t>(args.l)](args.k, args.k) *
             basisDot(spec, args.a, args.aPrime);
    case MomentCase::SameCohortCrossSubjectCrossFactor:
      return 0.0;
    case MomentCase::CrossCohortSameFactor:
      return params.Lambda[static_cast<size_t>(args.l)](args.k, args.kPrime) *
             basisDot(spec, args.a, args.aPrime);
    case MomentCase::CrossCohortCrossFactor:
      return 0.0;
  }
  throw std::invalid_argument("unknown moment case");
}

double analyticCorrelation(MomentCase c, const MomentArgs& args,
                           const PopulationParams& params,
                           const ModelSpec& spec) {
  double cov = analyticCovariance(c, args, params, spec);
  if (c == MomentCase::SameSubjectSameFactor) return 1.0;
  int lu = args.l, ku = args.k;
  int lv = args.lPrime, kv = args.kPrime;
  switch (c) {
    case MomentCase::SameSubjectCrossFactor:
      kv = args.k;
      break;
    case MomentCase::SameCohortCrossSubject:
      lv = args.l;
      kv = args.k;
      break;
    case MomentCase::SameCohortCrossSubjectCrossFactor:
      kv = args.k;
      break;
    case MomentCase::CrossCohortSameFactor:
      lv = args.l;
      break;
    default:
      break;
  }
  double vu = analyticVariance(lu, ku, args.a, params, spec);
  double vv = analyticVariance(lv, kv, args.aPrime, params, spec);
  return cov / std::sqrt(vu * vv);
}

}  // namespace lrtraj
