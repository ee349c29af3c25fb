#include "lrtraj/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrtraj/dataset.hpp"

namespace lrtraj {

const char* CovariateScheme::name(int c) {
  static const char* names[kCount] = {"intercept", "race_black", "edu_hs",
                                      "edu_hsplus", "by_c2", "by_c3", "by_c4"};
  if (c < 0 || c >= kCount) throw std::invalid_argument("covariate index");
  return names[c];
}

int ModelSpec::windowIndex(double a) const {
  if (!(a >= ageMin && a <= ageMax))
    throw std::domain_error("age " + std::to_string(a) + " outside [" +
                            std::to_string(ageMin) + ", " +
                            std::to_string(ageMax) + "]");
  // windows are (lower, upper]; first window closed below at ageMin
  int w = 0;
  while (w < static_cast<int>(breakpoints.size()) && a > breakpoints[w]) ++w;
  return w;
}

int ModelSpec::birthYearStratum(int year) const {
  int s = 0;
  for (int cut : birthYearCuts)
    if (year >= cut) ++s;
  return s;
}

int ModelSpec::factorIndex(const std::string& name) const {
  for (int l = 0; l < L(); ++l)
    if (riskFactors[static_cast<size_t>(l)] == name) return l;
  return -1;
}

void ModelSpec::validate() const {
  if (riskFactors.empty()) throw std::invalid_argument("no risk factors");
  for (size_t i = 0; i < riskFactors.size(); ++i)
    for (size_t j = i + 1; j < riskFactors.size(); ++j)
      if (riskFactors[i] == riskFactors[j])
        throw std::invalid_argument("duplicate risk factor '" +
                                    riskFactors[i] + "'");
  if (!(ageMin < ageMax)) throw std::invalid_argument("ageMin >= ageMax");
  if (P() < 2) throw std::invalid_argument("need at least 2 age windows");
  double prev = ageMin;
  for (double b : breakpoints) {
    if (!(b > prev && b < ageMax))
      throw std::invalid_argument("breakpoints must be strictly increasing "
                                  "inside (ageMin, ageMax)");
    prev = b;
  }
  if (birthYearCuts.size() != 3)
    throw std::invalid_argument("expected 3 birth-year cuts");
  for (size_t i = 1; i < birthYearCuts.size(); ++i)
    if (birthYearCuts[i] <= birthYearCuts[i - 1])
      throw std::invalid_argument("birth-year cuts must increase");
}

ModelSpec ModelSpec::defaults(int L) {
  ModelSpec s;
  for (int l = 1; l <= L; ++l) s.riskFactors.push_back("rf_" + std::to_string(l));
  return s;
}

Eigen::VectorXd buildBasis(double a, const ModelSpec& spec) {
  int w = spec.windowIndex(a);  // domain check lives here
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(spec.P() + 2);
  basis[0] = 1.0;
  basis[1] = a;
  basis[2 + w] = a;
  return basis;
}

Eigen::VectorXd applyConstraint(const Eigen::VectorXd& freeAlpha) {
  Eigen::VectorXd full(freeAlpha.size() + 1);
  full.head(freeAlpha.size()) = freeAlpha;
  full[freeAlpha.size()] = -freeAlpha.sum();
  return full;
}

double trajectory(double a, const Eigen::VectorXd& beta, const ModelSpec& spec) {
  if (beta.size() != spec.P() + 2)
    throw std::invalid_argument("beta length != P+2");
  return buildBasis(a, spec).dot(beta);
}

int AlphaLayout::ageIndex(int c) const {
  if (!cov.ageInteracting(c))
    throw std::invalid_argument("covariate has no age coefficient");
  int idx = 0;
  for (int j = 0; j < c; ++j)
    if (cov.ageInteracting(j)) ++idx;
  return ageOffset() + idx;
}

double AlphaLayout::windowDeviation(const Eigen::VectorXd& alpha, int w,
                                    int c) const {
  if (!cov.windowInteracting(c)) return 0.0;
  if (w < P - 1) return alpha[windowIndex(w, c)];
  double s = 0.0;
  for (int j = 0; j < P - 1; ++j) s += alpha[windowIndex(j, c)];
  return -s;
}

Eigen::VectorXd covariateVector(int raceBlack, int eduHs, int eduHsPlus,
                                int birthYear, const ModelSpec& spec) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(CovariateScheme::kCount);
  x[0] = 1.0;
  x[1] = raceBlack;
  x[2] = eduHs;
  x[3] = eduHsPlus;
  int s = spec.birthYearStratum(birthYear);
  if (s >= 1) x[3 + s] = 1.0;
  return x;
}

double fixedSlopePart(const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                      int p, const ModelSpec& spec) {
  AlphaLayout lay(spec);
  if (x.size() != CovariateScheme::kCount || alpha.size() != lay.size())
    throw std::invalid_argument("fixedSlopePart: dimension mismatch");
  if (p < 0 || p >= spec.P() + 2)
    throw std::invalid_argument("coefficient index out of range");
  double h = 0.0;
  if (p == 0) {
    for (int c = 0; c < lay.cov.count(); ++c)
      h += x[c] * alpha[lay.levelIndex(c)];
  } else if (p == 1) {
    for (int c = 0; c < lay.cov.count(); ++c)
      if (lay.cov.ageInteracting(c)) h += x[c] * alpha[lay.ageIndex(c)];
  } else {
    int w = p - 2;
    for (int c = 0; c < lay.cov.count(); ++c)
      if (lay.cov.windowInteracting(c))
        h += x[c] * lay.windowDeviation(alpha, w, c);
  }
  return h;
}

Eigen::VectorXd alphaDesignRow(const Eigen::VectorXd& x, double a,
                               const ModelSpec& spec) {
  AlphaLayout lay(spec);
  int P = spec.P();
  int w = spec.windowIndex(a);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(lay.size());
  for (int c = 0; c < lay.cov.count(); ++c) {
    row[lay.levelIndex(c)] = x[c];
    if (lay.cov.ageInteracting(c)) row[lay.ageIndex(c)] = x[c] * a;
    if (lay.cov.windowInteracting(c)) {
      /* free deviations: active window contributes +a, and because the last
       * window's coefficient is -(sum of free ones), an exam in the last
       * window contributes -a to every free column. */
      if (w < P - 1)
        row[lay.windowIndex(w, c)] += x[c] * a;
      else
        for (int j = 0; j < P - 1; ++j) row[lay.windowIndex(j, c)] -= x[c] * a;
    }
  }
  return row;
}

Eigen::VectorXd buildBeta(const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                          const Eigen::Vector2d* subject,
                          const Eigen::VectorXd* cohort, const ModelSpec& spec) {
  int P = spec.P();
  Eigen::VectorXd beta(P + 2);
  for (int p = 0; p < P + 2; ++p) beta[p] = fixedSlopePart(x, alpha, p, spec);
  if (subject) {
    beta[0] += (*subject)[0];
    beta[1] += (*subject)[1];
  }
  if (cohort) {
    if (cohort->size() != P + 2)
      throw std::invalid_argument("cohort effect length != P+2");
    beta += *cohort;
  }
  return beta;
}

RankReport designMatrixRankCheck(const ModelSpec& spec,
                                 const LongitudinalDataset& data,
                                 bool constrained) {
  if (data.records.empty()) throw std::invalid_argument("empty dataset");
  AlphaLayout lay(spec);
  int P = spec.P();
  Eigen::Index cols;
  if (constrained) {
    cols = lay.size();
  } else {
    /* unconstrained: all P window columns per window-interacting covariate */
    cols = lay.cov.count() + lay.cov.ageCount() + P * lay.cov.windowCount();
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(data.records.size()), cols);
  Eigen::Index r = 0;
  for (const Record& rec : data.records) {
    const Participant& part = data.participants[static_cast<size_t>(rec.participant)];
    Eigen::VectorXd x = covariateVector(part.raceBlack, part.eduHs,
                                        part.eduHsPlus, part.birthYear, spec);
    if (constrained) {
      X.row(r) = alphaDesignRow(x, rec.age, spec);
    } else {
      int w = spec.windowIndex(rec.age);
      Eigen::VectorXd row = Eigen::VectorXd::Zero(cols);
      for (int c = 0; c < lay.cov.count(); ++c) {
        row[c] = x[c];
        if (lay.cov.ageInteracting(c))
          row[lay.ageIndex(c)] = x[c] * rec.age;
      }
      int base = lay.cov.count() + lay.cov.ageCount();
      int wc = 0;
      for (int c = 0; c < lay.cov.count(); ++c) {
        if (!lay.cov.windowInteracting(c)) continue;
        row[base + wc * P + w] = x[c] * rec.age;
        ++wc;
      }
      X.row(r) = row;
    }
    ++r;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  double tol = 1e-8;
  qr.setThreshold(tol);
  RankReport rep;
  rep.rows = X.rows();
  rep.columns = cols;
  rep.rank = qr.rank();
  rep.fullRank = rep.rank == cols;
  rep.tolerance = tol;
  rep.constrained = constrained;
  return rep;
}

}  // namespace lrtraj
