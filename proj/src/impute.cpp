#include "lrtraj/impute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "lrtraj/covariance.hpp"

namespace lrtraj {

ImputedDatasetSet imputeMissing(const PosteriorDraws& draws,
                                const LongitudinalDataset& data,
                                const ModelSpec& spec, int copies,
                                std::uint64_t seed) {
  if (draws.layout.variant() != Variant::Full)
    throw std::invalid_argument("imputation needs a full-variant fit");
  if (copies < 1) throw std::invalid_argument("need at least one copy");
  if (copies > draws.postWarmupCount())
    throw std::invalid_argument(
        "more imputation copies than post-warmup draws");
  data.validate(spec);
  const int L = spec.L();

  const std::vector<int> rows = draws.postWarmupRows();
  ImputedDatasetSet out;
  out.seed = seed;
  out.drawRows.reserve(static_cast<size_t>(copies));
  for (int t = 0; t < copies; ++t)
    out.drawRows.push_back(rows[static_cast<size_t>(
        (static_cast<long long>(t) * static_cast<long long>(rows.size())) /
        copies)]);

  /* map this dataset's participants and cohorts into the fit's layout */
  std::map<std::string, int> fitParticipant;
  {
    const auto ids = draws.layout.participantIds();
    for (size_t i = 0; i < ids.size(); ++i)
      fitParticipant[ids[i]] = static_cast<int>(i);
  }
  std::vector<int> fitCohort(data.cohorts.size(), -1);
  {
    const auto names = draws.layout.cohortNames();
    for (size_t k = 0; k < data.cohorts.size(); ++k) {
      for (size_t j = 0; j < names.size(); ++j)
        if (names[j] == data.cohorts[k]) fitCohort[k] = static_cast<int>(j);
      if (fitCohort[k] < 0)
        throw std::invalid_argument("cohort '" + data.cohorts[k] +
                                    "' is unknown to the fitted draws");
    }
  }

  /* fixed design rows are shared by every copy */
  const size_t nRec = data.records.size();
  std::vector<std::vector<std::pair<int, double>>> designNz(nRec);
  {
    std::vector<Eigen::VectorXd> xOf(data.participantCount());
    for (size_t i = 0; i < data.participants.size(); ++i) {
      const Participant& p = data.participants[i];
      xOf[i] = covariateVector(p.raceBlack, p.eduHs, p.eduHsPlus, p.birthYear,
                               spec);
    }
    for (size_t r = 0; r < nRec; ++r) {
      const Record& rec = data.records[r];
      Eigen::VectorXd row = alphaDesignRow(
          xOf[static_cast<size_t>(rec.participant)], rec.age, spec);
      for (Eigen::Index j = 0; j < row.size(); ++j)
        if (row[j] != 0.0)
          designNz[r].emplace_back(static_cast<int>(j), row[j]);
    }
  }

  out.datasets.reserve(static_cast<size_t>(copies));
  for (int d = 0; d < copies; ++d) {
    const ParameterState s = draws.state(out.drawRows[static_cast<size_t>(d)]);
    Rng rng = Rng::stream(seed, 9000 + static_cast<std::uint64_t>(d));

    /* subject effects: from the draw when the fit knows the participant,
     * fresh under the draw's covariance otherwise */
    Eigen::MatrixXd subject(2 * L, static_cast<Eigen::Index>(
                                       data.participantCount()));
    for (size_t i = 0; i < data.participants.size(); ++i) {
      auto it = fitParticipant.find(data.participants[i].id);
      if (it != fitParticipant.end())
        subject.col(static_cast<Eigen::Index>(i)) =
            s.subjectEffect.col(it->second);
      else
        subject.col(static_cast<Eigen::Index>(i)) = mvnDraw(s.sigma, rng);
    }

    LongitudinalDataset copy = data;
    for (size_t r = 0; r < nRec; ++r) {
      Record& rec = copy.records[r];
      const int k = fitCohort[static_cast<size_t>(
          copy.participants[static_cast<size_t>(rec.participant)].cohort)];
      const int w = spec.windowIndex(rec.age);
      for (int l = 0; l < L; ++l) {
        if (rec.isObserved(l)) continue;
        double xi = 0.0;
        for (const auto& [j, v] : designNz[r])
          xi += v * s.alpha[static_cast<size_t>(l)][j];
        const Eigen::MatrixXd& ce = s.cohortEffect[static_cast<size_t>(l)];
        xi += ce(k, 0) + ce(k, 1) * rec.age + ce(k, 2 + w) * rec.age;
        xi += subject(2 * l, static_cast<Eigen::Index>(rec.participant)) +
              subject(2 * l + 1, static_cast<Eigen::Index>(rec.participant)) *
                  rec.age;
        const SkewNormal sn{s.omega(l, w), s.psi[l]};
        rec.y[l] = xi + sn.draw(rng);
        rec.observed[static_cast<size_t>(l)] = true;
      }
    }
    out.datasets.push_back(std::move(copy));
  }
  return out;
}

std::vector<PreservationEntry> fixedEffectPreservationCheck(
    const PosteriorDraws& fullFit, const PosteriorDraws& deletedFit,
    const std::string& factor) {
  const ModelSpec& spec = fullFit.layout.spec();
  if (spec.factorIndex(factor) < 0)
    throw std::invalid_argument("unknown factor '" + factor + "'");
  const int P = spec.P();

  std::vector<std::string> coefficients;
  coefficients.push_back("level");
  coefficients.push_back("age");
  for (int j = 1; j <= P - 1; ++j)
    coefficients.push_back("win" + std::to_string(j));

  std::vector<PreservationEntry> table;
  for (int c = 0; c < CovariateScheme::kCount; ++c) {
    const std::string cov = CovariateScheme::name(c);
    for (const std::string& coef : coefficients) {
      PreservationEntry e;
      e.covariate = cov;
      e.coefficient = coef;
      const std::string path = "alpha." + factor + "." + coef + "." + cov;
      const int colFull = fullFit.layout.index(path);
      const int colDel = deletedFit.layout.index(path);
      if (colFull < 0 && colDel < 0) {
        e.structurallyAbsent = true;
        e.probability = std::numeric_limits<double>::quiet_NaN();
        e.fullMean = std::numeric_limits<double>::quiet_NaN();
        table.push_back(std::move(e));
        continue;
      }
      if (colFull < 0 || colDel < 0)
        throw std::invalid_argument(
            "the two fits do not share a model layout");
      e.path = path;
      const std::vector<double> full = fullFit.postWarmupColumn(colFull);
      double mean = 0.0;
      for (double v : full) mean += v;
      mean /= static_cast<double>(full.size());
      e.fullMean = mean;
      const std::vector<double> del = deletedFit.postWarmupColumn(colDel);
      int atLeast = 0;
      for (double v : del)
        if (v >= mean) ++atLeast;
      e.probability =
          static_cast<double>(atLeast) / static_cast<double>(del.size());
      table.push_back(std::move(e));
    }
  }
  return table;
}

double PooledEstimate::sd() const { return std::sqrt(totalVariance); }

PooledEstimate rubinPool(
    const std::vector<std::pair<double, double>>& estimates) {
  const int d = static_cast<int>(estimates.size());
  if (d < 2) throw std::invalid_argument("pooling needs at least 2 estimates");
  PooledEstimate p;
  p.count = d;
  for (const auto& [point, variance] : estimates) {
    if (!(variance >= 0.0) || !std::isfinite(point))
      throw std::invalid_argument("estimates must be finite with variance >= 0");
    p.point += point;
    p.withinVariance += variance;
  }
  p.point /= d;
  p.withinVariance /= d;
  for (const auto& [point, variance] : estimates)
    p.betweenVariance += (point - p.point) * (point - p.point);
  p.betweenVariance /= (d - 1);
  p.totalVariance =
      p.withinVariance + (1.0 + 1.0 / static_cast<double>(d)) * p.betweenVariance;
  return p;
}

std::pair<double, double> ageSlopeEstimate(const LongitudinalDataset& data,
                                           int factor) {
  if (factor < 0 || factor >= data.L)
    throw std::invalid_argument("factor out of range");
  std::vector<std::pair<double, double>> pts;
  for (const Record& r : data.records)
    if (r.isObserved(factor)) pts.emplace_back(r.age, r.y[factor]);
  const size_t n = pts.size();
  if (n < 3)
    throw std::invalid_argument("need at least 3 observations for the slope");
  double ma = 0, my = 0;
  for (const auto& [a, y] : pts) {
    ma += a;
    my += y;
  }
  ma /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (const auto& [a, y] : pts) {
    sxx += (a - ma) * (a - ma);
    sxy += (a - ma) * (y - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("ages are all equal");
  const double slope = sxy / sxx;
  const double intercept = my - slope * ma;
  double sse = 0;
  for (const auto& [a, y] : pts) {
    const double e = y - intercept - slope * a;
    sse += e * e;
  }
  const double s2 = sse / static_cast<double>(n - 2);
  return {slope, s2 / sxx};
}

CoverageResult predictiveIntervalCoverage(const ImputedDatasetSet& imputed,
                                          const LongitudinalDataset& base,
                                          const ModelSpec& spec,
                                          const std::vector<HeldOutCell>& held,
                                          double level) {
  if (imputed.count() < 2)
    throw std::invalid_argument("coverage needs at least 2 imputations");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("level must lie in (0,1)");
  CoverageResult res;
  const double lo = 0.5 * (1.0 - level);
  const double hi = 1.0 - lo;
  for (const HeldOutCell& cell : held) {
    const int pi = base.participantIndex(cell.participant);
    const int l = spec.factorIndex(cell.factor);
    if (pi < 0 || l < 0) continue;
    int rec = -1;
    for (size_t r = 0; r < base.records.size(); ++r)
      if (base.records[r].participant == pi &&
          base.records[r].age == cell.age) {
        rec = static_cast<int>(r);
        break;
      }
    if (rec < 0) continue;  // record dropped with the mask
    if (base.records[static_cast<size_t>(rec)].isObserved(l)) continue;
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(imputed.count()));
    for (const LongitudinalDataset& d : imputed.datasets)
      vals.push_back(d.records[static_cast<size_t>(rec)].y[l]);
    std::sort(vals.begin(), vals.end());
    auto quantile = [&](double p) {
      const double h = p * (static_cast<double>(vals.size()) - 1.0);
      const size_t j = static_cast<size_t>(std::floor(h));
      const size_t j2 = std::min(j + 1, vals.size() - 1);
      const double f = h - static_cast<double>(j);
      return (1.0 - f) * vals[j] + f * vals[j2];
    };
    ++res.total;
    if (cell.value >= quantile(lo) && cell.value <= quantile(hi))
      ++res.covered;
  }
  return res;
}

}  // namespace lrtraj
