#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "lrtraj/impute.hpp"
#include "oracles.hpp"

using namespace lrtraj;

namespace {

PosteriorDraws smallFit(const LongitudinalDataset& data, const ModelSpec& spec,
                        Variant v, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.superchains = 2;
  cfg.subchains = 2;
  cfg.iterations = 8;
  cfg.warmup = 4;
  cfg.seed = seed;
  cfg.init = InitStrategy::PriorDraw;
  return runSampler(data, spec, cfg, v);
}

LongitudinalDataset lineData(const std::vector<std::pair<double, double>>& pts) {
  LongitudinalDataset d;
  d.L = 1;
  d.cohorts = {"A"};
  Participant p;
  p.id = "p";
  p.cohort = 0;
  p.sex = "M";
  p.birthYear = 1940;
  d.participants.push_back(p);
  for (const auto& [age, y] : pts) {
    Record r;
    r.participant = 0;
    r.age = age;
    r.y = Eigen::VectorXd::Constant(1, y);
    r.observed = {1};
    d.records.push_back(r);
  }
  return d;
}

}  // namespace

TEST_CASE("pooling rules combine within and between variance") {
  const PooledEstimate p =
      rubinPool({{1.0, 0.5}, {2.0, 0.5}, {3.0, 0.5}});
  CHECK(p.count == 3);
  CHECK(p.point == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(p.withinVariance == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.betweenVariance == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.totalVariance == doctest::Approx(11.0 / 6.0).epsilon(1e-14));
  CHECK(p.sd() == doctest::Approx(std::sqrt(11.0 / 6.0)).epsilon(1e-14));

  // no between-variance when every dataset estimates the same point
  const PooledEstimate q = rubinPool({{4.0, 2.0}, {4.0, 4.0}});
  CHECK(q.point == 4.0);
  CHECK(q.withinVariance == 3.0);
  CHECK(q.betweenVariance == 0.0);
  CHECK(q.totalVariance == 3.0);

  CHECK_THROWS_AS(rubinPool({}), std::invalid_argument);
  CHECK_THROWS_AS(rubinPool({{1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(rubinPool({{1.0, 1.0}, {2.0, -0.5}}), std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(rubinPool({{nan, 1.0}, {2.0, 0.5}}), std::invalid_argument);
}

TEST_CASE("age slope estimator matches least squares by hand") {
  const auto exact = ageSlopeEstimate(lineData({{1, 1}, {2, 3}, {3, 5}}), 0);
  CHECK(exact.first == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(exact.second == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

  // (0,0), (1,0), (2,3): slope 1.5, residual variance 1.5, Sxx = 2
  const auto noisy = ageSlopeEstimate(lineData({{0, 0}, {1, 0}, {2, 3}}), 0);
  CHECK(noisy.first == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(noisy.second == doctest::Approx(0.75).epsilon(1e-14));

  CHECK_THROWS_AS(ageSlopeEstimate(lineData({{1, 1}, {2, 3}, {3, 5}}), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(ageSlopeEstimate(lineData({{1, 1}, {2, 3}}), 0),
                  std::invalid_argument);
  LongitudinalDataset flat = lineData({{2, 1}, {2, 3}, {2, 5}});
  CHECK_THROWS_AS(ageSlopeEstimate(flat, 0), std::invalid_argument);
}

TEST_CASE("imputation fills exactly the missing cells") {
  const ModelSpec spec = testutil::toySpec2();
  LongitudinalDataset data = testutil::toyData(spec, 2, 3, 91);
  data.records[1].observed[1] = 0;
  data.records[1].y[1] = std::numeric_limits<double>::quiet_NaN();
  data.records[5].observed[0] = 0;
  data.records[5].y[0] = std::numeric_limits<double>::quiet_NaN();

  const PosteriorDraws draws = smallFit(data, spec, Variant::Full, 92);
  const ImputedDatasetSet imp = imputeMissing(draws, data, spec, 4, 99);
  CHECK(imp.count() == 4);
  CHECK(imp.seed == 99);

  // copies ride equally spaced post-warmup rows
  const std::vector<int> rows = draws.postWarmupRows();
  REQUIRE(imp.drawRows.size() == 4);
  for (int t = 0; t < 4; ++t)
    CHECK(imp.drawRows[static_cast<std::size_t>(t)] ==
          rows[static_cast<std::size_t>(t * static_cast<int>(rows.size()) / 4)]);

  for (const LongitudinalDataset& d : imp.datasets) {
    REQUIRE(d.records.size() == data.records.size());
    for (std::size_t i = 0; i < data.records.size(); ++i)
      for (int l = 0; l < spec.L(); ++l) {
        CHECK(d.records[i].isObserved(l));  // nothing is missing afterwards
        if (data.records[i].isObserved(l))
          CHECK(d.records[i].y[l] == data.records[i].y[l]);
        else
          CHECK(std::isfinite(d.records[i].y[l]));
      }
  }
  CHECK(imp.datasets[0].records[1].y[1] != imp.datasets[1].records[1].y[1]);

  const ImputedDatasetSet again = imputeMissing(draws, data, spec, 4, 99);
  CHECK(again.datasets[2].records[5].y[0] == imp.datasets[2].records[5].y[0]);
  const ImputedDatasetSet otherSeed = imputeMissing(draws, data, spec, 4, 100);
  CHECK(otherSeed.datasets[0].records[1].y[1] !=
        imp.datasets[0].records[1].y[1]);

  CHECK_THROWS_AS(imputeMissing(draws, data, spec, 0, 99),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      imputeMissing(draws, data, spec, draws.postWarmupCount() + 1, 99),
      std::invalid_argument);
  CHECK_NOTHROW(
      imputeMissing(draws, data, spec, draws.postWarmupCount(), 99));

  const PosteriorDraws noCo = smallFit(data, spec, Variant::NoCohort, 93);
  CHECK_THROWS_WITH_AS(imputeMissing(noCo, data, spec, 2, 99),
                       doctest::Contains("full-variant"),
                       std::invalid_argument);
}

TEST_CASE("imputation handles participants and cohorts the fit never saw") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 3, 94);
  const PosteriorDraws draws = smallFit(data, spec, Variant::Full, 95);

  // a fresh participant in a known cohort gets fresh subject effects
  LongitudinalDataset extended = data;
  Participant novel;
  novel.id = "novel";
  novel.cohort = 0;
  novel.sex = "M";
  novel.birthYear = 1935;
  extended.participants.push_back(novel);
  Record r;
  r.participant = static_cast<int>(extended.participants.size()) - 1;
  r.age = 44.0;
  r.y = Eigen::VectorXd::Constant(2, 0.0);
  r.y[0] = 120.0;
  r.y[1] = std::numeric_limits<double>::quiet_NaN();
  r.observed = {1, 0};
  extended.records.push_back(r);
  extended.sortRecords();

  const ImputedDatasetSet imp = imputeMissing(draws, extended, spec, 2, 96);
  for (const LongitudinalDataset& d : imp.datasets)
    for (const Record& rec : d.records) CHECK(rec.isObserved(1));

  // an unknown cohort is an error, not a silent guess
  LongitudinalDataset foreign = extended;
  foreign.cohorts.push_back("Z");
  foreign.participants.back().cohort = 2;
  CHECK_THROWS_WITH_AS(imputeMissing(draws, foreign, spec, 2, 96),
                       doctest::Contains("unknown to the fitted draws"),
                       std::invalid_argument);
}

TEST_CASE("fixed effect preservation table keeps the full shape") {
  const ModelSpec spec = testutil::toySpec();  // P = 2: level, age, win1
  const LongitudinalDataset data = testutil::toyData(spec, 2, 3, 97);
  const PosteriorDraws full = smallFit(data, spec, Variant::Full, 98);
  const PosteriorDraws deleted = smallFit(data, spec, Variant::Full, 99);

  const std::vector<PreservationEntry> table =
      fixedEffectPreservationCheck(full, deleted, "x");
  REQUIRE(table.size() == 21);  // 7 covariates x 3 coefficients

  int absent = 0;
  for (const PreservationEntry& e : table) {
    if (e.structurallyAbsent) {
      ++absent;
      CHECK(e.path.empty());
      CHECK(std::isnan(e.probability));
      CHECK(e.coefficient == "win1");  // only window rows can be absent
    } else {
      CHECK(e.path == "alpha.x." + e.coefficient + "." + e.covariate);
      CHECK(e.probability >= 0.0);
      CHECK(e.probability <= 1.0);
      const std::vector<double> fullCol = full.postWarmupColumn(e.path);
      double mean = 0.0;
      for (double v : fullCol) mean += v;
      mean /= static_cast<double>(fullCol.size());
      CHECK(e.fullMean == doctest::Approx(mean).epsilon(1e-14));
      const std::vector<double> delCol = deleted.postWarmupColumn(e.path);
      int atLeast = 0;
      for (double v : delCol)
        if (v >= mean) ++atLeast;
      CHECK(e.probability ==
            doctest::Approx(static_cast<double>(atLeast) /
                            static_cast<double>(delCol.size()))
                .epsilon(1e-14));
    }
  }
  // birth-year strata never carry window deviations
  CHECK(absent == 3);

  CHECK_THROWS_WITH_AS(fixedEffectPreservationCheck(full, deleted, "zz"),
                       doctest::Contains("unknown factor"),
                       std::invalid_argument);

  // fits of structurally different fixed-effect sets cannot be compared
  ModelSpec lean = spec;
  lean.covariates.birthYearAgeInteraction = false;
  const LongitudinalDataset leanData = testutil::toyData(lean, 2, 3, 101);
  const PosteriorDraws leanFit = smallFit(leanData, lean, Variant::Full, 102);
  CHECK_THROWS_WITH_AS(fixedEffectPreservationCheck(full, leanFit, "x"),
                       doctest::Contains("layout"), std::invalid_argument);
}

TEST_CASE("interval coverage counts only recoverable held-out cells") {
  const ModelSpec spec = testutil::toySpec();
  LongitudinalDataset base = lineData({{20, 1}, {30, 2}, {40, 3}});
  base.records[1].observed[0] = 0;
  base.records[1].y[0] = std::numeric_limits<double>::quiet_NaN();

  ImputedDatasetSet imp;
  imp.seed = 1;
  for (double v : {1.0, 2.0, 3.0, 4.0}) {
    LongitudinalDataset d = base;
    d.records[1].y[0] = v;
    d.records[1].observed[0] = 1;
    imp.datasets.push_back(std::move(d));
    imp.drawRows.push_back(0);
  }

  std::vector<HeldOutCell> held;
  held.push_back({"p", 30.0, "x", 2.0});     // inside [1.075, 3.925]
  held.push_back({"p", 30.0, "x", 1.05});    // below the lower quantile
  held.push_back({"ghost", 30.0, "x", 2.0}); // unknown participant: skipped
  held.push_back({"p", 35.0, "x", 2.0});     // no such exam: skipped
  held.push_back({"p", 20.0, "x", 1.0});     // cell still observed: skipped

  const CoverageResult res =
      predictiveIntervalCoverage(imp, base, spec, held, 0.95);
  CHECK(res.total == 2);
  CHECK(res.covered == 1);
  CHECK(res.fraction() == doctest::Approx(0.5));

  // a wide-open interval reaches down past the near-miss
  const CoverageResult wide =
      predictiveIntervalCoverage(imp, base, spec, held, 0.999);
  CHECK(wide.total == 2);
  CHECK(wide.covered == 2);

  ImputedDatasetSet one;
  one.datasets.push_back(base);
  CHECK_THROWS_AS(predictiveIntervalCoverage(one, base, spec, held, 0.95),
                  std::invalid_argument);
  CHECK_THROWS_AS(predictiveIntervalCoverage(imp, base, spec, held, 1.0),
                  std::invalid_argument);

  const CoverageResult empty =
      predictiveIntervalCoverage(imp, base, spec, {}, 0.95);
  CHECK(empty.total == 0);
  CHECK(empty.fraction() == 0.0);
}

TEST_CASE("imputed copies pool into a finite downstream estimate") {
  const ModelSpec spec = testutil::toySpec2();
  LongitudinalDataset data = testutil::toyData(spec, 2, 3, 103);
  for (std::size_t i = 0; i < data.records.size(); i += 4) {
    data.records[i].observed[1] = 0;
    data.records[i].y[1] = std::numeric_limits<double>::quiet_NaN();
  }
  const PosteriorDraws draws = smallFit(data, spec, Variant::Full, 104);
  const ImputedDatasetSet imp = imputeMissing(draws, data, spec, 4, 105);

  std::vector<std::pair<double, double>> est;
  for (const LongitudinalDataset& d : imp.datasets)
    est.push_back(ageSlopeEstimate(d, 1));
  const PooledEstimate pooled = rubinPool(est);
  CHECK(std::isfinite(pooled.point));
  CHECK(pooled.withinVariance > 0.0);
  CHECK(pooled.totalVariance >= pooled.withinVariance);
  CHECK(pooled.count == 4);
}
