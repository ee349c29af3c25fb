#include <cmath>
#include <map>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "lrtraj/covariance.hpp"
#include "lrtraj/simulator.hpp"

using namespace lrtraj;

namespace {

ModelSpec deskSpec() {
  ModelSpec s;
  s.riskFactors = {"sbp", "dbp", "bmi"};
  return s;
}

/* Population blocks only, enough to drive the generator. */
ParameterState tinyTruth(const ModelSpec& spec, int K) {
  const AlphaLayout lay(spec);
  const int L = spec.L();
  const int P = spec.P();
  ParameterState s;
  s.alpha.assign(static_cast<std::size_t>(L), Eigen::VectorXd::Zero(lay.size()));
  for (int l = 0; l < L; ++l) {
    s.alpha[static_cast<std::size_t>(l)][lay.levelIndex(0)] = 100.0 + 20.0 * l;
    s.alpha[static_cast<std::size_t>(l)][lay.ageIndex(0)] = 0.4;
  }
  s.sigma = Eigen::MatrixXd::Zero(2 * L, 2 * L);
  for (int l = 0; l < L; ++l) {
    s.sigma(2 * l, 2 * l) = 4.0;
    s.sigma(2 * l + 1, 2 * l + 1) = 1e-3;
  }
  s.lambda.assign(static_cast<std::size_t>(L),
                  0.0025 * Eigen::MatrixXd::Identity(K, K));
  s.omega = Eigen::MatrixXd::Ones(L, P);
  s.psi = Eigen::VectorXd::Zero(L);
  s.psi[0] = 0.8;
  return s;
}

std::vector<CohortProfile> tinyProfiles(int L) {
  CohortProfile a;
  a.name = "A";
  a.enrollAgeLo = 20.0;
  a.enrollAgeHi = 25.0;
  a.followUpYears = 15.0;
  a.examSpacingYears = 5.0;
  a.participantCount = 5;
  a.missRate.assign(static_cast<std::size_t>(L), 0.0);

  CohortProfile b = a;
  b.name = "B";
  b.enrollAgeLo = 40.0;
  b.enrollAgeHi = 50.0;
  return {a, b};
}

bool sameData(const LongitudinalDataset& x, const LongitudinalDataset& y) {
  if (x.cohorts != y.cohorts) return false;
  if (x.participants.size() != y.participants.size()) return false;
  if (x.records.size() != y.records.size()) return false;
  for (std::size_t i = 0; i < x.participants.size(); ++i) {
    if (x.participants[i].id != y.participants[i].id) return false;
    if (x.participants[i].birthYear != y.participants[i].birthYear) return false;
  }
  for (std::size_t i = 0; i < x.records.size(); ++i) {
    if (x.records[i].participant != y.records[i].participant) return false;
    if (x.records[i].age != y.records[i].age) return false;
    for (int l = 0; l < x.L; ++l) {
      if (x.records[i].isObserved(l) != y.records[i].isObserved(l)) return false;
      if (x.records[i].isObserved(l) && x.records[i].y[l] != y.records[i].y[l])
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("built-in cohort designs are valid and sized as documented") {
  const ModelSpec spec = deskSpec();
  const std::vector<CohortProfile> profiles = deskProfiles(spec.L());
  REQUIRE(profiles.size() == 3);
  CHECK(profiles[0].name == "YOUNG");
  CHECK(profiles[1].name == "MID");
  CHECK(profiles[2].name == "FULL");
  for (const CohortProfile& p : profiles) {
    CHECK(p.participantCount == 100);
    CHECK(p.missRate.size() == 3);
    CHECK_NOTHROW(p.validate(spec));
  }
  CHECK(profiles[0].enrollAgeHi < profiles[1].enrollAgeLo);
}

TEST_CASE("cohort profile validation rejects inconsistent settings") {
  const ModelSpec spec = testutil::toySpec2();
  CohortProfile p;
  p.name = "X";
  p.missRate = {0.1, 0.1};
  CHECK_NOTHROW(p.validate(spec));

  CohortProfile bad = p;
  bad.name.clear();
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.enrollAgeLo = 40.0;
  bad.enrollAgeHi = 30.0;
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.enrollAgeHi = 120.0;
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.examSpacingYears = 0.0;
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.participantCount = 0;
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.pEduHs = 0.7;
  bad.pEduHsPlus = 0.5;
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.birthYearMix = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.missRate = {0.1};
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.missRate = {0.1, 1.5};
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
  bad = p;
  bad.blockRules.push_back({5, std::numeric_limits<double>::quiet_NaN(), true});
  CHECK_THROWS_AS(bad.validate(spec), std::invalid_argument);
}

TEST_CASE("built-in generating parameters are coherent") {
  const ModelSpec spec = deskSpec();
  const DeskTruth t = defaultDeskTruth(spec, 3);
  const AlphaLayout lay(spec);

  REQUIRE(t.state.alpha.size() == 3);
  for (const auto& a : t.state.alpha) CHECK(a.size() == lay.size());
  CHECK(t.delta.rows() == 6);
  CHECK(t.gamma.rows() == 3);
  CHECK((t.state.sigma - blockKronecker(t.delta, t.gamma))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK_NOTHROW(choleskyLower(t.state.sigma, "sigma"));
  REQUIRE(t.state.lambda.size() == 3);
  for (const auto& lam : t.state.lambda) {
    CHECK(lam.rows() == 3);
    CHECK_NOTHROW(choleskyLower(lam, "lambda"));
  }
  CHECK(t.state.omega.rows() == 3);
  CHECK(t.state.omega.cols() == spec.P());
  CHECK(t.state.omega.minCoeff() > 0.0);
  CHECK(t.state.psi[0] == 1.2);
  CHECK(t.state.psi[1] == -0.8);
  CHECK(t.state.psi[2] == 0.0);

  const PopulationParams pop = t.population();
  CHECK(pop.L() == 3);
  CHECK(pop.K() == 3);
  CHECK((pop.sigma() - t.state.sigma).cwiseAbs().maxCoeff() == 0.0);

  const ModelSpec two = testutil::toySpec2();
  CHECK_THROWS_AS(defaultDeskTruth(two, 3), std::invalid_argument);
}

TEST_CASE("simulation is deterministic and within the age range") {
  const ModelSpec spec = testutil::toySpec2();
  const ParameterState truth = tinyTruth(spec, 2);
  const std::vector<CohortProfile> profiles = tinyProfiles(spec.L());

  const SimulationResult a = simulateDataset(profiles, spec, truth, 42);
  const SimulationResult b = simulateDataset(profiles, spec, truth, 42);
  const SimulationResult c = simulateDataset(profiles, spec, truth, 43);
  CHECK(sameData(a.data, b.data));
  CHECK_FALSE(sameData(a.data, c.data));

  CHECK(a.data.cohorts == std::vector<std::string>{"A", "B"});
  CHECK(a.data.participants.size() == 10);
  CHECK(a.data.participants[0].id == "A-0");
  CHECK_NOTHROW(a.data.validate(spec));
  for (const Record& r : a.data.records) {
    CHECK(r.age >= spec.ageMin);
    CHECK(r.age <= spec.ageMax);
  }
  // 4 scheduled exams each, none clipped at these ages
  CHECK(a.data.records.size() == 40);

  CHECK(a.truth.seed == 42);
  REQUIRE(a.truth.state.cohortEffect.size() == 2);
  CHECK(a.truth.state.cohortEffect[0].rows() == 2);
  CHECK(a.truth.state.cohortEffect[0].cols() == spec.P() + 2);
  CHECK(a.truth.state.cohortEffect[0].cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.truth.state.subjectEffect.rows() == 2 * spec.L());
  CHECK(a.truth.state.subjectEffect.cols() ==
        static_cast<Eigen::Index>(a.data.participants.size()));
}

TEST_CASE("block missingness rules shape the observation pattern") {
  const ModelSpec spec = testutil::toySpec2();
  const ParameterState truth = tinyTruth(spec, 2);
  std::vector<CohortProfile> profiles = tinyProfiles(spec.L());
  profiles[0].blockRules.push_back(
      {1, std::numeric_limits<double>::quiet_NaN(), true});
  profiles[1].blockRules.push_back({0, 48.0, false});

  const SimulationResult sim = simulateDataset(profiles, spec, truth, 7);
  int seenVInA = 0, seenULowInB = 0, seenUHighInB = 0;
  for (const Record& r : sim.data.records) {
    const Participant& p =
        sim.data.participants[static_cast<std::size_t>(r.participant)];
    if (p.cohort == 0 && r.isObserved(1)) ++seenVInA;
    if (p.cohort == 1 && r.age < 48.0 && r.isObserved(0)) ++seenULowInB;
    if (p.cohort == 1 && r.age >= 48.0 && r.isObserved(0)) ++seenUHighInB;
  }
  CHECK(seenVInA == 0);
  CHECK(seenULowInB == 0);
  CHECK(seenUHighInB > 0);
}

TEST_CASE("the generator rejects truth blocks of the wrong shape") {
  const ModelSpec spec = testutil::toySpec2();
  const std::vector<CohortProfile> profiles = tinyProfiles(spec.L());
  const ParameterState good = tinyTruth(spec, 2);

  CHECK_THROWS_AS(simulateDataset({}, spec, good, 1), std::invalid_argument);

  ParameterState bad = good;
  bad.alpha.pop_back();
  CHECK_THROWS_AS(simulateDataset(profiles, spec, bad, 1),
                  std::invalid_argument);
  bad = good;
  bad.sigma = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(simulateDataset(profiles, spec, bad, 1),
                  std::invalid_argument);
  bad = good;
  bad.lambda.assign(2, Eigen::MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(simulateDataset(profiles, spec, bad, 1),
                  std::invalid_argument);
}

TEST_CASE("deletion experiments mask matching cells and keep the values") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 3, 11);

  DeletionRule rule;
  rule.factor = "v";
  rule.ageBelow = 45.0;
  const DeletionResult res = applyDeletionExperiment(data, rule, spec);

  std::size_t expect = 0;
  std::map<std::pair<std::string, double>, double> original;
  for (const Record& r : data.records) {
    const std::string& id =
        data.participants[static_cast<std::size_t>(r.participant)].id;
    original[{id, r.age}] = r.y[1];
    if (r.age < 45.0) ++expect;
  }
  CHECK(res.heldOut.size() == expect);
  CHECK(expect > 0);
  CHECK(res.droppedRecords == 0);
  CHECK(res.data.records.size() == data.records.size());
  for (const HeldOutCell& c : res.heldOut) {
    CHECK(c.factor == "v");
    CHECK(c.age < 45.0);
    CHECK(c.value == original.at({c.participant, c.age}));
  }
  for (const Record& r : res.data.records) {
    CHECK(r.isObserved(0));
    CHECK(r.isObserved(1) == (r.age >= 45.0));
  }
}

TEST_CASE("deletion by cohort and record dropping") {
  const ModelSpec spec = testutil::toySpec2();
  LongitudinalDataset data = testutil::toyData(spec, 2, 3, 13);

  DeletionRule rule;
  rule.factor = "u";
  rule.cohort = "C0";
  const DeletionResult res = applyDeletionExperiment(data, rule, spec);
  for (const Record& r : res.data.records) {
    const int k =
        res.data.participants[static_cast<std::size_t>(r.participant)].cohort;
    CHECK(r.isObserved(0) == (k != 0));
  }
  CHECK(res.droppedRecords == 0);

  // if the rule wipes the only observed factor, the record goes away
  data.records[0].observed[1] = 0;
  data.records[0].y[1] = std::numeric_limits<double>::quiet_NaN();
  const int victim = data.records[0].participant;
  const bool inC0 =
      data.participants[static_cast<std::size_t>(victim)].cohort == 0;
  const DeletionResult res2 = applyDeletionExperiment(data, rule, spec);
  if (inC0) {
    CHECK(res2.droppedRecords == 1);
    CHECK(res2.data.records.size() == data.records.size() - 1);
  } else {
    CHECK(res2.droppedRecords == 0);
  }
}

TEST_CASE("deletion rules are validated") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 2, 17);

  DeletionRule rule;
  rule.factor = "w";
  rule.ageBelow = 45.0;
  CHECK_THROWS_AS(applyDeletionExperiment(data, rule, spec),
                  std::invalid_argument);

  rule.factor = "u";
  rule.ageBelow = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(applyDeletionExperiment(data, rule, spec),
                  std::invalid_argument);

  rule.cohort = "ZZ";
  CHECK_THROWS_AS(applyDeletionExperiment(data, rule, spec),
                  std::invalid_argument);

  rule.cohort.clear();
  rule.ageBelow = 18.0;  // below every exam age in the toy data
  CHECK_THROWS_AS(applyDeletionExperiment(data, rule, spec),
                  std::invalid_argument);
}
