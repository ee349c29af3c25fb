#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "lrtraj/io.hpp"
#include "lrtraj/sampler.hpp"

using namespace lrtraj;
using testutil::TempDir;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  f << body;
}

const char* kHeader2 =
    "cohort,participant,sex,age,race_black,edu_hs,edu_hsplus,birth_year,"
    "rf_1,rf_2\n";

}  // namespace

TEST_CASE("doubles survive the round trip through text") {
  Rng rng = Rng::stream(21, 0);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::exp(10.0 * rng.normal()) * (rng.normal() < 0 ? -1 : 1);
    const std::string s = formatDouble(v);
    double back = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(res.ec == std::errc());
    CHECK(back == v);
  }
  CHECK(formatDouble(0.25) == "0.25");
  CHECK(formatDouble(-3.0) == "-3");
}

TEST_CASE("dataset files round trip exactly, missing cells included") {
  const ModelSpec spec = testutil::toySpec2();
  LongitudinalDataset data = testutil::toyData(spec, 2, 3, 5);
  data.records[0].observed[0] = 0;
  data.records[0].y[0] = std::numeric_limits<double>::quiet_NaN();
  data.records[2].observed[1] = 0;
  data.records[2].y[1] = std::numeric_limits<double>::quiet_NaN();

  TempDir tmp;
  const std::string path = tmp.file("d.csv");
  emitDataset(data, path);

  const std::string text = slurp(path);
  CHECK(text.rfind(kHeader2, 0) == 0);
  CHECK(text.find("NA") != std::string::npos);
  CHECK(text.find('\r') == std::string::npos);

  IngestReport rep;
  const LongitudinalDataset back = ingestDataset(path, spec, &rep);
  REQUIRE(back.records.size() == data.records.size());
  REQUIRE(back.participants.size() == data.participants.size());
  CHECK(back.cohorts == data.cohorts);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    CHECK(back.records[i].age == data.records[i].age);
    for (int l = 0; l < spec.L(); ++l) {
      CHECK(back.records[i].isObserved(l) == data.records[i].isObserved(l));
      if (data.records[i].isObserved(l))
        CHECK(back.records[i].y[l] == data.records[i].y[l]);
    }
  }
  for (std::size_t i = 0; i < data.participants.size(); ++i) {
    CHECK(back.participants[i].id == data.participants[i].id);
    CHECK(back.participants[i].birthYear == data.participants[i].birthYear);
    CHECK(back.participants[i].raceBlack == data.participants[i].raceBlack);
  }
  CHECK(rep.droppedFullyMissing == 0);
  int missTotal = 0;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) missTotal += rep.missingCount[k][l];
  CHECK(missTotal == 2);

  // emitting the ingested copy reproduces the bytes
  const std::string path2 = tmp.file("d2.csv");
  emitDataset(back, path2);
  CHECK(slurp(path2) == text);
}

TEST_CASE("ingest rejects malformed files with line context") {
  const ModelSpec spec = testutil::toySpec2();
  TempDir tmp;
  const std::string p = tmp.file("bad.csv");

  spit(p, "cohort,participant,sex,age\nA,1,M,30\n");
  CHECK_THROWS_WITH_AS(ingestDataset(p, spec), doctest::Contains("header"),
                       std::invalid_argument);

  spit(p, std::string(kHeader2) + "A,p1,M,30,0,1,0,1940,120\n");
  CHECK_THROWS_AS(ingestDataset(p, spec), std::invalid_argument);

  spit(p, std::string(kHeader2) + "A,p1,M,12,0,1,0,1940,120,70\n");
  CHECK_THROWS_WITH_AS(ingestDataset(p, spec), doctest::Contains(":2: age"),
                       std::invalid_argument);

  spit(p, std::string(kHeader2) + "A,p1,M,30,2,1,0,1940,120,70\n");
  CHECK_THROWS_AS(ingestDataset(p, spec), std::invalid_argument);

  spit(p, std::string(kHeader2) + "A,p1,M,30,0,1,0,1940.5,120,70\n");
  CHECK_THROWS_AS(ingestDataset(p, spec), std::invalid_argument);

  spit(p, std::string(kHeader2) + "A,p1,M,30,0,1,0,1940,abc,70\n");
  CHECK_THROWS_AS(ingestDataset(p, spec), std::invalid_argument);

  // second exam at the same age
  spit(p, std::string(kHeader2) + "A,p1,M,30,0,1,0,1940,120,70\n" +
              "A,p1,M,30,0,1,0,1940,121,71\n");
  CHECK_THROWS_WITH_AS(ingestDataset(p, spec), doctest::Contains("duplicate"),
                       std::invalid_argument);

  // participant attributes must not change between exams
  spit(p, std::string(kHeader2) + "A,p1,M,30,0,1,0,1940,120,70\n" +
              "A,p1,M,35,1,1,0,1940,121,71\n");
  CHECK_THROWS_AS(ingestDataset(p, spec), std::invalid_argument);

  spit(p, std::string(kHeader2));
  CHECK_THROWS_WITH_AS(ingestDataset(p, spec), doctest::Contains("no data"),
                       std::invalid_argument);

  CHECK_THROWS_AS(ingestDataset(tmp.file("absent.csv"), spec),
                  std::invalid_argument);
}

TEST_CASE("fully missing exams are dropped and counted") {
  const ModelSpec spec = testutil::toySpec2();
  TempDir tmp;
  const std::string p = tmp.file("gap.csv");
  spit(p, std::string(kHeader2) + "A,p1,M,30,0,1,0,1940,120,70\n" +
              "A,p1,M,35,0,1,0,1940,NA,NA\n" +
              "A,p1,M,40,0,1,0,1940,124,NA\n");
  IngestReport rep;
  const LongitudinalDataset d = ingestDataset(p, spec, &rep);
  CHECK(d.records.size() == 2);
  CHECK(rep.droppedFullyMissing == 1);
  CHECK(rep.missingCount[0][1] == 1);
  CHECK(rep.recordCount[0][0] == 2);
  CHECK(rep.missingPercent(0, 1) == doctest::Approx(50.0));

  const std::string mp = tmp.file("missing.csv");
  saveMissingnessReport(rep, d, spec, mp);
  const std::string text = slurp(mp);
  CHECK(text.rfind("cohort,factor,records,missing,missing_percent\n", 0) == 0);
  CHECK(text.find("A,v,2,1,50") != std::string::npos);
}

TEST_CASE("draw files round trip with their sidecar metadata") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 2, 6);
  SamplerConfig cfg;
  cfg.superchains = 2;
  cfg.subchains = 2;
  cfg.iterations = 4;
  cfg.warmup = 2;
  cfg.seed = 99;
  cfg.init = InitStrategy::PriorDraw;
  const PosteriorDraws draws = runSampler(data, spec, cfg, Variant::NoCohort);

  TempDir tmp;
  const std::string p = tmp.file("draws.csv");
  saveDraws(draws, p);
  CHECK(drawsMetaPath(p) == tmp.file("draws.meta.json"));
  CHECK(std::filesystem::exists(drawsMetaPath(p)));

  const PosteriorDraws back = loadDraws(p, spec, data);
  CHECK(back.seed == draws.seed);
  CHECK(back.layout.variant() == Variant::NoCohort);
  CHECK(back.superchains == 2);
  CHECK(back.warmup == 2);
  REQUIRE(back.values.rows() == draws.values.rows());
  REQUIRE(back.values.cols() == draws.values.cols());
  CHECK((back.values - draws.values).cwiseAbs().maxCoeff() == 0.0);

  // a different dataset shape must be rejected
  const LongitudinalDataset other = testutil::toyData(spec, 3, 2, 6);
  CHECK_THROWS_AS(loadDraws(p, spec, other), std::invalid_argument);

  // truncated payload
  std::string text = slurp(p);
  text.resize(text.size() - 40);
  spit(p, text);
  CHECK_THROWS_AS(loadDraws(p, spec, data), std::invalid_argument);
}

TEST_CASE("ground truth, held-out cells and estimates round trip") {
  const ModelSpec spec = testutil::toySpec2();
  const LongitudinalDataset data = testutil::toyData(spec, 2, 2, 7);
  std::vector<std::string> ids;
  for (const auto& p : data.participants) ids.push_back(p.id);
  const ParamLayout layout(spec, data.cohorts, ids, Variant::Full);
  Rng rng = Rng::stream(30, 0);
  GroundTruth truth;
  truth.seed = 12345;
  truth.state = testutil::randomState(layout, rng);

  TempDir tmp;
  const std::string tp = tmp.file("truth.json");
  saveGroundTruth(truth, layout, tp);
  const GroundTruth back = loadGroundTruth(tp, layout);
  CHECK(back.seed == truth.seed);
  CHECK((layout.flatten(back.state) - layout.flatten(truth.state))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const std::vector<HeldOutCell> cells = {{"p1", 42.5, "u", 118.25},
                                          {"p2", 61.0, "v", 70.5}};
  const std::string hp = tmp.file("held.csv");
  saveHeldOut(cells, hp);
  const std::vector<HeldOutCell> hback = loadHeldOut(hp);
  REQUIRE(hback.size() == 2);
  CHECK(hback[0].participant == "p1");
  CHECK(hback[0].age == 42.5);
  CHECK(hback[1].factor == "v");
  CHECK(hback[1].value == 70.5);

  const std::vector<std::pair<double, double>> ests = {{1.5, 0.25},
                                                       {2.5, 0.5}};
  const std::string ep = tmp.file("est.csv");
  saveEstimates(ests, ep);
  CHECK(loadEstimates(ep) == ests);
  spit(ep, "estimate,variance\n1.5\n");
  CHECK_THROWS_AS(loadEstimates(ep), std::invalid_argument);
}

TEST_CASE("run configuration is strict about unknown keys") {
  TempDir tmp;
  const std::string p = tmp.file("cfg.json");

  spit(p, R"({"seed": 1, "output_dir": "o",
              "model": {"risk_factors": ["u", "v"]}})");
  const RunConfig cfg = loadConfig(p);
  CHECK(cfg.seed == 1);
  CHECK(cfg.model.L() == 2);
  CHECK(cfg.sampler.seed == 1);
  CHECK(cfg.profiles.size() == 3);  // built-in design by default
  CHECK(cfg.imputations == 128);

  spit(p, R"({"seed": 1, "output_dir": "o", "typo": 2,
              "model": {"risk_factors": ["u"]}})");
  CHECK_THROWS_WITH_AS(loadConfig(p), doctest::Contains("typo"),
                       std::invalid_argument);

  spit(p, R"({"seed": 1, "output_dir": "o",
              "model": {"risk_factors": ["u"], "breaks": []}})");
  CHECK_THROWS_AS(loadConfig(p), std::invalid_argument);

  spit(p, R"({"seed": 1, "output_dir": "o",
              "model": {"risk_factors": ["u"]},
              "sampler": {"superchain": 4}})");
  CHECK_THROWS_AS(loadConfig(p), std::invalid_argument);

  spit(p, R"({"seed": 1, "output_dir": "o",
              "model": {"risk_factors": ["u"]},
              "simulate": {"profiles": [{"participants": 5}]}})");
  CHECK_THROWS_AS(loadConfig(p), std::invalid_argument);  // profile needs name

  spit(p, R"({"seed": 1, "output_dir": "o",
              "model": {"risk_factors": ["u"]},
              "experiment": {"deletions": [{"factor": "w"}]}})");
  CHECK_THROWS_WITH_AS(loadConfig(p), doctest::Contains("unknown factor"),
                       std::invalid_argument);

  spit(p, R"({"output_dir": "o", "model": {"risk_factors": ["u"]}})");
  CHECK_THROWS_WITH_AS(loadConfig(p), doctest::Contains("seed"),
                       std::invalid_argument);

  spit(p, R"({"seed": 1, "output_dir": "o",
              "model": {"risk_factors": ["u"]},
              "experiment": {"imputations": 1}})");
  CHECK_THROWS_AS(loadConfig(p), std::invalid_argument);

  spit(p, "not json");
  CHECK_THROWS_AS(loadConfig(p), std::invalid_argument);
}

TEST_CASE("full configuration parse with overrides") {
  TempDir tmp;
  const std::string p = tmp.file("cfg.json");
  spit(p, R"({
    "seed": 7,
    "data": "in.csv",
    "output_dir": "outdir",
    "model": {"risk_factors": ["u", "v"], "breakpoints": [40, 60],
              "birth_year_age_interaction": false, "sex_stratum": "F"},
    "sampler": {"superchains": 2, "subchains": 3, "iterations": 10,
                "warmup": 4, "init": "prior-draw"},
    "simulate": {"profiles": [
      {"name": "A", "participants": 8, "miss_rate": [0.1, 0.2],
       "block_rules": [{"factor": "v", "below_age": 45}]},
      {"name": "B", "enroll_age_lo": 40, "enroll_age_hi": 60}
    ]},
    "experiment": {"deletions": [{"factor": "v", "age_below": 50,
                                  "cohort": "A"}],
                   "imputations": 16, "qq_draws": 32}
  })");
  const RunConfig cfg = loadConfig(p);
  CHECK(cfg.dataPath == "in.csv");
  CHECK(cfg.model.P() == 3);
  CHECK_FALSE(cfg.model.covariates.birthYearAgeInteraction);
  CHECK(cfg.model.sexStratum == "F");
  CHECK(cfg.sampler.subchains == 3);
  CHECK(cfg.sampler.init == InitStrategy::PriorDraw);
  REQUIRE(cfg.profiles.size() == 2);
  CHECK(cfg.profiles[0].missRate[1] == 0.2);
  REQUIRE(cfg.profiles[0].blockRules.size() == 1);
  CHECK(cfg.profiles[0].blockRules[0].factor == 1);
  CHECK(cfg.profiles[0].blockRules[0].belowAge == 45.0);
  CHECK(cfg.profiles[1].enrollAgeLo == 40.0);
  REQUIRE(cfg.deletions.size() == 1);
  CHECK(cfg.deletions[0].factor == "v");
  CHECK(cfg.deletions[0].ageBelow == 50.0);
  CHECK(cfg.imputations == 16);
  CHECK(cfg.qqDraws == 32);
}
