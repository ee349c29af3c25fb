#include "lrtraj/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lrtraj {

void CohortProfile::validate(const ModelSpec& spec) const {
  if (name.empty()) throw std::invalid_argument("cohort profile needs a name");
  if (!(enrollAgeLo <= enrollAgeHi))
    throw std::invalid_argument(name + ": enrollment age range inverted");
  if (enrollAgeLo < spec.ageMin || enrollAgeHi > spec.ageMax)
    throw std::invalid_argument(name + ": enrollment ages outside model range");
  if (followUpYears < 0.0 || !(examSpacingYears > 0.0))
    throw std::invalid_argument(name + ": bad exam schedule");
  if (participantCount < 1)
    throw std::invalid_argument(name + ": participantCount must be >= 1");
  auto prob = [&](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(name + ": " + what + " outside [0, 1]");
  };
  prob(pBlack, "pBlack");
  prob(pEduHs, "pEduHs");
  prob(pEduHsPlus, "pEduHsPlus");
  if (pEduHs + pEduHsPlus > 1.0)
    throw std::invalid_argument(name + ": education mix exceeds 1");
  double mixSum = 0.0;
  for (double p : birthYearMix) {
    prob(p, "birthYearMix entry");
    mixSum += p;
  }
  if (std::abs(mixSum - 1.0) > 1e-9)
    throw std::invalid_argument(name + ": birthYearMix must sum to 1");
  if (static_cast<int>(missRate.size()) != spec.L())
    throw std::invalid_argument(name + ": missRate needs one entry per factor");
  for (double p : missRate) prob(p, "missRate entry");
  for (const BlockMissingRule& r : blockRules)
    if (r.factor < 0 || r.factor >= spec.L())
      throw std::invalid_argument(name + ": block rule names a bad factor");
}

PopulationParams DeskTruth::population() const {
  PopulationParams p;
  p.Delta = delta;
  p.Gamma = gamma;
  p.Lambda = state.lambda;
  p.omega = state.omega;
  p.psi = state.psi;
  return p;
}

DeskTruth defaultDeskTruth(const ModelSpec& spec, int K) {
  const int L = spec.L();
  const int P = spec.P();
  if (L != 3)
    throw std::invalid_argument("desk truth is defined for L = 3 factors");
  DeskTruth t;
  AlphaLayout lay(spec);

  /* fixed effects: systolic-pressure-like, diastolic-like, cholesterol-like */
  const double level0[3] = {110.0, 72.0, 190.0};
  const double raceL[3] = {3.5, 1.6, 6.0};
  const double eduHsL[3] = {-1.2, -0.6, -3.0};
  const double eduHpL[3] = {-2.4, -1.0, -5.5};
  const double byL[3][3] = {{1.0, 1.8, 2.5}, {0.5, 0.9, 1.4}, {2.0, 3.5, 5.0}};
  const double age0[3] = {0.45, 0.22, 0.85};
  const double raceA[3] = {0.030, 0.015, 0.050};
  const double eduHsA[3] = {-0.012, -0.008, -0.020};
  const double eduHpA[3] = {-0.020, -0.012, -0.035};
  const double byA[3][3] = {{-0.005, -0.009, -0.013},
                            {-0.003, -0.005, -0.008},
                            {-0.013, -0.008, -0.020}};
  const double winPattern[6] = {0.30, -0.18, 0.10, 0.04, -0.12, -0.06};
  const double winAmp[4] = {1.0, 0.35, 0.22, 0.28};
  const double winScale[3] = {0.5, 0.28, 0.9};

  t.state.alpha.assign(3, Eigen::VectorXd::Zero(lay.size()));
  for (int l = 0; l < 3; ++l) {
    Eigen::VectorXd& a = t.state.alpha[static_cast<size_t>(l)];
    a[lay.levelIndex(0)] = level0[l];
    a[lay.levelIndex(1)] = raceL[l];
    a[lay.levelIndex(2)] = eduHsL[l];
    a[lay.levelIndex(3)] = eduHpL[l];
    for (int s = 0; s < 3; ++s) a[lay.levelIndex(4 + s)] = byL[l][s];
    a[lay.ageIndex(0)] = age0[l];
    a[lay.ageIndex(1)] = raceA[l];
    a[lay.ageIndex(2)] = eduHsA[l];
    a[lay.ageIndex(3)] = eduHpA[l];
    if (spec.covariates.birthYearAgeInteraction)
      for (int s = 0; s < 3; ++s) a[lay.ageIndex(4 + s)] = byA[l][s];
    for (int w = 0; w < P - 1; ++w)
      for (int c = 0; c < 4; ++c)
        a[lay.windowIndex(w, c)] =
            winPattern[w % 6] * winAmp[c] * winScale[l];
  }

  /* Delta = (m r m') x V per block plus per-factor diagonal boosts; cross
   * blocks stay symmetric so the same-exam cross-factor moment has its
   * closed form. */
  Eigen::Matrix2d V;
  V << 1.0, 0.0019, 0.0019, 4.0e-5;
  const double m[3] = {8.0, 5.0, 12.0};
  Eigen::Matrix3d R;
  R << 1.0, 0.50, 0.35, 0.50, 1.0, 0.45, 0.35, 0.45, 1.0;
  t.delta = Eigen::MatrixXd::Zero(6, 6);
  for (int l = 0; l < 3; ++l)
    for (int lp = 0; lp < 3; ++lp)
      t.delta.block<2, 2>(2 * l, 2 * lp) = m[l] * m[lp] * R(l, lp) * V;
  for (int l = 0; l < 3; ++l) {
    t.delta(2 * l, 2 * l) += 4.0;
    t.delta(2 * l + 1, 2 * l + 1) += 1.0e-5;
  }

  t.gamma = Eigen::Matrix3d::Identity();
  t.gamma(0, 1) = t.gamma(1, 0) = 0.45;
  t.gamma(0, 2) = t.gamma(2, 0) = 0.30;
  t.gamma(1, 2) = t.gamma(2, 1) = 0.20;

  t.state.sigma = blockKronecker(t.delta, t.gamma);

  const double lamSd[3] = {0.05, 0.04, 0.03};
  const double lamCorr[3] = {0.4, 0.3, 0.2};
  t.state.lambda.assign(3, Eigen::MatrixXd::Zero(K, K));
  for (int l = 0; l < 3; ++l) {
    Eigen::MatrixXd& lam = t.state.lambda[static_cast<size_t>(l)];
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        lam(i, j) = lamSd[l] * lamSd[l] * (i == j ? 1.0 : lamCorr[l]);
  }

  const double omegaBase[3] = {1.6, 1.0, 1.2};
  t.state.omega = Eigen::MatrixXd::Zero(3, P);
  for (int l = 0; l < 3; ++l)
    for (int w = 0; w < P; ++w)
      t.state.omega(l, w) = omegaBase[l] * (0.85 + 0.05 * ((w + l) % 4));

  t.state.psi = Eigen::VectorXd::Zero(3);
  t.state.psi << 1.2, -0.8, 0.0;
  return t;
}

std::vector<CohortProfile> deskProfiles(int L) {
  CohortProfile young;
  young.name = "YOUNG";
  young.enrollAgeLo = 18.0;
  young.enrollAgeHi = 30.0;
  young.followUpYears = 30.0;
  young.examSpacingYears = 3.0;
  young.pBlack = 0.25;
  young.birthYearMix = {0.0, 0.05, 0.15, 0.80};

  CohortProfile mid;
  mid.name = "MID";
  mid.enrollAgeLo = 45.0;
  mid.enrollAgeHi = 64.0;
  mid.followUpYears = 25.0;
  mid.examSpacingYears = 3.0;
  mid.pBlack = 0.15;
  mid.birthYearMix = {0.10, 0.45, 0.40, 0.05};

  CohortProfile full;
  full.name = "FULL";
  full.enrollAgeLo = 18.0;
  full.enrollAgeHi = 60.0;
  full.followUpYears = 45.0;
  full.examSpacingYears = 4.0;
  full.pBlack = 0.55;
  full.birthYearMix = {0.35, 0.40, 0.20, 0.05};

  const double rates[3][3] = {
      {0.05, 0.10, 0.20}, {0.03, 0.05, 0.10}, {0.08, 0.05, 0.12}};
  std::vector<CohortProfile> out{young, mid, full};
  for (size_t k = 0; k < out.size(); ++k) {
    out[k].participantCount = 100;
    out[k].missRate.assign(static_cast<size_t>(L), 0.1);
    for (int l = 0; l < L && l < 3; ++l)
      out[k].missRate[static_cast<size_t>(l)] = rates[k][static_cast<size_t>(l)];
  }
  return out;
}

namespace {

/* sampling ranges for the four birth-year strata */
void strataRanges(const ModelSpec& spec, int lo[4], int hi[4]) {
  const std::vector<int>& cuts = spec.birthYearCuts;
  lo[0] = cuts[0] - 15;
  hi[0] = cuts[0];
  lo[1] = cuts[0] + 1;
  hi[1] = cuts[1];
  lo[2] = cuts[1] + 1;
  hi[2] = cuts[2];
  lo[3] = cuts[2] + 1;
  hi[3] = cuts[2] + 30;
}

int drawCategory(const double* probs, int n, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

}  // namespace

SimulationResult simulateDataset(const std::vector<CohortProfile>& profiles,
                                 const ModelSpec& spec,
                                 const ParameterState& truth,
                                 std::uint64_t seed) {
  if (profiles.empty())
    throw std::invalid_argument("simulateDataset: no cohort profiles");
  const int L = spec.L();
  const int P = spec.P();
  const int K = static_cast<int>(profiles.size());
  for (const CohortProfile& p : profiles) p.validate(spec);
  if (static_cast<int>(truth.alpha.size()) != L)
    throw std::invalid_argument("simulateDataset: truth has wrong factor count");
  if (truth.sigma.rows() != 2 * L)
    throw std::invalid_argument("simulateDataset: truth Sigma has wrong size");
  for (const Eigen::MatrixXd& lam : truth.lambda)
    if (lam.rows() != K)
      throw std::invalid_argument(
          "simulateDataset: truth Lambda does not match the cohort count");

  int stratumLo[4], stratumHi[4];
  strataRanges(spec, stratumLo, stratumHi);

  SimulationResult out;
  out.truth.seed = seed;
  out.truth.state = truth;
  LongitudinalDataset& data = out.data;
  data.L = L;
  for (const CohortProfile& p : profiles) data.cohorts.push_back(p.name);

  /* cohort effects: drawn once, jointly across cohorts per coefficient */
  Rng cohortRng = Rng::stream(seed, 1);
  out.truth.state.cohortEffect.assign(static_cast<size_t>(L),
                                      Eigen::MatrixXd::Zero(K, P + 2));
  for (int l = 0; l < L; ++l)
    out.truth.state.cohortEffect[static_cast<size_t>(l)] =
        sampleCohortEffects(truth.lambda[static_cast<size_t>(l)], P + 2,
                            cohortRng);

  std::vector<Eigen::VectorXd> subjectCols;
  int globalIndex = 0;
  for (int k = 0; k < K; ++k) {
    const CohortProfile& prof = profiles[static_cast<size_t>(k)];
    for (int i = 0; i < prof.participantCount; ++i, ++globalIndex) {
      Rng rng = Rng::stream(seed, 2, static_cast<std::uint64_t>(globalIndex));
      Participant person;
      person.id = prof.name + "-" + std::to_string(i);
      person.cohort = k;
      person.sex = prof.sex;
      person.raceBlack = rng.uniform() < prof.pBlack ? 1 : 0;
      double eduProbs[3] = {1.0 - prof.pEduHs - prof.pEduHsPlus, prof.pEduHs,
                            prof.pEduHsPlus};
      int edu = drawCategory(eduProbs, 3, rng);
      person.eduHs = edu == 1 ? 1 : 0;
      person.eduHsPlus = edu == 2 ? 1 : 0;
      int stratum = drawCategory(prof.birthYearMix.data(), 4, rng);
      person.birthYear =
          stratumLo[stratum] +
          static_cast<int>(rng.integer(static_cast<std::uint64_t>(
              stratumHi[stratum] - stratumLo[stratum] + 1)));

      Eigen::MatrixXd b = sampleSubjectEffects(truth.sigma, rng);
      Eigen::VectorXd x = covariateVector(person.raceBlack, person.eduHs,
                                          person.eduHsPlus, person.birthYear,
                                          spec);
      std::vector<Eigen::VectorXd> beta(static_cast<size_t>(L));
      for (int l = 0; l < L; ++l) {
        Eigen::Vector2d subj = b.col(l);
        Eigen::VectorXd coh = out.truth.state.cohortEffect[static_cast<size_t>(l)]
                                  .row(k)
                                  .transpose();
        beta[static_cast<size_t>(l)] = buildBeta(
            x, truth.alpha[static_cast<size_t>(l)], &subj, &coh, spec);
      }

      double enroll = rng.uniform(prof.enrollAgeLo, prof.enrollAgeHi);
      std::vector<Record> kept;
      for (double offset = 0.0; offset <= prof.followUpYears + 1e-9;
           offset += prof.examSpacingYears) {
        double age = enroll + offset + rng.uniform(-0.5, 0.5);
        /* the jitter draw is consumed either way, so the exam grid of later
         * visits does not depend on range clipping */
        if (age < spec.ageMin || age > spec.ageMax) continue;
        Record r;
        r.age = age;
        r.y = Eigen::VectorXd::Zero(L);
        r.observed.assign(static_cast<size_t>(L), 1);
        Eigen::VectorXd basis = buildBasis(age, spec);
        int w = spec.windowIndex(age);
        for (int l = 0; l < L; ++l) {
          double err = truth.omega(l, w) > 0.0
                           ? skewNormalDraw(truth.omega(l, w), truth.psi[l], rng)
                           : 0.0;
          r.y[l] = basis.dot(beta[static_cast<size_t>(l)]) + err;
        }
        /* missingness after values: MAR, decisions never read y */
        for (int l = 0; l < L; ++l) {
          bool missing = rng.uniform() < prof.missRate[static_cast<size_t>(l)];
          for (const BlockMissingRule& rule : prof.blockRules) {
            if (rule.factor != l) continue;
            if (rule.entirely || (rule.belowAge == rule.belowAge &&
                                  age < rule.belowAge))
              missing = true;
          }
          if (missing) {
            r.observed[static_cast<size_t>(l)] = 0;
            r.y[l] = std::numeric_limits<double>::quiet_NaN();
          }
        }
        bool any = false;
        for (int l = 0; l < L; ++l) any = any || r.isObserved(l);
        if (any) kept.push_back(std::move(r));
      }
      if (kept.empty()) continue;  /* all exams lost; drop the participant */
      int personIndex = static_cast<int>(data.participants.size());
      data.participants.push_back(person);
      Eigen::VectorXd col(2 * L);
      for (int l = 0; l < L; ++l) {
        col[2 * l] = b(0, l);
        col[2 * l + 1] = b(1, l);
      }
      subjectCols.push_back(col);
      for (Record& r : kept) {
        r.participant = personIndex;
        data.records.push_back(std::move(r));
      }
    }
  }

  out.truth.state.subjectEffect =
      Eigen::MatrixXd::Zero(2 * L, static_cast<Eigen::Index>(subjectCols.size()));
  for (size_t i = 0; i < subjectCols.size(); ++i)
    out.truth.state.subjectEffect.col(static_cast<Eigen::Index>(i)) =
        subjectCols[i];

  data.sortRecords();
  data.validate(spec);
  return out;
}

DeletionResult applyDeletionExperiment(const LongitudinalDataset& data,
                                       const DeletionRule& rule,
                                       const ModelSpec& spec) {
  const int l = spec.factorIndex(rule.factor);
  if (l < 0)
    throw std::invalid_argument("deletion rule names unknown factor '" +
                                rule.factor + "'");
  if (!rule.hasAgeBelow() && rule.cohort.empty())
    throw std::invalid_argument(
        "deletion rule needs an age or cohort restriction");
  int cohort = -1;
  if (!rule.cohort.empty()) {
    cohort = data.cohortIndex(rule.cohort);
    if (cohort < 0)
      throw std::invalid_argument("deletion rule names unknown cohort '" +
                                  rule.cohort + "'");
  }

  DeletionResult out;
  out.data = data;
  std::vector<Record> keptRecords;
  keptRecords.reserve(data.records.size());
  for (const Record& r : out.data.records) {
    Record rec = r;
    const Participant& person =
        out.data.participants[static_cast<size_t>(rec.participant)];
    bool match = rec.isObserved(l) &&
                 (cohort < 0 || person.cohort == cohort) &&
                 (!rule.hasAgeBelow() || rec.age < rule.ageBelow);
    if (match) {
      out.heldOut.push_back({person.id, rec.age, rule.factor, rec.y[l]});
      rec.observed[static_cast<size_t>(l)] = 0;
      rec.y[l] = std::numeric_limits<double>::quiet_NaN();
    }
    bool any = false;
    for (int f = 0; f < out.data.L; ++f) any = any || rec.isObserved(f);
    if (any)
      keptRecords.push_back(std::move(rec));
    else
      ++out.droppedRecords;
  }
  out.data.records = std::move(keptRecords);
  if (out.heldOut.empty())
    throw std::invalid_argument("deletion rule matches no observed values");
  return out;
}

}  // namespace lrtraj
