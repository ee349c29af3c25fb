#include "lrtraj/validate.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrtraj/covariance.hpp"
#include "lrtraj/dataset.hpp"
#include "lrtraj/impute.hpp"
#include "lrtraj/io.hpp"
#include "lrtraj/model.hpp"
#include "lrtraj/ppc.hpp"
#include "lrtraj/rhat.hpp"
#include "lrtraj/rng.hpp"
#include "lrtraj/sampler.hpp"
#include "lrtraj/simulator.hpp"
#include "lrtraj/state.hpp"

namespace lrtraj {

double ksStatistic(std::vector<double> sample,
                   const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

double kolmogorovPValue(double d, std::size_t n) {
  if (!(d > 0.0)) return 1.0;
  const double rn = std::sqrt(static_cast<double>(n));
  const double lam = (rn + 0.12 + 0.11 / rn) * d;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lam * lam);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

/* Every tolerance, seed and time budget used by the criteria. */
constexpr int kMomentReplicates = 1000000;
constexpr double kMomentSigmaBand = 3.0;
constexpr double kMomentBudgetSeconds = 300.0;
constexpr int kKroneckerTrials = 1000;
constexpr int kSkewSampleSize = 100000;
constexpr double kSkewKsBound = 0.01;
constexpr double kSkewQuadratureTol = 1e-4;
constexpr double kRhatTol = 1e-12;
constexpr double kPriorKsPBound = 0.01;
constexpr double kPriorBudgetSeconds = 600.0;
constexpr double kRecoveryBudgetSeconds = 1800.0;
constexpr double kCoverageFloor = 0.80;       // 90% intervals over fixed effects
constexpr double kRhatPassFraction = 0.95;    // share of parameters below 1.1
constexpr double kPppLo = 0.05, kPppHi = 0.95;
constexpr double kVarRatioLo = 0.80, kVarRatioHi = 1.25;
constexpr int kImputationCopies = 128;
constexpr double kImputeCoverLo = 0.92, kImputeCoverHi = 0.98;
constexpr double kPreserveLo = 0.20, kPreserveHi = 0.80;
constexpr double kPreservePassShare = 0.90;
constexpr double kPoolTol = 1e-12;

constexpr std::uint64_t kMomentSeed = 101;
constexpr std::uint64_t kKroneckerSeed = 202;
constexpr std::uint64_t kSkewSeed = 303;
constexpr std::uint64_t kPriorSeed = 505;
constexpr std::uint64_t kSimSeed = 1101;
constexpr std::uint64_t kRecoverySeed = 4601;
constexpr std::uint64_t kNoCohortSeed = 4602;
constexpr std::uint64_t kNoParticipantSeed = 4603;
constexpr std::uint64_t kMaskedFitSeed = 4604;
constexpr std::uint64_t kDeletedFitSeed = 4605;
constexpr std::uint64_t kImputeSeed = 7701;
constexpr std::uint64_t kCliSeed = 910;

struct Criterion {
  bool pass = false;
  std::string detail;
};

/* State carried between criteria: the synthetic study and its full fit feed
 * the calibration, imputation and pooling checks. */
struct Shared {
  ModelSpec spec;
  DeskTruth desk;
  std::optional<SimulationResult> sim;
  std::optional<PosteriorDraws> fullDraws;
  std::optional<DeletionResult> masked;  // one factor below 40 in one cohort
  std::optional<ImputedDatasetSet> imputations;
};

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

double quantileOf(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(v.begin(), v.end());
  const double h = p * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

/* ---- moment oracle: Monte Carlo over the random parts of three subjects. */

Criterion checkAnalyticMoments(const Shared& sh) {
  const ModelSpec& spec = sh.spec;
  const PopulationParams pop = sh.desk.population();
  const int L = pop.L();

  // Subjects 0 and 1 share cohort 0 (exams at 30.5 and 45.5); subject 2 sits
  // in cohort 1 (exam at 60.5). Fixed effects cancel from every covariance,
  // so only cohort, subject and error parts are simulated.
  const std::array<double, 3> age = {30.5, 45.5, 60.5};
  const std::array<int, 3> cohortOf = {0, 0, 1};
  std::array<int, 3> win{};
  for (int s = 0; s < 3; ++s) win[s] = spec.windowIndex(age[s]);

  const Eigen::MatrixXd subjChol = choleskyLower(pop.sigma(), "Sigma");
  std::vector<Eigen::MatrixXd> lamChol;
  for (int l = 0; l < L; ++l)
    lamChol.push_back(choleskyLower(pop.Lambda[l], "Lambda"));

  // Cohort-effect coefficient columns are independent across coefficients;
  // only the level, age and the three exam windows are ever read.
  std::vector<int> coefs = {0, 1};
  for (int s = 0; s < 3; ++s) coefs.push_back(2 + win[s]);
  std::sort(coefs.begin(), coefs.end());
  coefs.erase(std::unique(coefs.begin(), coefs.end()), coefs.end());
  std::array<int, 16> slotOf{};
  slotOf.fill(-1);
  for (std::size_t i = 0; i < coefs.size(); ++i)
    slotOf[static_cast<std::size_t>(coefs[i])] = static_cast<int>(i);

  const int nObs = 3 * L;
  std::vector<float> samples(
      static_cast<std::size_t>(kMomentReplicates) * nObs);
  Rng rng = Rng::stream(kMomentSeed, 1);
  const int K = pop.K();
  Eigen::VectorXd z(K), col(K);
  Eigen::VectorXd z6(2 * L), subj(2 * L);
  std::vector<Eigen::MatrixXd> ce(static_cast<std::size_t>(L));
  for (auto& m : ce) m.resize(K, static_cast<Eigen::Index>(coefs.size()));

  for (int r = 0; r < kMomentReplicates; ++r) {
    for (int l = 0; l < L; ++l)
      for (std::size_t c = 0; c < coefs.size(); ++c) {
        for (int k = 0; k < K; ++k) z[k] = rng.normal();
        ce[static_cast<std::size_t>(l)].col(static_cast<Eigen::Index>(c)) =
            lamChol[static_cast<std::size_t>(l)] * z;
      }
    float* out = &samples[static_cast<std::size_t>(r) * nObs];
    for (int s = 0; s < 3; ++s) {
      for (int i = 0; i < 2 * L; ++i) z6[i] = rng.normal();
      subj = subjChol * z6;
      const int k = cohortOf[s];
      const double a = age[s];
      for (int l = 0; l < L; ++l) {
        const auto& m = ce[static_cast<std::size_t>(l)];
        double v = m(k, slotOf[0]) + m(k, slotOf[1]) * a +
                   m(k, slotOf[static_cast<std::size_t>(2 + win[s])]) * a;
        v += subj[2 * l] + subj[2 * l + 1] * a;
        v += skewNormalDraw(pop.omega(l, win[s]), pop.psi[l], rng);
        out[s * L + l] = static_cast<float>(v);
      }
    }
  }

  std::vector<double> mean(static_cast<std::size_t>(nObs), 0.0);
  for (int r = 0; r < kMomentReplicates; ++r) {
    const float* row = &samples[static_cast<std::size_t>(r) * nObs];
    for (int i = 0; i < nObs; ++i) mean[static_cast<std::size_t>(i)] += row[i];
  }
  for (double& m : mean) m /= kMomentReplicates;

  struct Cmp {
    int i, j;
    double expect;
    const char* label;
  };
  std::vector<Cmp> cmps;
  auto idx = [L](int s, int l) { return s * L + l; };
  for (int l = 0; l < L; ++l) {
    cmps.push_back({idx(0, l), idx(0, l),
                    analyticVariance(l, 0, age[0], pop, spec), "variance"});
    cmps.push_back({idx(2, l), idx(2, l),
                    analyticVariance(l, 1, age[2], pop, spec), "variance"});
  }
  for (int l = 0; l < L; ++l)
    for (int lp = 0; lp < L; ++lp) {
      if (l < lp)
        cmps.push_back({idx(0, l), idx(0, lp),
                        analyticCovariance(
                            MomentCase::SameSubjectCrossFactor,
                            {l, lp, 0, 0, age[0], age[0]}, pop, spec),
                        "same-subject cross-factor"});
      if (l == lp)
        cmps.push_back({idx(0, l), idx(1, l),
                        analyticCovariance(
                            MomentCase::SameCohortCrossSubject,
                            {l, l, 0, 0, age[0], age[1]}, pop, spec),
                        "same-cohort cross-subject"});
      else
        cmps.push_back({idx(0, l), idx(1, lp),
                        analyticCovariance(
                            MomentCase::SameCohortCrossSubjectCrossFactor,
                            {l, lp, 0, 0, age[0], age[1]}, pop, spec),
                        "same-cohort cross-subject cross-factor"});
      if (l == lp)
        cmps.push_back({idx(0, l), idx(2, l),
                        analyticCovariance(
                            MomentCase::CrossCohortSameFactor,
                            {l, l, 0, 1, age[0], age[2]}, pop, spec),
                        "cross-cohort same-factor"});
      else
        cmps.push_back({idx(0, l), idx(2, lp),
                        analyticCovariance(
                            MomentCase::CrossCohortCrossFactor,
                            {l, lp, 0, 1, age[0], age[2]}, pop, spec),
                        "cross-cohort cross-factor"});
    }

  double worstZ = 0.0;
  const char* worstLabel = "";
  int ok = 0;
  for (const Cmp& c : cmps) {
    const double mi = mean[static_cast<std::size_t>(c.i)];
    const double mj = mean[static_cast<std::size_t>(c.j)];
    double sum = 0.0, sumSq = 0.0;
    for (int r = 0; r < kMomentReplicates; ++r) {
      const float* row = &samples[static_cast<std::size_t>(r) * nObs];
      const double p = (row[c.i] - mi) * (row[c.j] - mj);
      sum += p;
      sumSq += p * p;
    }
    const double n = kMomentReplicates;
    const double emp = sum / n;
    const double varP = std::max(sumSq / n - emp * emp, 0.0);
    const double se = std::sqrt(varP / n);
    const double z = std::abs(emp - c.expect) / std::max(se, 1e-300);
    if (z <= kMomentSigmaBand) {
      ++ok;
    }
    if (z > worstZ) {
      worstZ = z;
      worstLabel = c.label;
    }
  }
  Criterion out;
  out.pass = ok == static_cast<int>(cmps.size());
  out.detail = std::to_string(ok) + "/" + std::to_string(cmps.size()) +
               " moments within " + fmt(kMomentSigmaBand, 2) +
               " MC standard errors (worst z " + fmt(worstZ) + ", " +
               worstLabel + ", n=" + std::to_string(kMomentReplicates) + ")";
  return out;
}

/* ---- covariance composition against the literal entrywise product. */

Criterion checkBlockKronecker() {
  Rng rng = Rng::stream(kKroneckerSeed, 1);
  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < kKroneckerTrials; ++t) {
    const int L = 1 + static_cast<int>(rng.integer(5));
    Eigen::MatrixXd m(2 * L, 2 * L), g(L, L);
    for (int i = 0; i < 2 * L; ++i)
      for (int j = 0; j < 2 * L; ++j) m(i, j) = rng.normal();
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) g(i, j) = rng.normal();
    const Eigen::MatrixXd delta =
        m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(2 * L, 2 * L);
    const Eigen::MatrixXd gamma =
        g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(L, L);
    const Eigen::MatrixXd sigma = blockKronecker(delta, gamma);
    bool trialOk = sigma.rows() == 2 * L && sigma.cols() == 2 * L;
    for (int r = 0; trialOk && r < 2 * L; ++r)
      for (int c = 0; c < 2 * L; ++c) {
        const double expect = gamma(r / 2, c / 2) * delta(r, c);
        const double diff = std::abs(sigma(r, c) - expect);
        const double tol =
            std::abs(expect) * std::numeric_limits<double>::epsilon();
        worst = std::max(worst, tol > 0 ? diff / tol : diff);
        if (diff > tol) {
          trialOk = false;
          break;
        }
      }
    if (!trialOk) ++bad;
  }
  Criterion out;
  out.pass = bad == 0;
  out.detail = std::to_string(kKroneckerTrials - bad) + "/" +
               std::to_string(kKroneckerTrials) +
               " random SPD compositions match the entrywise product to 1 ulp";
  return out;
}

/* ---- skew-normal error model: reduction, mean, density normalization. */

Criterion checkSkewNormal() {
  Rng rng = Rng::stream(kSkewSeed, 1);
  std::vector<double> x(kSkewSampleSize);

  SkewNormal reduced{1.0, 0.0};
  for (double& v : x) v = reduced.draw(rng);
  const double dKs = ksStatistic(
      x, [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); });
  const bool normalOk = dKs < kSkewKsBound;

  SkewNormal skew{1.0, 1.0};
  double sum = 0.0, sumSq = 0.0;
  for (int i = 0; i < kSkewSampleSize; ++i) {
    const double v = skew.draw(rng);
    sum += v;
    sumSq += v * v;
  }
  const double m = sum / kSkewSampleSize;
  const double sd = std::sqrt(
      std::max(sumSq / kSkewSampleSize - m * m, 0.0));
  const double target = 1.0 / std::sqrt(M_PI);  // delta * sqrt(2/pi)
  const double se = sd / std::sqrt(static_cast<double>(kSkewSampleSize));
  const bool meanOk = std::abs(m - target) <= 3.0 * se;

  // Simpson rule over +-60 scales; the density is smooth and light-tailed.
  double worstInt = 0.0;
  const std::array<std::pair<double, double>, 4> cases = {
      {{1.0, 0.0}, {1.0, 1.0}, {2.0, -3.0}, {0.5, 5.0}}};
  for (const auto& [om, ps] : cases) {
    const double lo = -60.0 * om, hi = 60.0 * om;
    const int nIntervals = 48000;
    const double h = (hi - lo) / nIntervals;
    double acc = 0.0;
    for (int i = 0; i <= nIntervals; ++i) {
      const double e = lo + h * i;
      const double f = std::exp(skewNormalLogDensity(e, om, ps));
      const double w = (i == 0 || i == nIntervals) ? 1.0
                       : (i % 2 == 1)              ? 4.0
                                                   : 2.0;
      acc += w * f;
    }
    acc *= h / 3.0;
    worstInt = std::max(worstInt, std::abs(acc - 1.0));
  }
  const bool quadOk = worstInt <= kSkewQuadratureTol;

  Criterion out;
  out.pass = normalOk && meanOk && quadOk;
  out.detail = "zero-shape KS " + fmt(dKs) + " (<" + fmt(kSkewKsBound, 2) +
               "), mean error " + fmt(std::abs(m - target)) + " (<=3se " +
               fmt(3.0 * se) + "), worst |integral-1| " + fmt(worstInt);
  return out;
}

/* ---- nested convergence statistic on hand examples. */

Criterion checkNestedRhat() {
  using Traces = std::vector<std::vector<std::vector<double>>>;
  const Traces hand = {{{0.0, 0.0}, {2.0, 2.0}}, {{4.0, 4.0}, {6.0, 6.0}}};
  const double r = nestedRhatCore(hand);
  const bool handOk = std::abs(r - std::sqrt(5.0)) <= kRhatTol;

  const Traces flat = {{{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}},
                       {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}}};
  const double rFlat = nestedRhatCore(flat);
  const bool flatOk = rFlat == 1.0;

  const Traces stuck = {{{1.0, 1.0}}, {{2.0, 2.0}}};
  const double rStuck = nestedRhatCore(stuck);
  const bool stuckOk = std::isinf(rStuck);

  Criterion out;
  out.pass = handOk && flatOk && stuckOk;
  out.detail = "hand example " + fmt(r, 17) + " vs sqrt(5), identical chains " +
               fmt(rFlat, 17) + ", zero-variance split " +
               (std::isinf(rStuck) ? "inf" : fmt(rStuck));
  return out;
}

/* ---- with no data every chain draws from the prior; the pooled shape
 * parameters must match their prior law. */

Criterion checkPriorRecovery(const Shared& sh) {
  LongitudinalDataset empty;
  empty.L = sh.spec.L();

  SamplerConfig cfg;
  cfg.superchains = 8;
  cfg.subchains = 16;
  cfg.iterations = 130;
  cfg.warmup = 50;
  cfg.seed = kPriorSeed;
  cfg.init = InitStrategy::PriorDraw;
  const PosteriorDraws draws =
      runSampler(empty, sh.spec, cfg, Variant::Full);

  const PriorSettings prior;
  const auto cdf = [&prior](double v) {
    return 0.5 * std::erfc(-v / (prior.psiSd * std::sqrt(2.0)));
  };
  bool pass = true;
  std::string ps;
  for (const std::string& rf : sh.spec.riskFactors) {
    const std::vector<double> col = draws.postWarmupColumn("psi." + rf);
    const double d = ksStatistic(col, cdf);
    const double p = kolmogorovPValue(d, col.size());
    pass = pass && p > kPriorKsPBound;
    if (!ps.empty()) ps += ", ";
    ps += rf + " p=" + fmt(p);
  }
  Criterion out;
  out.pass = pass;
  out.detail = "pooled shape draws vs prior (n=" +
               std::to_string(draws.postWarmupCount()) + "): " + ps;
  return out;
}

/* ---- parameter recovery on the synthetic study. */

Criterion checkParameterRecovery(Shared& sh) {
  sh.sim = simulateDataset(deskProfiles(sh.spec.L()), sh.spec,
                           sh.desk.state, kSimSeed);

  SamplerConfig cfg;
  cfg.seed = kRecoverySeed;
  cfg.init = InitStrategy::TruthJitter;
  sh.fullDraws = runSampler(sh.sim->data, sh.spec, cfg, Variant::Full,
                            &sh.sim->truth.state);
  const PosteriorDraws& draws = *sh.fullDraws;

  const ConvergenceReport conv = convergenceReport(draws);
  const double okShare =
      1.0 - conv.failFraction();

  const Eigen::VectorXd truth = draws.layout.flatten(sh.sim->truth.state);
  const auto& paths = draws.layout.paths();
  int covered = 0, fixedCount = 0;
  for (std::size_t c = 0; c < paths.size(); ++c) {
    if (paths[c].rfind("alpha.", 0) != 0) continue;
    ++fixedCount;
    const std::vector<double> col =
        draws.postWarmupColumn(static_cast<int>(c));
    const double lo = quantileOf(col, 0.05);
    const double hi = quantileOf(col, 0.95);
    const double t = truth[static_cast<Eigen::Index>(c)];
    if (t >= lo && t <= hi) ++covered;
  }
  const double coverage =
      fixedCount > 0 ? static_cast<double>(covered) / fixedCount : 0.0;

  Criterion out;
  out.pass = coverage >= kCoverageFloor && okShare >= kRhatPassFraction;
  out.detail = "90% intervals cover " + std::to_string(covered) + "/" +
               std::to_string(fixedCount) + " fixed effects (" +
               fmt(100.0 * coverage, 3) + "%), convergence ok for " +
               fmt(100.0 * okShare, 4) + "% of " +
               std::to_string(conv.entries.size()) + " parameters";
  return out;
}

/* ---- posterior predictive calibration on well-specified data. */

Criterion checkPredictiveCalibration(const Shared& sh) {
  if (!sh.sim || !sh.fullDraws)
    throw std::runtime_error("needs the parameter-recovery fit");
  const LongitudinalDataset& data = sh.sim->data;

  double pppLo = 1.0, pppHi = 0.0;
  int pppCount = 0;
  auto fold = [&](const DiscrepancyReport& rep) {
    if (rep.entries.empty())
      throw std::runtime_error("empty discrepancy report: " + rep.check);
    for (const auto& e : rep.entries) {
      pppLo = std::min(pppLo, e.ppp());
      pppHi = std::max(pppHi, e.ppp());
      ++pppCount;
    }
  };

  {
    SamplerConfig cfg;
    cfg.seed = kNoCohortSeed;
    const PosteriorDraws nc =
        runSampler(data, sh.spec, cfg, Variant::NoCohort);
    fold(withinSubjectCorrelationPPP(nc, data, sh.spec, true));
    fold(withinSubjectCorrelationPPP(nc, data, sh.spec, false));
  }
  {
    SamplerConfig cfg;
    cfg.seed = kNoParticipantSeed;
    const PosteriorDraws np =
        runSampler(data, sh.spec, cfg, Variant::NoParticipant);
    fold(crossCohortCorrelationPPP(np, data, sh.spec));
  }
  const bool pppOk = pppLo >= kPppLo && pppHi <= kPppHi;

  const std::vector<VarianceRatioEntry> vr =
      varianceRatio(*sh.fullDraws, data, sh.spec);
  if (vr.empty()) throw std::runtime_error("empty variance-ratio table");
  double vrLo = vr.front().ratio, vrHi = vr.front().ratio;
  for (const auto& e : vr) {
    vrLo = std::min(vrLo, e.ratio);
    vrHi = std::max(vrHi, e.ratio);
  }
  const bool vrOk = vrLo >= kVarRatioLo && vrHi <= kVarRatioHi;

  Criterion out;
  out.pass = pppOk && vrOk;
  out.detail = std::to_string(pppCount) + " tail probabilities in [" +
               fmt(pppLo) + ", " + fmt(pppHi) + "] (need [" + fmt(kPppLo, 2) +
               ", " + fmt(kPppHi, 2) + "]), " + std::to_string(vr.size()) +
               " variance ratios in [" + fmt(vrLo) + ", " + fmt(vrHi) + "]";
  return out;
}

/* ---- the two deletion experiments: predictive coverage of masked values
 * and preservation of fixed effects when a cohort drops a factor. */

Criterion checkImputationExperiments(Shared& sh) {
  if (!sh.sim || !sh.fullDraws)
    throw std::runtime_error("needs the parameter-recovery fit");

  DeletionRule maskRule;
  maskRule.factor = "dbp";
  maskRule.ageBelow = 40.0;
  maskRule.cohort = "FULL";
  sh.masked = applyDeletionExperiment(sh.sim->data, maskRule, sh.spec);

  SamplerConfig cfg;
  cfg.seed = kMaskedFitSeed;
  std::string coverDetail;
  bool coverOk = false;
  {
    const PosteriorDraws maskedDraws =
        runSampler(sh.masked->data, sh.spec, cfg, Variant::Full);
    sh.imputations = imputeMissing(maskedDraws, sh.masked->data, sh.spec,
                                   kImputationCopies, kImputeSeed);
    const CoverageResult cov = predictiveIntervalCoverage(
        *sh.imputations, sh.masked->data, sh.spec, sh.masked->heldOut, 0.95);
    coverOk = cov.total > 0 && cov.fraction() >= kImputeCoverLo &&
              cov.fraction() <= kImputeCoverHi;
    coverDetail = "95% predictive intervals cover " +
                  std::to_string(cov.covered) + "/" +
                  std::to_string(cov.total) + " masked values (" +
                  fmt(100.0 * cov.fraction(), 4) + "%)";
  }

  DeletionRule dropRule;
  dropRule.factor = "dbp";
  dropRule.cohort = "MID";
  const DeletionResult dropped =
      applyDeletionExperiment(sh.sim->data, dropRule, sh.spec);
  SamplerConfig cfg2;
  cfg2.seed = kDeletedFitSeed;
  const PosteriorDraws droppedDraws =
      runSampler(dropped.data, sh.spec, cfg2, Variant::Full);
  const std::vector<PreservationEntry> table =
      fixedEffectPreservationCheck(*sh.fullDraws, droppedDraws, "dbp");
  int present = 0, inBand = 0;
  for (const auto& e : table) {
    if (e.structurallyAbsent) continue;
    ++present;
    if (e.probability >= kPreserveLo && e.probability <= kPreserveHi)
      ++inBand;
  }
  const bool preserveOk =
      present > 0 &&
      static_cast<double>(inBand) >= kPreservePassShare * present;

  Criterion out;
  out.pass = coverOk && preserveOk;
  out.detail = coverDetail + "; factor-dropped refit keeps " +
               std::to_string(inBand) + "/" + std::to_string(present) +
               " fixed-effect tail probabilities in [" + fmt(kPreserveLo, 2) +
               ", " + fmt(kPreserveHi, 2) + "]";
  return out;
}

/* ---- pooling rules: exact hand example plus the downstream age-slope. */

Criterion checkPooling(const Shared& sh) {
  const PooledEstimate hand =
      rubinPool({{1.0, 0.5}, {2.0, 0.5}, {3.0, 0.5}});
  const bool handOk = std::abs(hand.point - 2.0) <= kPoolTol &&
                      std::abs(hand.withinVariance - 0.5) <= kPoolTol &&
                      std::abs(hand.betweenVariance - 1.0) <= kPoolTol &&
                      std::abs(hand.totalVariance - 11.0 / 6.0) <= kPoolTol;

  if (!sh.sim || !sh.imputations)
    throw std::runtime_error("needs the imputation experiment");
  const int factor = sh.spec.factorIndex("dbp");
  const auto complete = ageSlopeEstimate(sh.sim->data, factor);
  std::vector<std::pair<double, double>> ests;
  for (const auto& ds : sh.imputations->datasets)
    ests.push_back(ageSlopeEstimate(ds, factor));
  const PooledEstimate pooled = rubinPool(ests);

  const double completeSd = std::sqrt(complete.second);
  const bool widthOk = pooled.sd() > completeSd;
  const bool pointOk =
      std::abs(pooled.point - complete.first) < 0.5 * pooled.sd();

  Criterion out;
  out.pass = handOk && widthOk && pointOk;
  out.detail = std::string("hand example ") + (handOk ? "exact" : "WRONG") +
               "; pooled slope " + fmt(pooled.point) + " (sd " +
               fmt(pooled.sd()) + ") vs complete-data " + fmt(complete.first) +
               " (sd " + fmt(completeSd) + ")";
  return out;
}

/* ---- command-line determinism: the whole pipeline twice, byte for byte. */

void writeText(const fs::path& p, const std::string& body) {
  std::ofstream f(p);
  f << body;
  if (!f) throw std::runtime_error("cannot write " + p.string());
}

std::string readBytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<fs::path> relativeFiles(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

Criterion checkCliDeterminism(const AcceptanceOptions& opt) {
  if (opt.cliPath.empty())
    throw std::runtime_error("no command-line binary given");
  const fs::path base = fs::path(opt.outDir) / "cli";
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path outDir = base / "out";
  const fs::path cfgPath = base / "config.json";
  const fs::path estPath = base / "estimates.csv";

  auto profile = [](const char* name, double lo, double hi, double follow,
                    double spacing) {
    ordered_json p;
    p["name"] = name;
    p["participants"] = 12;
    p["enroll_age_lo"] = lo;
    p["enroll_age_hi"] = hi;
    p["follow_up_years"] = follow;
    p["exam_spacing_years"] = spacing;
    p["miss_rate"] = {0.12, 0.12, 0.12};
    return p;
  };
  ordered_json cfg;
  cfg["seed"] = kCliSeed;
  cfg["data"] = (outDir / "data.csv").string();
  cfg["output_dir"] = outDir.string();
  cfg["model"]["risk_factors"] = {"sbp", "dbp", "bmi"};
  cfg["sampler"] = {{"superchains", 2},
                    {"subchains", 2},
                    {"iterations", 6},
                    {"warmup", 3},
                    {"init", "prior-draw"}};
  cfg["simulate"]["profiles"] = {profile("YOUNG", 18, 30, 30, 3),
                                 profile("MID", 45, 62, 24, 3),
                                 profile("FULL", 20, 55, 40, 4)};
  cfg["experiment"] =
      {{"deletions",
        {{{"factor", "dbp"}, {"age_below", 40.0}, {"cohort", "FULL"}}}},
       {"imputations", 4},
       {"qq_draws", 8}};
  writeText(cfgPath, cfg.dump(2) + "\n");
  writeText(estPath, "estimate,variance\n1,0.5\n2,0.5\n3,0.5\n");

  const std::string c = " --config \"" + cfgPath.string() + "\"";
  const std::vector<std::string> commands = {
      "simulate" + c,
      "delete" + c,
      "fit" + c + " --variant full",
      "fit" + c + " --variant no-cohort",
      "fit" + c + " --variant no-participant",
      "ppc" + c + " --variant full",
      "ppc" + c + " --variant no-cohort",
      "ppc" + c + " --variant no-participant",
      "impute" + c,
      "pool --estimates \"" + estPath.string() + "\" --out \"" +
          (outDir / "pooled.json").string() + "\"",
  };

  auto runAll = [&](const fs::path& logDir) {
    fs::remove_all(outDir);
    fs::create_directories(outDir);
    fs::create_directories(logDir);
    std::vector<int> codes;
    for (std::size_t i = 0; i < commands.size(); ++i) {
      char log[32];
      std::snprintf(log, sizeof(log), "step%02zu.txt", i);
      const std::string cmd = "\"" + opt.cliPath + "\" " + commands[i] +
                              " > \"" + (logDir / log).string() + "\" 2>&1";
      codes.push_back(shell(cmd));
    }
    return codes;
  };

  const std::vector<int> codesA = runAll(base / "logA");
  const fs::path outA = base / "outA";
  fs::rename(outDir, outA);
  const std::vector<int> codesB = runAll(base / "logB");

  std::string problem;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (codesA[i] != codesB[i]) {
      problem = "exit codes differ for: " + commands[i];
      break;
    }
    if (codesA[i] != 0 && codesA[i] != 1) {
      problem = "exit code " + std::to_string(codesA[i]) +
                " for: " + commands[i];
      break;
    }
  }

  std::size_t fileCount = 0;
  if (problem.empty()) {
    const auto pairs = {std::pair{outA, outDir},
                        std::pair{base / "logA", base / "logB"}};
    for (const auto& [first, second] : pairs) {
      const auto fa = relativeFiles(first);
      const auto fb = relativeFiles(second);
      if (fa != fb) {
        problem = "file sets differ under " + first.string();
        break;
      }
      for (const auto& rel : fa) {
        ++fileCount;
        if (readBytes(first / rel) != readBytes(second / rel)) {
          problem = "byte difference in " + rel.string();
          break;
        }
      }
      if (!problem.empty()) break;
    }
  }

  Criterion out;
  out.pass = problem.empty();
  out.detail = out.pass
                   ? std::to_string(commands.size()) +
                         " commands repeated byte-identically (" +
                         std::to_string(fileCount) +
                         " files and logs compared)"
                   : problem;
  return out;
}

}  // namespace

bool runAcceptance(const AcceptanceOptions& options) {
  fs::create_directories(options.outDir);
  std::ofstream report(fs::path(options.outDir) / "acceptance_report.txt");

  Shared sh;
  sh.spec.riskFactors = {"sbp", "dbp", "bmi"};
  sh.desk = defaultDeskTruth(sh.spec, 3);

  bool all = true;
  auto run = [&](int id, const char* name, double budgetSeconds,
                 const std::function<Criterion()>& fn) {
    const auto t0 = Clock::now();
    Criterion c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("error: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(Clock::now() - t0).count();
    if (budgetSeconds > 0 && secs > budgetSeconds) {
      c.pass = false;
      c.detail += " [over the " + fmt(budgetSeconds, 4) + "s budget]";
    }
    char line[1024];
    std::snprintf(line, sizeof(line), "C%d %s %s: %s [%.1fs]", id,
                  c.pass ? "PASS" : "FAIL", name, c.detail.c_str(), secs);
    std::printf("%s\n", line);
    std::fflush(stdout);
    if (report) report << line << "\n";
    all = all && c.pass;
  };

  run(1, "analytic-moments", kMomentBudgetSeconds,
      [&] { return checkAnalyticMoments(sh); });
  run(2, "covariance-composition", 0, [&] { return checkBlockKronecker(); });
  run(3, "skew-normal", 0, [&] { return checkSkewNormal(); });
  run(4, "nested-rhat", 0, [&] { return checkNestedRhat(); });
  run(5, "prior-recovery", kPriorBudgetSeconds,
      [&] { return checkPriorRecovery(sh); });
  run(6, "parameter-recovery", kRecoveryBudgetSeconds,
      [&] { return checkParameterRecovery(sh); });
  run(7, "predictive-calibration", 0,
      [&] { return checkPredictiveCalibration(sh); });
  run(8, "imputation-experiments", 0,
      [&] { return checkImputationExperiments(sh); });
  run(9, "pooling", 0, [&] { return checkPooling(sh); });
  sh.fullDraws.reset();
  run(10, "cli-determinism", 0, [&] { return checkCliDeterminism(options); });

  std::printf("acceptance: %s\n", all ? "ALL PASS" : "FAILURES");
  if (report) report << "acceptance: " << (all ? "ALL PASS" : "FAILURES")
                     << "\n";
  return all;
}

}  // namespace lrtraj
