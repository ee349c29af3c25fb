#include "lrtraj/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lrtraj {

const char* initStrategyName(InitStrategy s) {
  switch (s) {
    case InitStrategy::SubsamplePosterior: return "subsample-posterior";
    case InitStrategy::PriorDraw: return "prior-draw";
    case InitStrategy::TruthJitter: return "truth-jitter";
  }
  throw std::invalid_argument("unknown init strategy");
}

InitStrategy initStrategyFromName(const std::string& name) {
  if (name == "subsample-posterior") return InitStrategy::SubsamplePosterior;
  if (name == "prior-draw") return InitStrategy::PriorDraw;
  if (name == "truth-jitter") return InitStrategy::TruthJitter;
  throw std::invalid_argument("unknown init strategy '" + name + "'");
}

void SamplerConfig::validate() const {
  if (superchains < 1 || subchains < 1 || iterations < 1)
    throw std::invalid_argument("sampler counts must be >= 1");
  if (warmup < 0 || warmup >= iterations)
    throw std::invalid_argument("warmup must lie in [0, iterations)");
  if (!(subsampleFraction > 0.0 && subsampleFraction <= 1.0))
    throw std::invalid_argument("subsampleFraction must lie in (0, 1]");
  if (!(initialStep > 0.0))
    throw std::invalid_argument("initialStep must be positive");
}

std::vector<int> PosteriorDraws::postWarmupRows() const {
  std::vector<int> rows;
  rows.reserve(static_cast<size_t>(postWarmupCount()));
  for (int r = 0; r < rowCount(); ++r)
    if (!isWarmupRow(r)) rows.push_back(r);
  return rows;
}

std::vector<double> PosteriorDraws::postWarmupColumn(int col) const {
  if (col < 0 || col >= layout.size())
    throw std::invalid_argument("parameter column out of range");
  std::vector<double> v;
  v.reserve(static_cast<size_t>(postWarmupCount()));
  for (int r = 0; r < rowCount(); ++r)
    if (!isWarmupRow(r)) v.push_back(values(r, col));
  return v;
}

std::vector<double> PosteriorDraws::postWarmupColumn(
    const std::string& path) const {
  int col = layout.index(path);
  if (col < 0)
    throw std::invalid_argument("unknown parameter path '" + path + "'");
  return postWarmupColumn(col);
}

namespace {

constexpr double kTargetAccept = 0.44;

std::vector<std::string> participantIds(const LongitudinalDataset& data) {
  std::vector<std::string> ids;
  ids.reserve(data.participants.size());
  for (const Participant& p : data.participants) ids.push_back(p.id);
  return ids;
}

double shapeDelta(double psi) { return psi / std::sqrt(1.0 + psi * psi); }

/* Gaussian conditional draw from precision and linear term. One jitter
 * attempt on factorization failure; a second failure aborts the update. */
bool gaussianDraw(Eigen::MatrixXd prec, const Eigen::VectorXd& linear,
                  Rng& rng, Eigen::VectorXd* draw) {
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) {
    prec.diagonal().array() += 1e-8 * prec.diagonal().mean();
    llt.compute(prec);
    if (llt.info() != Eigen::Success) return false;
  }
  Eigen::VectorXd mean = llt.solve(linear);
  Eigen::VectorXd z(prec.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Eigen::MatrixXd Lmat = llt.matrixL();
  *draw = mean + Lmat.transpose().triangularView<Eigen::Upper>().solve(z);
  return true;
}

double halfCauchyPriorDraw(double scale, Rng& rng) {
  return scale * std::tan(0.5 * M_PI * rng.uniform());
}

}  // namespace

GibbsKernel::GibbsKernel(const LongitudinalDataset& data, const ModelSpec& spec,
                         Variant variant, PriorSettings prior)
    : spec_(spec),
      variant_(variant),
      prior_(prior),
      layout_(spec, data.cohorts, participantIds(data), variant),
      L_(spec.L()),
      P_(spec.P()),
      K_(data.K()),
      n_(static_cast<int>(data.participantCount())) {
  spec_.validate();
  data.validate(spec_);
  cellsOfFactor_.resize(static_cast<size_t>(L_));
  cellsOfFactorWindow_.resize(static_cast<size_t>(L_ * P_));
  cellsOfParticipant_.resize(static_cast<size_t>(n_));
  std::vector<Eigen::VectorXd> xOf(static_cast<size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    const Participant& p = data.participants[static_cast<size_t>(i)];
    xOf[static_cast<size_t>(i)] =
        covariateVector(p.raceBlack, p.eduHs, p.eduHsPlus, p.birthYear, spec_);
  }
  for (size_t r = 0; r < data.records.size(); ++r) {
    const Record& rec = data.records[r];
    const int window = spec_.windowIndex(rec.age);
    Eigen::VectorXd row =
        alphaDesignRow(xOf[static_cast<size_t>(rec.participant)], rec.age,
                       spec_);
    std::vector<std::pair<int, double>> nz;
    for (Eigen::Index j = 0; j < row.size(); ++j)
      if (row[j] != 0.0) nz.emplace_back(static_cast<int>(j), row[j]);
    for (int l = 0; l < L_; ++l) {
      if (!rec.isObserved(l)) continue;
      Cell c;
      c.record = static_cast<int>(r);
      c.participant = rec.participant;
      c.cohort = data.participants[static_cast<size_t>(rec.participant)].cohort;
      c.factor = l;
      c.window = window;
      c.age = rec.age;
      c.y = rec.y[l];
      c.alphaNz = nz;
      int ci = static_cast<int>(cells_.size());
      cells_.push_back(std::move(c));
      cellsOfFactor_[static_cast<size_t>(l)].push_back(ci);
      cellsOfFactorWindow_[static_cast<size_t>(l * P_ + window)].push_back(ci);
      cellsOfParticipant_[static_cast<size_t>(rec.participant)].push_back(ci);
    }
  }
}

GibbsKernel::Workspace GibbsKernel::makeWorkspace(double initialStep) const {
  Workspace w;
  w.latent.assign(cells_.size(), 0.0);
  w.omegaStep = Eigen::MatrixXd::Constant(L_, P_, initialStep);
  w.psiStep = Eigen::VectorXd::Constant(L_, initialStep);
  w.omegaAdaptCount = Eigen::MatrixXd::Zero(L_, P_);
  w.psiAdaptCount = Eigen::VectorXd::Zero(L_);
  return w;
}

double GibbsKernel::fixedCohortMean(const ParameterState& s,
                                    const Cell& c) const {
  double mu = 0.0;
  const Eigen::VectorXd& a = s.alpha[static_cast<size_t>(c.factor)];
  for (const auto& [j, v] : c.alphaNz) mu += v * a[j];
  if (hasCohortBlock()) {
    const Eigen::MatrixXd& ce = s.cohortEffect[static_cast<size_t>(c.factor)];
    mu += ce(c.cohort, 0) + ce(c.cohort, 1) * c.age +
          ce(c.cohort, 2 + c.window) * c.age;
  }
  return mu;
}

double GibbsKernel::cellMean(const ParameterState& s, const Cell& c) const {
  double mu = fixedCohortMean(s, c);
  if (hasSubjectBlock())
    mu += s.subjectEffect(2 * c.factor, c.participant) +
          s.subjectEffect(2 * c.factor + 1, c.participant) * c.age;
  return mu;
}

std::vector<double> GibbsKernel::fittedMeans(const ParameterState& s) const {
  std::vector<double> mu(cells_.size());
  for (size_t ci = 0; ci < cells_.size(); ++ci)
    mu[ci] = cellMean(s, cells_[ci]);
  return mu;
}

std::vector<GibbsKernel::CellInfo> GibbsKernel::cellInfo() const {
  std::vector<CellInfo> out(cells_.size());
  for (size_t ci = 0; ci < cells_.size(); ++ci) {
    const Cell& c = cells_[ci];
    out[ci] = CellInfo{c.record, c.participant, c.cohort,
                       c.factor, c.window,     c.age,    c.y};
  }
  return out;
}

void GibbsKernel::drawLatent(const ParameterState& s, Workspace& w,
                             Rng& rng) const {
  for (size_t ci = 0; ci < cells_.size(); ++ci) {
    const Cell& c = cells_[ci];
    const double delta = shapeDelta(s.psi[c.factor]);
    const double om = s.omega(c.factor, c.window);
    const double e = c.y - cellMean(s, c);
    const double sd = std::sqrt(std::max(1.0 - delta * delta, 1e-12));
    w.latent[ci] = rng.truncatedNormal(delta * e / om, sd, 0.0);
  }
}

void GibbsKernel::updateFixedAndCohort(ParameterState& s, const Workspace& w,
                                       Rng& rng) const {
  AlphaLayout lay(spec_);
  const int A = lay.size();
  const int coeffs = P_ + 2;
  const int C = hasCohortBlock() ? K_ * coeffs : 0;
  const int dim = A + C;
  const double alphaPrec = 1.0 / (prior_.alphaSd * prior_.alphaSd);
  std::vector<std::pair<int, double>> g;
  for (int l = 0; l < L_; ++l) {
    Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd linear = Eigen::VectorXd::Zero(dim);
    prec.topLeftCorner(A, A).diagonal().setConstant(alphaPrec);
    if (C > 0) {
      const Eigen::MatrixXd& lam = s.lambda[static_cast<size_t>(l)];
      Eigen::MatrixXd lamInv =
          lam.llt().solve(Eigen::MatrixXd::Identity(K_, K_));
      for (int k = 0; k < K_; ++k)
        for (int kp = 0; kp < K_; ++kp)
          for (int p = 0; p < coeffs; ++p)
            prec(A + k * coeffs + p, A + kp * coeffs + p) += lamInv(k, kp);
    }
    const double delta = shapeDelta(s.psi[l]);
    const double oneMinus = std::max(1.0 - delta * delta, 1e-12);
    for (int ci : cellsOfFactor_[static_cast<size_t>(l)]) {
      const Cell& c = cells_[static_cast<size_t>(ci)];
      const double om = s.omega(l, c.window);
      const double wgt = 1.0 / (om * om * oneMinus);
      double ytil = c.y - om * delta * w.latent[static_cast<size_t>(ci)];
      if (hasSubjectBlock())
        ytil -= s.subjectEffect(2 * l, c.participant) +
                s.subjectEffect(2 * l + 1, c.participant) * c.age;
      g.assign(c.alphaNz.begin(), c.alphaNz.end());
      if (C > 0) {
        const int base = A + c.cohort * coeffs;
        g.emplace_back(base, 1.0);
        g.emplace_back(base + 1, c.age);
        g.emplace_back(base + 2 + c.window, c.age);
      }
      for (const auto& [i1, v1] : g) {
        linear[i1] += wgt * ytil * v1;
        const double wv = wgt * v1;
        for (const auto& [i2, v2] : g) prec(i1, i2) += wv * v2;
      }
    }
    Eigen::VectorXd draw;
    if (!gaussianDraw(std::move(prec), linear, rng, &draw)) continue;
    s.alpha[static_cast<size_t>(l)] = draw.head(A);
    if (C > 0) {
      Eigen::MatrixXd& ce = s.cohortEffect[static_cast<size_t>(l)];
      for (int k = 0; k < K_; ++k)
        for (int p = 0; p < coeffs; ++p) ce(k, p) = draw[A + k * coeffs + p];
    }
  }
}

void GibbsKernel::updateSubjects(ParameterState& s, const Workspace& w,
                                 Rng& rng) const {
  if (!hasSubjectBlock() || n_ == 0) return;
  Eigen::MatrixXd sigInv =
      s.sigma.llt().solve(Eigen::MatrixXd::Identity(2 * L_, 2 * L_));
  sigInv = 0.5 * (sigInv + sigInv.transpose());
  for (int i = 0; i < n_; ++i) {
    Eigen::MatrixXd prec = sigInv;
    Eigen::VectorXd linear = Eigen::VectorXd::Zero(2 * L_);
    for (int ci : cellsOfParticipant_[static_cast<size_t>(i)]) {
      const Cell& c = cells_[static_cast<size_t>(ci)];
      const int l = c.factor;
      const double delta = shapeDelta(s.psi[l]);
      const double om = s.omega(l, c.window);
      const double wgt =
          1.0 / (om * om * std::max(1.0 - delta * delta, 1e-12));
      const double ytil = c.y - om * delta * w.latent[static_cast<size_t>(ci)] -
                          fixedCohortMean(s, c);
      const int j0 = 2 * l;
      linear[j0] += wgt * ytil;
      linear[j0 + 1] += wgt * ytil * c.age;
      prec(j0, j0) += wgt;
      prec(j0, j0 + 1) += wgt * c.age;
      prec(j0 + 1, j0) += wgt * c.age;
      prec(j0 + 1, j0 + 1) += wgt * c.age * c.age;
    }
    Eigen::VectorXd draw;
    if (!gaussianDraw(std::move(prec), linear, rng, &draw)) continue;
    s.subjectEffect.col(i) = draw;
  }
}

void GibbsKernel::updateSigma(ParameterState& s, Rng& rng) const {
  if (!hasSubjectBlock()) return;
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Identity(2 * L_, 2 * L_);
  for (int i = 0; i < n_; ++i)
    scatter += s.subjectEffect.col(i) * s.subjectEffect.col(i).transpose();
  s.sigma = inverseWishartDraw(prior_.sigmaDf(L_) + n_, scatter, rng);
}

void GibbsKernel::updateLambda(ParameterState& s, Rng& rng) const {
  if (!hasCohortBlock()) return;
  for (int l = 0; l < L_; ++l) {
    const Eigen::MatrixXd& ce = s.cohortEffect[static_cast<size_t>(l)];
    Eigen::MatrixXd scatter =
        Eigen::MatrixXd::Identity(K_, K_) + ce * ce.transpose();
    s.lambda[static_cast<size_t>(l)] =
        inverseWishartDraw(prior_.lambdaDf(K_) + (P_ + 2), scatter, rng);
  }
}

void GibbsKernel::updateOmega(ParameterState& s, Workspace& w, Rng& rng) const {
  std::vector<double> mu = fittedMeans(s);
  for (int l = 0; l < L_; ++l) {
    const double psi = s.psi[l];
    for (int win = 0; win < P_; ++win) {
      const auto& cl = cellsOfFactorWindow_[static_cast<size_t>(l * P_ + win)];
      if (cl.empty()) {
        /* no data touches this scale: its conditional is the prior */
        s.omega(l, win) = halfCauchyPriorDraw(prior_.omegaScale, rng);
        continue;
      }
      auto target = [&](double om) {
        double t = halfCauchyLogDensity(om, prior_.omegaScale);
        const SkewNormal sn{om, psi};
        for (int ci : cl)
          t += sn.logDensity(cells_[static_cast<size_t>(ci)].y -
                             mu[static_cast<size_t>(ci)]);
        return t;
      };
      const double cur = s.omega(l, win);
      const double prop = cur * std::exp(w.omegaStep(l, win) * rng.normal());
      double acc = 0.0;
      if (prop > 0.0 && std::isfinite(prop)) {
        const double logRatio = target(prop) - target(cur) + std::log(prop) -
                                std::log(cur);
        acc = std::min(1.0, std::exp(logRatio));
      }
      if (rng.uniform() < acc) s.omega(l, win) = prop;
      if (w.adapting) {
        double& cnt = w.omegaAdaptCount(l, win);
        cnt += 1.0;
        double step =
            w.omegaStep(l, win) *
            std::exp((acc - kTargetAccept) / std::sqrt(cnt));
        w.omegaStep(l, win) = std::clamp(step, 1e-4, 20.0);
      }
    }
  }
}

void GibbsKernel::updatePsi(ParameterState& s, Workspace& w, Rng& rng) const {
  std::vector<double> mu = fittedMeans(s);
  for (int l = 0; l < L_; ++l) {
    const auto& cl = cellsOfFactor_[static_cast<size_t>(l)];
    if (cl.empty()) {
      s.psi[l] = rng.normal(0.0, prior_.psiSd);
      continue;
    }
    auto target = [&](double psi) {
      double t = normalLogDensity(psi, 0.0, prior_.psiSd);
      for (int ci : cl) {
        const Cell& c = cells_[static_cast<size_t>(ci)];
        t += SkewNormal{s.omega(l, c.window), psi}.logDensity(
            c.y - mu[static_cast<size_t>(ci)]);
      }
      return t;
    };
    const double cur = s.psi[l];
    const double prop = cur + w.psiStep[l] * rng.normal();
    const double acc = std::min(1.0, std::exp(target(prop) - target(cur)));
    if (rng.uniform() < acc) s.psi[l] = prop;
    if (w.adapting) {
      double& cnt = w.psiAdaptCount[l];
      cnt += 1.0;
      double step =
          w.psiStep[l] * std::exp((acc - kTargetAccept) / std::sqrt(cnt));
      w.psiStep[l] = std::clamp(step, 1e-4, 50.0);
    }
  }
}

void GibbsKernel::sweep(ParameterState& s, Workspace& w, Rng& rng) const {
  drawLatent(s, w, rng);
  updateFixedAndCohort(s, w, rng);
  updateSubjects(s, w, rng);
  updateSigma(s, rng);
  updateLambda(s, rng);
  updateOmega(s, w, rng);
  updatePsi(s, w, rng);
}

ParameterState GibbsKernel::priorDrawState(Rng& rng) const {
  ParameterState s = layout_.emptyState();
  for (int l = 0; l < L_; ++l)
    for (Eigen::Index j = 0; j < s.alpha[static_cast<size_t>(l)].size(); ++j)
      s.alpha[static_cast<size_t>(l)][j] = rng.normal(0.0, prior_.alphaSd);
  for (int l = 0; l < L_; ++l) {
    s.psi[l] = rng.normal(0.0, prior_.psiSd);
    for (int win = 0; win < P_; ++win)
      s.omega(l, win) = halfCauchyPriorDraw(prior_.omegaScale, rng);
  }
  if (hasSubjectBlock()) {
    s.sigma = inverseWishartDraw(
        prior_.sigmaDf(L_), Eigen::MatrixXd::Identity(2 * L_, 2 * L_), rng);
    for (int i = 0; i < n_; ++i)
      s.subjectEffect.col(i) = mvnDraw(s.sigma, rng);
  }
  if (hasCohortBlock()) {
    for (int l = 0; l < L_; ++l) {
      s.lambda[static_cast<size_t>(l)] = inverseWishartDraw(
          prior_.lambdaDf(K_), Eigen::MatrixXd::Identity(K_, K_), rng);
      s.cohortEffect[static_cast<size_t>(l)] = sampleCohortEffects(
          s.lambda[static_cast<size_t>(l)], P_ + 2, rng);
    }
  }
  return s;
}

namespace {

/* Participant-level within-cohort resample (with replacement) used by the
 * subsample-posterior initialization. */
LongitudinalDataset resamplePilot(const LongitudinalDataset& data,
                                  double fraction, Rng& rng) {
  LongitudinalDataset out;
  out.cohorts = data.cohorts;
  out.L = data.L;
  std::vector<std::vector<int>> byCohort(static_cast<size_t>(data.K()));
  for (size_t i = 0; i < data.participants.size(); ++i)
    byCohort[static_cast<size_t>(data.participants[i].cohort)].push_back(
        static_cast<int>(i));
  std::vector<std::vector<const Record*>> recsOf(data.participantCount());
  for (const Record& r : data.records)
    recsOf[static_cast<size_t>(r.participant)].push_back(&r);
  for (size_t k = 0; k < byCohort.size(); ++k) {
    const auto& pool = byCohort[k];
    if (pool.empty()) continue;
    const int want = std::max(
        1, static_cast<int>(std::ceil(fraction * static_cast<double>(
                                          pool.size()))));
    for (int j = 0; j < want; ++j) {
      const int pick = pool[static_cast<size_t>(
          rng.integer(static_cast<std::uint64_t>(pool.size())))];
      Participant p = data.participants[static_cast<size_t>(pick)];
      p.id += "#" + std::to_string(j);
      const int idx = static_cast<int>(out.participants.size());
      out.participants.push_back(std::move(p));
      for (const Record* r : recsOf[static_cast<size_t>(pick)]) {
        Record rr = *r;
        rr.participant = idx;
        out.records.push_back(std::move(rr));
      }
    }
  }
  out.sortRecords();
  return out;
}

ParameterState subsampleInit(const GibbsKernel& kernel,
                             const LongitudinalDataset& data,
                             const ModelSpec& spec, const SamplerConfig& config,
                             Variant variant, int superchain) {
  Rng pickRng = Rng::stream(config.seed, 0x5EED, static_cast<std::uint64_t>(superchain), 0);
  LongitudinalDataset pilot =
      resamplePilot(data, config.subsampleFraction, pickRng);
  GibbsKernel pilotKernel(pilot, spec, variant, kernel.priorSettings());
  Rng chainRng = Rng::stream(config.seed, 0x5EED, static_cast<std::uint64_t>(superchain), 1);
  ParameterState ps = pilotKernel.priorDrawState(chainRng);
  GibbsKernel::Workspace w = pilotKernel.makeWorkspace(config.initialStep);
  for (int n = 0; n < config.iterations; ++n) {
    if (n == config.warmup) w.adapting = false;
    pilotKernel.sweep(ps, w, chainRng);
  }
  /* transfer the population-level blocks; subject effects start at zero and
   * are refreshed in the first sweep */
  ParameterState s = kernel.layout().emptyState();
  s.alpha = ps.alpha;
  s.omega = ps.omega;
  s.psi = ps.psi;
  if (variant != Variant::NoParticipant) s.sigma = ps.sigma;
  if (variant != Variant::NoCohort && data.K() > 0) {
    s.lambda = ps.lambda;
    s.cohortEffect = ps.cohortEffect;
  }
  return s;
}

ParameterState truthJitterInit(const GibbsKernel& kernel,
                               const SamplerConfig& config, Variant variant,
                               const ParameterState* truth, int superchain,
                               int participantCount) {
  if (truth == nullptr)
    throw std::invalid_argument(
        "truth-jitter initialization needs a ground-truth state");
  ParameterState s = kernel.layout().emptyState();
  const int L = static_cast<int>(s.alpha.size());
  if (static_cast<int>(truth->alpha.size()) != L)
    throw std::invalid_argument("ground truth has the wrong factor count");
  Rng rng = Rng::stream(config.seed, 0x7E57,
                        static_cast<std::uint64_t>(superchain));
  for (int l = 0; l < L; ++l) {
    if (truth->alpha[static_cast<size_t>(l)].size() !=
        s.alpha[static_cast<size_t>(l)].size())
      throw std::invalid_argument("ground truth alpha has the wrong length");
    s.alpha[static_cast<size_t>(l)] = truth->alpha[static_cast<size_t>(l)];
    for (Eigen::Index j = 0; j < s.alpha[static_cast<size_t>(l)].size(); ++j)
      s.alpha[static_cast<size_t>(l)][j] += 0.05 * rng.normal();
  }
  s.psi = truth->psi;
  for (Eigen::Index l = 0; l < s.psi.size(); ++l)
    s.psi[l] += 0.1 * rng.normal();
  s.omega = truth->omega;
  for (Eigen::Index l = 0; l < s.omega.rows(); ++l)
    for (Eigen::Index p = 0; p < s.omega.cols(); ++p)
      s.omega(l, p) *= std::exp(0.05 * rng.normal());
  if (variant != Variant::NoParticipant) {
    if (truth->sigma.size() == 0 ||
        truth->subjectEffect.cols() != participantCount)
      throw std::invalid_argument(
          "ground truth lacks subject effects for this dataset");
    s.sigma = truth->sigma;
    s.subjectEffect = truth->subjectEffect;
  }
  if (variant != Variant::NoCohort && !s.cohortEffect.empty()) {
    if (truth->lambda.empty() || truth->cohortEffect.empty())
      throw std::invalid_argument("ground truth lacks cohort effects");
    s.lambda = truth->lambda;
    s.cohortEffect = truth->cohortEffect;
    for (Eigen::MatrixXd& ce : s.cohortEffect)
      for (Eigen::Index i = 0; i < ce.size(); ++i)
        ce(i) += 0.02 * rng.normal();
  }
  return s;
}

}  // namespace

PosteriorDraws runSampler(const LongitudinalDataset& data,
                          const ModelSpec& spec, const SamplerConfig& config,
                          Variant variant, const ParameterState* truth) {
  config.validate();
  GibbsKernel kernel(data, spec, variant);
  PosteriorDraws out;
  out.layout = kernel.layout();
  out.superchains = config.superchains;
  out.subchains = config.subchains;
  out.iterations = config.iterations;
  out.warmup = config.warmup;
  out.seed = config.seed;
  out.values.resize(out.rowCount(), out.layout.size());

  for (int k = 0; k < config.superchains; ++k) {
    ParameterState init;
    switch (config.init) {
      case InitStrategy::PriorDraw: {
        Rng rng = Rng::stream(config.seed, 0x7E57,
                              static_cast<std::uint64_t>(k));
        init = kernel.priorDrawState(rng);
        break;
      }
      case InitStrategy::TruthJitter:
        init = truthJitterInit(kernel, config, variant, truth, k,
                               static_cast<int>(data.participantCount()));
        break;
      case InitStrategy::SubsamplePosterior:
        init = subsampleInit(kernel, data, spec, config, variant, k);
        break;
    }
    const double lp = logPrior(init, kernel.priorSettings());
    if (!std::isfinite(lp))
      throw std::runtime_error(
          "superchain " + std::to_string(k) +
          ": initial state has non-finite log-prior");
    const double ll = logLikelihoodObserved(init, data, spec);
    if (!std::isfinite(ll))
      throw std::runtime_error(
          "superchain " + std::to_string(k) +
          ": initial state has non-finite log-likelihood");

    for (int m = 0; m < config.subchains; ++m) {
      ParameterState s = init;
      GibbsKernel::Workspace w = kernel.makeWorkspace(config.initialStep);
      Rng rng = Rng::stream(config.seed, 1000 + static_cast<std::uint64_t>(k),
                            static_cast<std::uint64_t>(m));
      for (int n = 0; n < config.iterations; ++n) {
        if (n == config.warmup) w.adapting = false;
        kernel.sweep(s, w, rng);
        out.values.row(out.row(k, m, n)) =
            kernel.layout().flatten(s).transpose();
      }
    }
  }
  return out;
}

}  // namespace lrtraj
