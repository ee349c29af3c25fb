#include "lrtraj/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrtraj {

namespace {

constexpr std::uint64_t kReplicateStream = 3000;

/* Error mean and sd per (factor, window) for one state. */
struct ErrorMoments {
  Eigen::MatrixXd mean, sd;  // L x P
};

ErrorMoments errorMoments(const ParameterState& s) {
  const int L = static_cast<int>(s.psi.size());
  const int P = static_cast<int>(s.omega.cols());
  ErrorMoments m;
  m.mean.resize(L, P);
  m.sd.resize(L, P);
  for (int l = 0; l < L; ++l)
    for (int p = 0; p < P; ++p) {
      const SkewNormal sn{s.omega(l, p), s.psi[l]};
      m.mean(l, p) = sn.mean();
      m.sd(l, p) = sn.sd();
    }
  return m;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double cxy = 0, cxx = 0, cyy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    cxy += dx * dy;
    cxx += dx * dx;
    cyy += dy * dy;
  }
  if (cxx <= 0.0 || cyy <= 0.0)
    return std::numeric_limits<double>::quiet_NaN();
  return cxy / std::sqrt(cxx * cyy);
}

void requireVariant(const PosteriorDraws& draws, Variant v,
                    const char* what) {
  if (draws.layout.variant() != v)
    throw std::invalid_argument(std::string(what) + " needs a " +
                                variantName(v) + " fit");
}

}  // namespace

Replicates::Replicates(const PosteriorDraws& draws,
                       const LongitudinalDataset& data, const ModelSpec& spec)
    : draws_(draws),
      data_(data),
      kernel_(data, spec, draws.layout.variant()),
      cells_(kernel_.cellInfo()),
      rows_(draws.postWarmupRows()) {
  if (draws.layout.paths() != kernel_.layout().paths())
    throw std::invalid_argument(
        "posterior draws do not match this dataset and variant");
}

ParameterState Replicates::state(int j) const {
  if (j < 0 || j >= count()) throw std::invalid_argument("draw out of range");
  return draws_.state(rows_[static_cast<size_t>(j)]);
}

LongitudinalDataset Replicates::datasetForDraw(int j) const {
  ParameterState s = state(j);
  const std::vector<double> mu = kernel_.fittedMeans(s);
  Rng rng = Rng::stream(draws_.seed, kReplicateStream,
                        static_cast<std::uint64_t>(j));
  LongitudinalDataset out = data_;
  for (size_t ci = 0; ci < cells_.size(); ++ci) {
    const GibbsKernel::CellInfo& c = cells_[ci];
    const SkewNormal sn{s.omega(c.factor, c.window), s.psi[c.factor]};
    out.records[static_cast<size_t>(c.record)].y[c.factor] =
        mu[ci] + sn.draw(rng);
  }
  return out;
}

void Replicates::residuals(int j, std::vector<double>* observed,
                           std::vector<double>* replicated) const {
  ParameterState s = state(j);
  const std::vector<double> mu = kernel_.fittedMeans(s);
  const ErrorMoments em = errorMoments(s);
  Rng rng = Rng::stream(draws_.seed, kReplicateStream,
                        static_cast<std::uint64_t>(j));
  observed->resize(cells_.size());
  replicated->resize(cells_.size());
  for (size_t ci = 0; ci < cells_.size(); ++ci) {
    const GibbsKernel::CellInfo& c = cells_[ci];
    const SkewNormal sn{s.omega(c.factor, c.window), s.psi[c.factor]};
    const double center = mu[ci] + em.mean(c.factor, c.window);
    const double sd = em.sd(c.factor, c.window);
    (*observed)[ci] = (c.y - center) / sd;
    (*replicated)[ci] = (mu[ci] + sn.draw(rng) - center) / sd;
  }
}

DiscrepancyReport withinSubjectCorrelationPPP(const PosteriorDraws& draws,
                                              const LongitudinalDataset& data,
                                              const ModelSpec& spec,
                                              bool sameAge) {
  requireVariant(draws, Variant::NoCohort, "within-subject correlation check");
  Replicates rep(draws, data, spec);
  const auto& cells = rep.cells();
  const int L = spec.L();

  /* Precompute the cell-index pairs entering each factor-pair correlation. */
  std::vector<std::pair<int, int>> factorPairs;
  for (int l1 = 0; l1 < L; ++l1)
    for (int l2 = l1; l2 < L; ++l2) {
      if (sameAge && l1 == l2) continue;
      factorPairs.emplace_back(l1, l2);
    }
  std::vector<std::vector<std::pair<int, int>>> pairCells(factorPairs.size());

  /* cells grouped by record and by participant */
  const int nRec = static_cast<int>(data.records.size());
  std::vector<std::vector<int>> byRecord(static_cast<size_t>(nRec));
  std::vector<std::vector<int>> byParticipant(data.participantCount());
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    byRecord[static_cast<size_t>(cells[ci].record)].push_back(
        static_cast<int>(ci));
    byParticipant[static_cast<size_t>(cells[ci].participant)].push_back(
        static_cast<int>(ci));
  }
  auto pairIndex = [&](int l1, int l2) {
    for (size_t q = 0; q < factorPairs.size(); ++q)
      if (factorPairs[q].first == l1 && factorPairs[q].second == l2)
        return static_cast<int>(q);
    return -1;
  };
  if (sameAge) {
    for (const auto& group : byRecord)
      for (int a : group)
        for (int b : group) {
          if (cells[static_cast<size_t>(a)].factor >=
              cells[static_cast<size_t>(b)].factor)
            continue;
          const int q = pairIndex(cells[static_cast<size_t>(a)].factor,
                                  cells[static_cast<size_t>(b)].factor);
          pairCells[static_cast<size_t>(q)].emplace_back(a, b);
        }
  } else {
    for (const auto& group : byParticipant)
      for (int a : group)
        for (int b : group) {
          const auto& ca = cells[static_cast<size_t>(a)];
          const auto& cb = cells[static_cast<size_t>(b)];
          if (ca.record == cb.record) continue;  // cross-exam pairs only
          if (ca.factor > cb.factor) continue;
          if (ca.factor == cb.factor && a >= b) continue;
          const int q = pairIndex(ca.factor, cb.factor);
          pairCells[static_cast<size_t>(q)].emplace_back(a, b);
        }
  }

  DiscrepancyReport report;
  report.check = sameAge ? "within-subject-correlation-same-age"
                         : "within-subject-correlation-different-ages";
  std::vector<DiscrepancyEntry> entries(factorPairs.size());
  for (size_t q = 0; q < factorPairs.size(); ++q)
    entries[q].key = spec.riskFactors[static_cast<size_t>(factorPairs[q].first)] +
                     ":" +
                     spec.riskFactors[static_cast<size_t>(factorPairs[q].second)];

  std::vector<double> obs, repl, x, y;
  for (int j = 0; j < rep.count(); ++j) {
    rep.residuals(j, &obs, &repl);
    for (size_t q = 0; q < factorPairs.size(); ++q) {
      const auto& pc = pairCells[q];
      if (pc.size() < 2) continue;
      x.clear();
      y.clear();
      for (const auto& [a, b] : pc) {
        x.push_back(obs[static_cast<size_t>(a)]);
        y.push_back(obs[static_cast<size_t>(b)]);
        if (factorPairs[q].first == factorPairs[q].second) {
          x.push_back(obs[static_cast<size_t>(b)]);
          y.push_back(obs[static_cast<size_t>(a)]);
        }
      }
      const double rObs = pearson(x, y);
      x.clear();
      y.clear();
      for (const auto& [a, b] : pc) {
        x.push_back(repl[static_cast<size_t>(a)]);
        y.push_back(repl[static_cast<size_t>(b)]);
        if (factorPairs[q].first == factorPairs[q].second) {
          x.push_back(repl[static_cast<size_t>(b)]);
          y.push_back(repl[static_cast<size_t>(a)]);
        }
      }
      const double rRep = pearson(x, y);
      if (!std::isfinite(rObs) || !std::isfinite(rRep)) continue;
      entries[q].observed.push_back(rObs);
      entries[q].replicated.push_back(rRep);
      if (rRep >= rObs) ++entries[q].successes;
    }
  }
  for (auto& e : entries)
    if (!e.observed.empty()) report.entries.push_back(std::move(e));
  return report;
}

DiscrepancyReport crossCohortCorrelationPPP(const PosteriorDraws& draws,
                                            const LongitudinalDataset& data,
                                            const ModelSpec& spec) {
  requireVariant(draws, Variant::NoParticipant,
                 "cross-cohort correlation check");
  Replicates rep(draws, data, spec);
  const auto& cells = rep.cells();
  const int L = spec.L();
  const int P = spec.P();
  const int K = data.K();

  /* cell counts per (factor, cohort, window); fixed across draws */
  std::vector<int> count(static_cast<size_t>(L * K * P), 0);
  auto slot = [&](int l, int k, int w) { return (l * K + k) * P + w; };
  for (const auto& c : cells) ++count[static_cast<size_t>(slot(c.factor, c.cohort, c.window))];

  struct Group {
    int factor, k1, k2;
    std::vector<int> windows;  // shared populated windows
  };
  std::vector<Group> groups;
  for (int l = 0; l < L; ++l)
    for (int k1 = 0; k1 < K; ++k1)
      for (int k2 = k1 + 1; k2 < K; ++k2) {
        Group g{l, k1, k2, {}};
        for (int w = 0; w < P; ++w)
          if (count[static_cast<size_t>(slot(l, k1, w))] > 0 &&
              count[static_cast<size_t>(slot(l, k2, w))] > 0)
            g.windows.push_back(w);
        if (g.windows.size() >= 2) groups.push_back(std::move(g));
      }

  DiscrepancyReport report;
  report.check = "cross-cohort-correlation";
  std::vector<DiscrepancyEntry> entries(groups.size());
  for (size_t q = 0; q < groups.size(); ++q)
    entries[q].key = data.cohorts[static_cast<size_t>(groups[q].k1)] + ":" +
                     data.cohorts[static_cast<size_t>(groups[q].k2)] + ":" +
                     spec.riskFactors[static_cast<size_t>(groups[q].factor)];

  std::vector<double> obs, repl;
  std::vector<double> sumObs(static_cast<size_t>(L * K * P));
  std::vector<double> sumRep(static_cast<size_t>(L * K * P));
  std::vector<double> x1, y1, x2, y2;
  for (int j = 0; j < rep.count(); ++j) {
    rep.residuals(j, &obs, &repl);
    std::fill(sumObs.begin(), sumObs.end(), 0.0);
    std::fill(sumRep.begin(), sumRep.end(), 0.0);
    for (size_t ci = 0; ci < cells.size(); ++ci) {
      const auto& c = cells[ci];
      const size_t sl = static_cast<size_t>(slot(c.factor, c.cohort, c.window));
      sumObs[sl] += obs[ci];
      sumRep[sl] += repl[ci];
    }
    for (size_t q = 0; q < groups.size(); ++q) {
      const Group& g = groups[q];
      x1.clear();
      y1.clear();
      x2.clear();
      y2.clear();
      for (int w : g.windows) {
        const size_t s1 = static_cast<size_t>(slot(g.factor, g.k1, w));
        const size_t s2 = static_cast<size_t>(slot(g.factor, g.k2, w));
        x1.push_back(sumObs[s1] / count[s1]);
        y1.push_back(sumObs[s2] / count[s2]);
        x2.push_back(sumRep[s1] / count[s1]);
        y2.push_back(sumRep[s2] / count[s2]);
      }
      const double rObs = pearson(x1, y1);
      const double rRep = pearson(x2, y2);
      if (!std::isfinite(rObs) || !std::isfinite(rRep)) continue;
      entries[q].observed.push_back(rObs);
      entries[q].replicated.push_back(rRep);
      if (rRep >= rObs) ++entries[q].successes;
    }
  }
  for (auto& e : entries)
    if (!e.observed.empty()) report.entries.push_back(std::move(e));
  return report;
}

std::vector<VarianceRatioEntry> varianceRatio(const PosteriorDraws& draws,
                                              const LongitudinalDataset& data,
                                              const ModelSpec& spec) {
  Replicates rep(draws, data, spec);
  const auto& cells = rep.cells();
  const int L = spec.L();
  const int P = spec.P();
  std::vector<std::vector<int>> members(static_cast<size_t>(L * P));
  for (size_t ci = 0; ci < cells.size(); ++ci)
    members[static_cast<size_t>(cells[ci].factor * P + cells[ci].window)]
        .push_back(static_cast<int>(ci));

  std::vector<double> ratioSum(static_cast<size_t>(L * P), 0.0);
  std::vector<int> ratioDraws(static_cast<size_t>(L * P), 0);
  std::vector<double> obs, repl;
  auto var = [](const std::vector<double>& v, const std::vector<int>& idx) {
    double m = 0;
    for (int i : idx) m += v[static_cast<size_t>(i)];
    m /= static_cast<double>(idx.size());
    double s = 0;
    for (int i : idx) {
      const double d = v[static_cast<size_t>(i)] - m;
      s += d * d;
    }
    return s / static_cast<double>(idx.size() - 1);
  };
  for (int j = 0; j < rep.count(); ++j) {
    rep.residuals(j, &obs, &repl);
    for (size_t g = 0; g < members.size(); ++g) {
      if (members[g].size() < 2) continue;
      const double vr = var(repl, members[g]);
      if (vr <= 0.0) continue;
      ratioSum[g] += var(obs, members[g]) / vr;
      ++ratioDraws[g];
    }
  }

  std::vector<VarianceRatioEntry> out;
  for (int l = 0; l < L; ++l)
    for (int w = 0; w < P; ++w) {
      const size_t g = static_cast<size_t>(l * P + w);
      if (ratioDraws[g] == 0) continue;
      VarianceRatioEntry e;
      e.factor = spec.riskFactors[static_cast<size_t>(l)];
      e.window = w;
      e.ratio = ratioSum[g] / static_cast<double>(ratioDraws[g]);
      e.cellCount = static_cast<int>(members[g].size());
      out.push_back(std::move(e));
    }
  return out;
}

void pairedQuantiles(std::vector<float> observed, std::vector<float> replicated,
                     std::vector<double>* probs, std::vector<double>* qObserved,
                     std::vector<double>* qReplicated) {
  if (observed.empty() || replicated.empty())
    throw std::invalid_argument("empty residual pool");
  std::sort(observed.begin(), observed.end());
  std::sort(replicated.begin(), replicated.end());
  probs->clear();
  qObserved->clear();
  qReplicated->clear();
  auto quantile = [](const std::vector<float>& v, double p) {
    const double h = p * (static_cast<double>(v.size()) - 1.0);
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return (1.0 - frac) * v[lo] + frac * v[hi];
  };
  for (int i = 1; i <= 199; ++i) {
    const double p = 0.005 * i;
    probs->push_back(p);
    qObserved->push_back(quantile(observed, p));
    qReplicated->push_back(quantile(replicated, p));
  }
}

QqTable qqExport(const PosteriorDraws& draws, const LongitudinalDataset& data,
                 const ModelSpec& spec, int maxDraws) {
  if (maxDraws < 1) throw std::invalid_argument("maxDraws must be positive");
  Replicates rep(draws, data, spec);
  const auto& cells = rep.cells();
  const int L = spec.L();
  const int use = std::min(maxDraws, rep.count());
  std::vector<std::vector<float>> poolObs(static_cast<size_t>(L));
  std::vector<std::vector<float>> poolRep(static_cast<size_t>(L));
  std::vector<double> obs, repl;
  for (int t = 0; t < use; ++t) {
    /* equally spaced across the post-warmup draws */
    const int j = static_cast<int>(
        (static_cast<long long>(t) * rep.count()) / use);
    rep.residuals(j, &obs, &repl);
    for (size_t ci = 0; ci < cells.size(); ++ci) {
      poolObs[static_cast<size_t>(cells[ci].factor)].push_back(
          static_cast<float>(obs[ci]));
      poolRep[static_cast<size_t>(cells[ci].factor)].push_back(
          static_cast<float>(repl[ci]));
    }
  }
  QqTable table;
  table.factors = spec.riskFactors;
  table.observed.resize(static_cast<size_t>(L));
  table.replicated.resize(static_cast<size_t>(L));
  for (int l = 0; l < L; ++l) {
    std::vector<double> probs;
    pairedQuantiles(std::move(poolObs[static_cast<size_t>(l)]),
                    std::move(poolRep[static_cast<size_t>(l)]), &probs,
                    &table.observed[static_cast<size_t>(l)],
                    &table.replicated[static_cast<size_t>(l)]);
    table.probs = std::move(probs);
  }
  return table;
}

}  // namespace lrtraj
