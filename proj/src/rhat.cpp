#include "lrtraj/rhat.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrtraj {

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sampleVariance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double nestedRhatCore(
    const std::vector<std::vector<std::vector<double>>>& draws) {
  const size_t K = draws.size();
  if (K == 0) throw std::invalid_argument("need at least one superchain");
  const size_t M = draws[0].size();
  if (M == 0) throw std::invalid_argument("need at least one subchain");
  for (const auto& super : draws) {
    if (super.size() != M)
      throw std::invalid_argument("ragged superchains");
    for (const auto& chain : super)
      if (chain.empty()) throw std::invalid_argument("empty chain");
  }

  std::vector<std::vector<double>> chainMean(K, std::vector<double>(M));
  std::vector<std::vector<double>> chainVar(K, std::vector<double>(M));
  std::vector<double> superMean(K);
  double grand = 0.0;
  for (size_t k = 0; k < K; ++k) {
    double sm = 0.0;
    for (size_t m = 0; m < M; ++m) {
      chainMean[k][m] = mean(draws[k][m]);
      chainVar[k][m] = sampleVariance(draws[k][m]);
      sm += chainMean[k][m];
    }
    superMean[k] = sm / static_cast<double>(M);
    grand += superMean[k];
  }
  grand /= static_cast<double>(K);

  double bNu = 0.0;
  if (K > 1) {
    for (size_t k = 0; k < K; ++k)
      bNu += (superMean[k] - grand) * (superMean[k] - grand);
    bNu /= static_cast<double>(K - 1);
  }

  double wNu = 0.0;
  for (size_t k = 0; k < K; ++k) {
    double bK = 0.0;
    if (M > 1) {
      for (size_t m = 0; m < M; ++m)
        bK += (chainMean[k][m] - superMean[k]) *
              (chainMean[k][m] - superMean[k]);
      bK /= static_cast<double>(M - 1);
    }
    double wK = 0.0;
    for (size_t m = 0; m < M; ++m) wK += chainVar[k][m];
    wK /= static_cast<double>(M);
    wNu += bK + wK;
  }
  wNu /= static_cast<double>(K);

  if (wNu == 0.0)
    return bNu == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(1.0 + bNu / wNu);
}

double nestedRhatColumn(const PosteriorDraws& draws, int col) {
  if (col < 0 || col >= draws.layout.size())
    throw std::invalid_argument("parameter column out of range");
  const int post = draws.postWarmupPerChain();
  std::vector<std::vector<std::vector<double>>> nested(
      static_cast<size_t>(draws.superchains));
  for (int k = 0; k < draws.superchains; ++k) {
    nested[static_cast<size_t>(k)].resize(
        static_cast<size_t>(draws.subchains));
    for (int m = 0; m < draws.subchains; ++m) {
      auto& chain = nested[static_cast<size_t>(k)][static_cast<size_t>(m)];
      chain.reserve(static_cast<size_t>(post));
      for (int n = draws.warmup; n < draws.iterations; ++n)
        chain.push_back(draws.values(draws.row(k, m, n), col));
    }
  }
  return nestedRhatCore(nested);
}

double nestedRhat(const PosteriorDraws& draws, const std::string& path) {
  const int col = draws.layout.index(path);
  if (col < 0)
    throw std::invalid_argument("unknown parameter path '" + path + "'");
  return nestedRhatColumn(draws, col);
}

ConvergenceReport convergenceReport(const PosteriorDraws& draws,
                                    double threshold) {
  ConvergenceReport rep;
  rep.threshold = threshold;
  const std::vector<std::string> paths = draws.layout.paths();
  rep.entries.reserve(paths.size());
  for (int col = 0; col < draws.layout.size(); ++col) {
    ConvergenceEntry e;
    e.path = paths[static_cast<size_t>(col)];
    e.rhat = nestedRhatColumn(draws, col);
    if (!(e.rhat <= threshold)) ++rep.failures;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

}  // namespace lrtraj
