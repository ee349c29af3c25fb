#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrtraj/dataset.hpp"
#include "lrtraj/likelihood.hpp"
#include "lrtraj/model.hpp"
#include "lrtraj/rng.hpp"
#include "lrtraj/state.hpp"

namespace lrtraj {

/* How each superchain's shared initial state is produced. */
enum class InitStrategy { SubsamplePosterior, PriorDraw, TruthJitter };
const char* initStrategyName(InitStrategy s);
InitStrategy initStrategyFromName(const std::string& name);

struct SamplerConfig {
  int superchains = 8;
  int subchains = 16;
  int iterations = 70;
  int warmup = 50;
  std::uint64_t seed = 0;
  InitStrategy init = InitStrategy::SubsamplePosterior;
  double subsampleFraction = 0.10;
  double initialStep = 0.25;  // random-walk step, log scale for omega

  void validate() const;
};

/* All draws of one run, chain-major: row (k*subchains + m)*iterations + n
 * holds draw n of subchain m of superchain k. Rows flatten states through
 * the layout. */
struct PosteriorDraws {
  ParamLayout layout;
  int superchains = 0;
  int subchains = 0;
  int iterations = 0;
  int warmup = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd values;

  int chainCount() const { return superchains * subchains; }
  int rowCount() const { return chainCount() * iterations; }
  int row(int k, int m, int n) const {
    return (k * subchains + m) * iterations + n;
  }
  bool isWarmupRow(int r) const { return r % iterations < warmup; }
  int postWarmupPerChain() const { return iterations - warmup; }
  int postWarmupCount() const {
    return chainCount() * postWarmupPerChain();
  }
  std::vector<int> postWarmupRows() const;
  ParameterState state(int r) const {
    return layout.unflatten(values.row(r).transpose());
  }
  std::vector<double> postWarmupColumn(int col) const;
  std::vector<double> postWarmupColumn(const std::string& path) const;
};

/* One full conditional-update cycle over the posterior. Separate update
 * blocks are public so each kernel's stationarity can be tested on its own.
 * Chain-local mutable pieces (latent cell variables, adapted step sizes)
 * live in a Workspace owned by the caller; the kernel itself is immutable
 * and shared across chains. */
class GibbsKernel {
 public:
  GibbsKernel(const LongitudinalDataset& data, const ModelSpec& spec,
              Variant variant, PriorSettings prior = PriorSettings{});

  const ParamLayout& layout() const { return layout_; }
  const PriorSettings& priorSettings() const { return prior_; }
  const ModelSpec& spec() const { return spec_; }
  int cellCount() const { return static_cast<int>(cells_.size()); }

  struct Workspace {
    std::vector<double> latent;  // one truncated-normal value per cell
    Eigen::MatrixXd omegaStep;   // L x P
    Eigen::VectorXd psiStep;     // L
    bool adapting = true;
    Eigen::MatrixXd omegaAdaptCount;  // L x P proposal counters
    Eigen::VectorXd psiAdaptCount;
  };
  Workspace makeWorkspace(double initialStep) const;

  void sweep(ParameterState& s, Workspace& w, Rng& rng) const;

  void drawLatent(const ParameterState& s, Workspace& w, Rng& rng) const;
  void updateFixedAndCohort(ParameterState& s, const Workspace& w,
                            Rng& rng) const;
  void updateSubjects(ParameterState& s, const Workspace& w, Rng& rng) const;
  void updateSigma(ParameterState& s, Rng& rng) const;
  void updateLambda(ParameterState& s, Rng& rng) const;
  void updateOmega(ParameterState& s, Workspace& w, Rng& rng) const;
  void updatePsi(ParameterState& s, Workspace& w, Rng& rng) const;

  /* Exact draw from the prior with this layout's dimensions. */
  ParameterState priorDrawState(Rng& rng) const;

  /* Full fitted mean of every observed cell (fixed + cohort + subject). */
  std::vector<double> fittedMeans(const ParameterState& s) const;

  /* Read-only view of the observed cells, aligned with fittedMeans. */
  struct CellInfo {
    int record = 0, participant = 0, cohort = 0, factor = 0, window = 0;
    double age = 0.0, y = 0.0;
  };
  std::vector<CellInfo> cellInfo() const;

 private:
  struct Cell {
    int record = 0, participant = 0, cohort = 0, factor = 0, window = 0;
    double age = 0.0, y = 0.0;
    std::vector<std::pair<int, double>> alphaNz;  // sparse fixed design row
  };

  ModelSpec spec_;
  Variant variant_;
  PriorSettings prior_;
  ParamLayout layout_;
  int L_ = 0, P_ = 0, K_ = 0, n_ = 0;
  std::vector<Cell> cells_;
  std::vector<std::vector<int>> cellsOfFactor_;
  std::vector<std::vector<int>> cellsOfFactorWindow_;  // index l*P + w
  std::vector<std::vector<int>> cellsOfParticipant_;

  bool hasCohortBlock() const { return variant_ != Variant::NoCohort && K_ > 0; }
  bool hasSubjectBlock() const { return variant_ != Variant::NoParticipant; }
  double cellMean(const ParameterState& s, const Cell& c) const;
  double fixedCohortMean(const ParameterState& s, const Cell& c) const;
};

/* Run the full sampler: superchains sharing per-superchain initial states,
 * adaptation frozen after warmup, deterministic chain-major draw layout.
 * truth is required by the truth-jitter strategy and ignored otherwise. */
PosteriorDraws runSampler(const LongitudinalDataset& data,
                          const ModelSpec& spec, const SamplerConfig& config,
                          Variant variant = Variant::Full,
                          const ParameterState* truth = nullptr);

}  // namespace lrtraj
