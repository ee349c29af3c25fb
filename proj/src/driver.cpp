#include "lrtraj/driver.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace lrtraj {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensureOutputDir(const RunConfig& cfg) {
  if (cfg.outputDir.empty())
    throw std::invalid_argument("config: output_dir is empty");
  std::filesystem::create_directories(cfg.outputDir);
}

std::vector<std::string> idsOf(const LongitudinalDataset& data) {
  std::vector<std::string> ids;
  ids.reserve(data.participants.size());
  for (const Participant& p : data.participants) ids.push_back(p.id);
  return ids;
}

LongitudinalDataset loadFitData(const RunConfig& cfg,
                                const std::string& dataOverride) {
  const std::string path = dataOverride.empty() ? cfg.dataPath : dataOverride;
  if (path.empty())
    throw std::invalid_argument("no dataset given (config 'data' or --data)");
  LongitudinalDataset data = ingestDataset(path, cfg.model);
  data = data.filterSex(cfg.model.sexStratum);
  if (data.records.empty())
    throw std::invalid_argument(path + ": no records in sex stratum '" +
                                cfg.model.sexStratum + "'");
  return data;
}

}  // namespace

std::string dataOutPath(const RunConfig& cfg) {
  return join(cfg.outputDir, "data.csv");
}
std::string truthOutPath(const RunConfig& cfg) {
  return join(cfg.outputDir, "truth.json");
}
std::string drawsOutPath(const RunConfig& cfg, Variant variant) {
  return join(cfg.outputDir,
              std::string("draws_") + variantName(variant) + ".csv");
}
std::string convergenceOutPath(const RunConfig& cfg, Variant variant) {
  return join(cfg.outputDir,
              std::string("convergence_") + variantName(variant) + ".csv");
}

int runSimulate(const RunConfig& cfg) {
  ensureOutputDir(cfg);
  const DeskTruth desk =
      defaultDeskTruth(cfg.model, static_cast<int>(cfg.profiles.size()));
  SimulationResult sim =
      simulateDataset(cfg.profiles, cfg.model, desk.state, cfg.seed);
  emitDataset(sim.data, dataOutPath(cfg));
  ParamLayout layout(cfg.model, sim.data.cohorts, idsOf(sim.data),
                     Variant::Full);
  saveGroundTruth(sim.truth, layout, truthOutPath(cfg));
  std::printf("simulated %zu participants, %zu exams -> %s\n",
              sim.data.participantCount(), sim.data.recordCount(),
              dataOutPath(cfg).c_str());
  return 0;
}

int runFit(const RunConfig& cfg, Variant variant,
           const std::string& dataOverride) {
  ensureOutputDir(cfg);
  LongitudinalDataset data = loadFitData(cfg, dataOverride);

  GroundTruth truth;
  const ParameterState* truthPtr = nullptr;
  if (cfg.sampler.init == InitStrategy::TruthJitter) {
    if (cfg.truthPath.empty())
      throw std::invalid_argument(
          "truth-jitter initialization needs a 'truth' path in the config");
    ParamLayout layout(cfg.model, data.cohorts, idsOf(data), Variant::Full);
    truth = loadGroundTruth(cfg.truthPath, layout);
    truthPtr = &truth.state;
  }

  PosteriorDraws draws =
      runSampler(data, cfg.model, cfg.sampler, variant, truthPtr);
  saveDraws(draws, drawsOutPath(cfg, variant));
  ConvergenceReport rep = convergenceReport(draws);
  saveConvergence(rep, convergenceOutPath(cfg, variant));
  std::printf("fit (%s): %d parameters, %d with nested R-hat > %s\n",
              variantName(variant), static_cast<int>(rep.entries.size()),
              rep.failures, formatDouble(rep.threshold).c_str());
  if (rep.failFraction() > 0.05) {
    std::printf("convergence gate: %s%% of parameters above threshold\n",
                formatDouble(100.0 * rep.failFraction()).c_str());
    return 1;
  }
  return 0;
}

int runPpc(const RunConfig& cfg, Variant variant,
           const std::string& drawsOverride, const std::string& dataOverride) {
  ensureOutputDir(cfg);
  LongitudinalDataset data = loadFitData(cfg, dataOverride);
  const std::string drawsPath =
      drawsOverride.empty() ? drawsOutPath(cfg, variant) : drawsOverride;
  PosteriorDraws draws = loadDraws(drawsPath, cfg.model, data);
  if (draws.layout.variant() != variant)
    throw std::invalid_argument(drawsPath + ": draws are for variant '" +
                                variantName(draws.layout.variant()) + "'");
  switch (variant) {
    case Variant::Full: {
      saveVarianceRatios(varianceRatio(draws, data, cfg.model),
                         join(cfg.outputDir, "ppc_variance_ratio.csv"));
      saveQqTable(qqExport(draws, data, cfg.model, cfg.qqDraws),
                  join(cfg.outputDir, "ppc_qq.csv"));
      std::printf("wrote ppc_variance_ratio.csv and ppc_qq.csv\n");
      break;
    }
    case Variant::NoCohort: {
      saveDiscrepancyReport(
          withinSubjectCorrelationPPP(draws, data, cfg.model, true),
          join(cfg.outputDir, "ppc_within_subject_same_age.csv"));
      saveDiscrepancyReport(
          withinSubjectCorrelationPPP(draws, data, cfg.model, false),
          join(cfg.outputDir, "ppc_within_subject_different_ages.csv"));
      std::printf("wrote ppc_within_subject_*.csv\n");
      break;
    }
    case Variant::NoParticipant: {
      saveDiscrepancyReport(crossCohortCorrelationPPP(draws, data, cfg.model),
                            join(cfg.outputDir, "ppc_cross_cohort.csv"));
      std::printf("wrote ppc_cross_cohort.csv\n");
      break;
    }
  }
  return 0;
}

int runImpute(const RunConfig& cfg, const std::string& drawsOverride,
              const std::string& dataOverride) {
  ensureOutputDir(cfg);
  LongitudinalDataset data = loadFitData(cfg, dataOverride);
  const std::string drawsPath = drawsOverride.empty()
                                    ? drawsOutPath(cfg, Variant::Full)
                                    : drawsOverride;
  PosteriorDraws draws = loadDraws(drawsPath, cfg.model, data);
  ImputedDatasetSet set =
      imputeMissing(draws, data, cfg.model, cfg.imputations, cfg.seed);

  nlohmann::ordered_json manifest;
  manifest["seed"] = set.seed;
  manifest["copies"] = set.count();
  manifest["draw_rows"] = set.drawRows;
  std::vector<std::string> files;
  for (int d = 0; d < set.count(); ++d) {
    char name[32];
    std::snprintf(name, sizeof(name), "imputed_%03d.csv", d + 1);
    emitDataset(set.datasets[static_cast<size_t>(d)],
                join(cfg.outputDir, name));
    files.emplace_back(name);
  }
  manifest["files"] = files;
  std::ofstream mf(join(cfg.outputDir, "impute_manifest.json"),
                   std::ios::binary);
  mf << manifest.dump(2) << '\n';
  std::printf("wrote %d imputed datasets\n", set.count());
  return 0;
}

int runDelete(const RunConfig& cfg, const std::string& dataOverride) {
  ensureOutputDir(cfg);
  if (cfg.deletions.empty())
    throw std::invalid_argument("config: experiment.deletions is empty");
  const std::string path =
      dataOverride.empty() ? cfg.dataPath : dataOverride;
  if (path.empty())
    throw std::invalid_argument("no dataset given (config 'data' or --data)");
  LongitudinalDataset data = ingestDataset(path, cfg.model);
  std::vector<HeldOutCell> held;
  std::size_t dropped = 0;
  for (const DeletionRule& rule : cfg.deletions) {
    DeletionResult res = applyDeletionExperiment(data, rule, cfg.model);
    held.insert(held.end(), res.heldOut.begin(), res.heldOut.end());
    dropped += res.droppedRecords;
    data = std::move(res.data);
  }
  emitDataset(data, join(cfg.outputDir, "deleted.csv"));
  saveHeldOut(held, join(cfg.outputDir, "heldout.csv"));
  std::printf("masked %zu cells, dropped %zu fully-masked exams\n",
              held.size(), dropped);
  return 0;
}

int runPool(const std::string& estimatesPath, const std::string& outPath) {
  const auto estimates = loadEstimates(estimatesPath);
  const PooledEstimate p = rubinPool(estimates);
  std::printf("pooled point = %s, W = %s, B = %s, T = %s (sd %s), D = %d\n",
              formatDouble(p.point).c_str(),
              formatDouble(p.withinVariance).c_str(),
              formatDouble(p.betweenVariance).c_str(),
              formatDouble(p.totalVariance).c_str(),
              formatDouble(p.sd()).c_str(), p.count);
  if (!outPath.empty()) savePooled(p, outPath);
  return 0;
}

}  // namespace lrtraj
