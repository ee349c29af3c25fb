#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>

#include "lrtraj/dataset.hpp"
#include "lrtraj/impute.hpp"
#include "lrtraj/io.hpp"
#include "lrtraj/model.hpp"
#include "lrtraj/ppc.hpp"
#include "lrtraj/rhat.hpp"
#include "lrtraj/sampler.hpp"
#include "lrtraj/simulator.hpp"
#include "lrtraj/state.hpp"

namespace py = pybind11;
using namespace lrtraj;

PYBIND11_MODULE(_lrtraj, m) {
  m.doc() = "Pooled-cohort risk factor trajectory model";

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](const std::vector<std::string>& factors) {
             ModelSpec s;
             s.riskFactors = factors;
             s.validate();
             return s;
           }),
           py::arg("risk_factors"))
      .def_readwrite("risk_factors", &ModelSpec::riskFactors)
      .def_readwrite("age_min", &ModelSpec::ageMin)
      .def_readwrite("age_max", &ModelSpec::ageMax)
      .def_readwrite("breakpoints", &ModelSpec::breakpoints)
      .def_readwrite("birth_year_cuts", &ModelSpec::birthYearCuts)
      .def_property_readonly("L", &ModelSpec::L)
      .def_property_readonly("P", &ModelSpec::P)
      .def("window_index", &ModelSpec::windowIndex, py::arg("age"))
      .def("__repr__", [](const ModelSpec& s) {
        return "<ModelSpec of " + std::to_string(s.L()) + " risk factors, " +
               std::to_string(s.P()) + " age windows>";
      });

  py::class_<LongitudinalDataset>(m, "Dataset")
      .def_property_readonly(
          "cohorts",
          [](const LongitudinalDataset& d) { return d.cohorts; })
      .def_property_readonly("participant_count",
                             [](const LongitudinalDataset& d) {
                               return d.participants.size();
                             })
      .def_property_readonly(
          "record_count",
          [](const LongitudinalDataset& d) { return d.records.size(); })
      .def(
          "write_csv",
          [](const LongitudinalDataset& d, const std::string& path) {
            emitDataset(d, path);
          },
          py::arg("path"))
      .def("__repr__", [](const LongitudinalDataset& d) {
        return "<Dataset: " + std::to_string(d.participants.size()) +
               " participants, " + std::to_string(d.records.size()) +
               " exams, " + std::to_string(d.cohorts.size()) + " cohorts>";
      });

  py::class_<PosteriorDraws>(m, "PosteriorDraws")
      .def_readonly("superchains", &PosteriorDraws::superchains)
      .def_readonly("subchains", &PosteriorDraws::subchains)
      .def_readonly("iterations", &PosteriorDraws::iterations)
      .def_readonly("warmup", &PosteriorDraws::warmup)
      .def_readonly("seed", &PosteriorDraws::seed)
      .def_property_readonly(
          "variant",
          [](const PosteriorDraws& d) {
            return std::string(variantName(d.layout.variant()));
          })
      .def_property_readonly(
          "paths",
          [](const PosteriorDraws& d) { return d.layout.paths(); })
      .def(
          "column",
          [](const PosteriorDraws& d, const std::string& path) {
            return d.postWarmupColumn(path);
          },
          py::arg("path"), "Post-warmup draws of one parameter")
      .def(
          "save",
          [](const PosteriorDraws& d, const std::string& path) {
            saveDraws(d, path);
          },
          py::arg("path"))
      .def("__repr__", [](const PosteriorDraws& d) {
        return "<PosteriorDraws: " + std::to_string(d.superchains) + "x" +
               std::to_string(d.subchains) + " chains, " +
               std::to_string(d.iterations) + " iterations, " +
               std::to_string(d.layout.size()) + " parameters>";
      });

  m.def(
      "simulate",
      [](const ModelSpec& spec, std::uint64_t seed) {
        const DeskTruth truth = defaultDeskTruth(spec, 3);
        return simulateDataset(deskProfiles(spec.L()), spec, truth.state,
                               seed)
            .data;
      },
      py::arg("spec"), py::arg("seed"),
      "Synthetic three-cohort study under the built-in ground truth");

  m.def(
      "read_csv",
      [](const ModelSpec& spec, const std::string& path) {
        return ingestDataset(path, spec);
      },
      py::arg("spec"), py::arg("path"));

  m.def(
      "fit",
      [](const LongitudinalDataset& data, const ModelSpec& spec,
         const std::string& variant, int superchains, int subchains,
         int iterations, int warmup, std::uint64_t seed,
         const std::string& init) {
        SamplerConfig cfg;
        cfg.superchains = superchains;
        cfg.subchains = subchains;
        cfg.iterations = iterations;
        cfg.warmup = warmup;
        cfg.seed = seed;
        cfg.init = initStrategyFromName(init);
        if (cfg.init == InitStrategy::TruthJitter)
          throw std::invalid_argument(
              "truth-jitter initialization is not exposed here");
        return runSampler(data, spec, cfg, variantFromName(variant));
      },
      py::arg("data"), py::arg("spec"), py::arg("variant") = "full",
      py::arg("superchains") = 8, py::arg("subchains") = 16,
      py::arg("iterations") = 70, py::arg("warmup") = 50, py::arg("seed") = 1,
      py::arg("init") = "subsample-posterior");

  m.def(
      "load_draws",
      [](const std::string& path, const ModelSpec& spec,
         const LongitudinalDataset& data) {
        return loadDraws(path, spec, data);
      },
      py::arg("path"), py::arg("spec"), py::arg("data"));

  m.def(
      "convergence",
      [](const PosteriorDraws& draws, double threshold) {
        const ConvergenceReport rep = convergenceReport(draws, threshold);
        py::dict out;
        py::list entries;
        for (const auto& e : rep.entries)
          entries.append(py::make_tuple(e.path, e.rhat));
        out["entries"] = entries;
        out["failures"] = rep.failures;
        out["fail_fraction"] = rep.failFraction();
        return out;
      },
      py::arg("draws"), py::arg("threshold") = 1.1,
      "Nested potential scale reduction per parameter");

  m.def("nested_rhat", &nestedRhatCore, py::arg("traces"),
        "Nested potential scale reduction of raw traces, grouped as "
        "[superchain][subchain][iteration]");

  m.def(
      "variance_ratio",
      [](const PosteriorDraws& draws, const LongitudinalDataset& data,
         const ModelSpec& spec) {
        py::list out;
        for (const auto& e : varianceRatio(draws, data, spec)) {
          py::dict d;
          d["factor"] = e.factor;
          d["window"] = e.window;
          d["ratio"] = e.ratio;
          d["cells"] = e.cellCount;
          out.append(d);
        }
        return out;
      },
      py::arg("draws"), py::arg("data"), py::arg("spec"),
      "Observed-vs-replicated residual variance per factor and age window");

  m.def(
      "impute",
      [](const PosteriorDraws& draws, const LongitudinalDataset& data,
         const ModelSpec& spec, int copies, std::uint64_t seed) {
        const ImputedDatasetSet set =
            imputeMissing(draws, data, spec, copies, seed);
        return set.datasets;
      },
      py::arg("draws"), py::arg("data"), py::arg("spec"), py::arg("copies"),
      py::arg("seed"), "Completed copies of a dataset with missing cells");

  m.def(
      "age_slope",
      [](const LongitudinalDataset& data, const ModelSpec& spec,
         const std::string& factor) {
        const int idx = spec.factorIndex(factor);
        if (idx < 0)
          throw std::invalid_argument("unknown risk factor: " + factor);
        return ageSlopeEstimate(data, idx);
      },
      py::arg("data"), py::arg("spec"), py::arg("factor"),
      "Least-squares slope of one factor on age, with its variance");

  m.def(
      "rubin_pool",
      [](const std::vector<std::pair<double, double>>& estimates) {
        const PooledEstimate p = rubinPool(estimates);
        py::dict out;
        out["point"] = p.point;
        out["within_variance"] = p.withinVariance;
        out["between_variance"] = p.betweenVariance;
        out["total_variance"] = p.totalVariance;
        out["sd"] = p.sd();
        out["count"] = p.count;
        return out;
      },
      py::arg("estimates"),
      "Rubin's rules over (estimate, variance) pairs");
}
