#pragma once

#include <string>

#include "lrtraj/io.hpp"

namespace lrtraj {

/* Subcommand drivers. Each returns a process exit code: 0 on success, 1 on
 * an analysis failure (e.g. the convergence gate). Usage problems throw
 * std::invalid_argument, which the command line maps to exit 2. Output file
 * names are fixed within the configured output directory. */

int runSimulate(const RunConfig& cfg);

int runFit(const RunConfig& cfg, Variant variant,
           const std::string& dataOverride = "");

int runPpc(const RunConfig& cfg, Variant variant,
           const std::string& drawsOverride = "",
           const std::string& dataOverride = "");

int runImpute(const RunConfig& cfg, const std::string& drawsOverride = "",
              const std::string& dataOverride = "");

int runDelete(const RunConfig& cfg, const std::string& dataOverride = "");

int runPool(const std::string& estimatesPath, const std::string& outPath);

/* Canonical output paths inside an output directory. */
std::string dataOutPath(const RunConfig& cfg);
std::string truthOutPath(const RunConfig& cfg);
std::string drawsOutPath(const RunConfig& cfg, Variant variant);
std::string convergenceOutPath(const RunConfig& cfg, Variant variant);

}  // namespace lrtraj
