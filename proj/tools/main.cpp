#include <unistd.h>

#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "lrtraj/driver.hpp"
#include "lrtraj/state.hpp"
#include "lrtraj/validate.hpp"

namespace {

std::string selfPath(const char* argv0) {
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n > 0) {
    buf[n] = '\0';
    return buf;
  }
  return argv0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pooled-cohort risk factor trajectory model"};
  app.require_subcommand(1);

  std::string configPath;
  std::string variantName = "full";
  std::string dataPath;
  std::string drawsPath;
  std::string estimatesPath;
  std::string pooledOut;
  std::string acceptOut = "acceptance_out";
  std::string acceptCli;

  auto addConfig = [&configPath](CLI::App* cmd) {
    cmd->add_option("--config", configPath, "JSON run configuration")
        ->required();
  };
  auto addVariant = [&variantName](CLI::App* cmd) {
    cmd->add_option("--variant", variantName,
                    "full, no-cohort or no-participant");
  };
  auto addData = [&dataPath](CLI::App* cmd) {
    cmd->add_option("--data", dataPath,
                    "input CSV, overriding the configured data path");
  };
  auto addDraws = [&drawsPath](CLI::App* cmd) {
    cmd->add_option("--draws", drawsPath,
                    "draws CSV, overriding the canonical output path");
  };

  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate a synthetic pooled study");
  addConfig(simulate);

  CLI::App* fit = app.add_subcommand(
      "fit", "Run the sampler and write draws plus convergence diagnostics");
  addConfig(fit);
  addVariant(fit);
  addData(fit);

  CLI::App* ppc = app.add_subcommand(
      "ppc", "Posterior predictive checks for a finished fit");
  addConfig(ppc);
  addVariant(ppc);
  addDraws(ppc);
  addData(ppc);

  CLI::App* impute = app.add_subcommand(
      "impute", "Write completed datasets from a full-variant fit");
  addConfig(impute);
  addDraws(impute);
  addData(impute);

  CLI::App* del = app.add_subcommand(
      "delete", "Apply the configured deletion experiment to a dataset");
  addConfig(del);
  addData(del);

  CLI::App* pool = app.add_subcommand(
      "pool", "Combine per-dataset estimates with Rubin's rules");
  pool->add_option("--estimates", estimatesPath,
                   "CSV with 'estimate,variance' rows")
      ->required();
  pool->add_option("--out", pooledOut, "optional JSON output path");

  CLI::App* validate = app.add_subcommand(
      "validate", "Run the acceptance criteria end to end");
  validate->add_option("--out", acceptOut, "scratch and report directory");
  validate->add_option("--cli", acceptCli,
                       "binary exercised by the determinism criterion "
                       "(defaults to this one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return lrtraj::runSimulate(lrtraj::loadConfig(configPath));
    if (fit->parsed())
      return lrtraj::runFit(lrtraj::loadConfig(configPath),
                            lrtraj::variantFromName(variantName), dataPath);
    if (ppc->parsed())
      return lrtraj::runPpc(lrtraj::loadConfig(configPath),
                            lrtraj::variantFromName(variantName), drawsPath,
                            dataPath);
    if (impute->parsed())
      return lrtraj::runImpute(lrtraj::loadConfig(configPath), drawsPath,
                               dataPath);
    if (del->parsed())
      return lrtraj::runDelete(lrtraj::loadConfig(configPath), dataPath);
    if (pool->parsed()) return lrtraj::runPool(estimatesPath, pooledOut);
    if (validate->parsed()) {
      lrtraj::AcceptanceOptions opt;
      opt.outDir = acceptOut;
      opt.cliPath = acceptCli.empty() ? selfPath(argv[0]) : acceptCli;
      return lrtraj::runAcceptance(opt) ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
