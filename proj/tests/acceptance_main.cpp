#include <cstdio>
#include <cstring>
#include <string>

#include "lrtraj/validate.hpp"

int main(int argc, char** argv) {
  lrtraj::AcceptanceOptions opt;
  opt.outDir = "acceptance_out";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--cli") == 0 && i + 1 < argc) {
      opt.cliPath = argv[++i];
    } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      opt.outDir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s --cli <binary> [--out <dir>]\n",
                   argv[0]);
      return 2;
    }
  }
  if (opt.cliPath.empty()) {
    std::fprintf(stderr, "usage: %s --cli <binary> [--out <dir>]\n", argv[0]);
    return 2;
  }
  return lrtraj::runAcceptance(opt) ? 0 : 1;
}
