#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fradrc/stability.hpp"
#include "scenario.hpp"

namespace fradrc::cli {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kUnstable = 3, kNumerical = 4 };

struct Options {
  std::string config;
  std::string out;  // empty: print only
  bool oracle_filters = false;
  LambdaConvention convention = LambdaConvention::Lcm;
  std::vector<double> k;  // overrides [sweep] K
};

int cmd_design(const Options& o, std::ostream& log);
int cmd_simulate(const Options& o, std::ostream& log);
int cmd_freq(const Options& o, std::ostream& log);
int cmd_stability(const Options& o, std::ostream& log);
int cmd_sweep(const Options& o, std::ostream& log);
int cmd_compare(const Options& o, std::ostream& log);

// Parses argv, runs the command and maps library errors to exit codes.
int run(int argc, char** argv);

}  // namespace fradrc::cli
