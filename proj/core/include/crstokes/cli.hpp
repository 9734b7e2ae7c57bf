#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crstokes {

struct RunConfig {
  std::string subcommand;  // run | rates | axioms | equivalence
  std::string case_id = "ocp-square";
  double theta = 0.3;
  double alpha = -1.0;  // negative: case default
  std::vector<double> ua, ub;
  int max_dofs = 50000;
  int max_iters = 30;  // adaptive levels
  double tol = 1e-10;
  std::string out = "out";
  std::uint64_t seed = 1;
  bool uniform = false;
  int levels = 5;
  int initial_n = 0;  // 0: case default
  int ref_gap = 2;
  bool timing = false;
  bool no_errors = false;

  std::string canonical_line() const;
};

// exit codes: 0 success, 1 check failure, 2 usage error
int cli_main(int argc, char** argv);

}  // namespace crstokes
