#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qsearch/models.hpp"

namespace qsearch {

// Parses `gaussian:mu=<f>` | `coin:b=<f>` | `generic:<path>`; the table file
// holds two lines of whitespace-separated probabilities of equal length.
PopulationModel parse_model_spec(const std::string& spec);

// Full command-line front end. args excludes the program name and is in
// normal order. Returns the process exit code: 0 success, 1 usage error,
// 2 runtime diagnostic (including inconclusive verification), 3 verification
// failure. All data output goes to out, diagnostics and timings to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qsearch
