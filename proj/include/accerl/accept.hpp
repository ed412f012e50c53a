#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace accerl {

struct CaseResult {
    bool pass = false;
    std::string measured;   // what was observed
    std::string threshold;  // what it was compared against
};

struct AcceptCase {
    std::string name;
    double budget_s = 60.0;  // wall-clock budget; exceeding it fails the case
    std::function<CaseResult()> fn;
};

// Built-in acceptance cases, in execution order.
const std::vector<AcceptCase>& acceptance_cases();

// Suite file: one case name per line, '#' comments. Empty file = empty
// suite (vacuously passing). Missing --suite means "run everything".
std::vector<std::string> load_suite(const std::string& path);

// Runs the named cases (all built-ins if `names` is empty and
// `run_all_when_empty`), emitting one line per case:
//   CASE <name> PASS|FAIL <measured> <threshold>
// Returns the number of failed cases.
int run_acceptance(const std::vector<std::string>& names, std::ostream& os,
                   bool run_all_when_empty = false);

}  // namespace accerl
