#pragma once

#include "procwarm/metrics.hpp"

#include <string>
#include <vector>

namespace procwarm::report {

struct NamedRun {
    std::string name;
    train::RunMetrics metrics;
};

// Final eval accuracy per run with the delta against `baseline_name` in
// textual +x.xx percentage points.
std::string comparison_table(const std::vector<NamedRun>& runs, const std::string& baseline_name);

// Accuracy-vs-step curves over the given split as a standalone SVG
// document (deterministic text output).
std::string accuracy_curves_svg(const std::vector<NamedRun>& runs,
                                const std::string& split = "eval");

}  // namespace procwarm::report
