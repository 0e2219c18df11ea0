#pragma once

#include <iosfwd>

#include "ncert/config.hpp"

namespace ncert {

struct SweepSpec {
    std::string parameter;
    double lo = 0.0;
    double hi = 0.0;
    int points = 2;
    bool refine = false;  // bisect each verdict flip to 1e-6 in the parameter
    std::vector<TestId> tests{TestId::thm32, TestId::thm32a};
    std::optional<double> lambda;  // forwarded to rate-based tests
};

struct SweepRow {
    double value = 0.0;
    std::vector<Certificate> results;  // one per spec.tests entry
};

struct SweepThreshold {
    TestId test = TestId::thm32;
    double value = 0.0;       // refined parameter value of the verdict flip
    bool certified_below = false;
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepRow> rows;
    std::vector<SweepThreshold> thresholds;  // filled when refine is set
};

// Re-instantiates the config at each parameter value (textual substitution of
// the named constant) and evaluates the selected tests. Throws ConfigError if
// the parameter never appears in an expression.
SweepResult run_sweep(const nlohmann::ordered_json& config_doc, const SweepSpec& spec,
                      const LoadOptions& load_opts = {});

// CSV: value column plus verdict and margin columns per test; refined
// thresholds appended as '# threshold' comment lines.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

}  // namespace ncert
