#include "ncert/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ncert {

namespace {

std::vector<Certificate> evaluate_at(const nlohmann::ordered_json& doc, const SweepSpec& spec,
                                     const LoadOptions& base_opts, double value,
                                     int* substitutions) {
    LoadOptions opts = base_opts;
    opts.parameter_overrides[spec.parameter] = value;
    RunConfig cfg = config_from_json(doc, opts);
    if (substitutions) *substitutions = cfg.substitution_count;
    cfg.certify.lambda = spec.lambda;
    std::vector<Certificate> certs;
    certs.reserve(spec.tests.size());
    for (TestId id : spec.tests) certs.push_back(run_test(cfg.system, id, cfg.certify));
    return certs;
}

}  // namespace

SweepResult run_sweep(const nlohmann::ordered_json& config_doc, const SweepSpec& spec,
                      const LoadOptions& load_opts) {
    if (!(spec.lo < spec.hi)) throw ConfigError("sweep range must satisfy lo < hi");
    if (spec.points < 2) throw ConfigError("sweep needs at least 2 points");
    if (spec.tests.empty()) throw ConfigError("sweep needs at least one test");

    SweepResult result;
    result.spec = spec;
    int substitutions = 0;
    for (int i = 0; i < spec.points; ++i) {
        const double v = spec.lo + (spec.hi - spec.lo) * i / (spec.points - 1);
        SweepRow row;
        row.value = v;
        row.results = evaluate_at(config_doc, spec, load_opts, v, i == 0 ? &substitutions : nullptr);
        result.rows.push_back(std::move(row));
    }
    if (substitutions == 0)
        throw ConfigError("sweep parameter '" + spec.parameter +
                          "' does not appear in any expression");

    if (spec.refine) {
        for (std::size_t ti = 0; ti < spec.tests.size(); ++ti) {
            for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
                const Verdict a = result.rows[i].results[ti].verdict;
                const Verdict b = result.rows[i + 1].results[ti].verdict;
                if (a == b || a == Verdict::inapplicable || b == Verdict::inapplicable) continue;
                double lo = result.rows[i].value;
                double hi = result.rows[i + 1].value;
                const bool lo_certified = a == Verdict::certified;
                while (hi - lo > 1e-6) {
                    const double mid = 0.5 * (lo + hi);
                    const auto certs = evaluate_at(config_doc, spec, load_opts, mid, nullptr);
                    const bool mid_certified = certs[ti].verdict == Verdict::certified;
                    if (mid_certified == lo_certified)
                        lo = mid;
                    else
                        hi = mid;
                }
                result.thresholds.push_back(
                    {spec.tests[ti], 0.5 * (lo + hi), lo_certified});
            }
        }
    }
    return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    out << result.spec.parameter;
    for (TestId id : result.spec.tests)
        out << ',' << test_id_name(id) << "_verdict," << test_id_name(id) << "_margin";
    out << "\n";
    char buf[40];
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.value);
        out << buf;
        for (const auto& cert : row.results) {
            out << ',' << verdict_name(cert.verdict) << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", cert.margin);
            out << buf;
        }
        out << "\n";
    }
    for (const auto& th : result.thresholds) {
        std::snprintf(buf, sizeof(buf), "%.17g", th.value);
        out << "# threshold," << test_id_name(th.test) << ',' << buf << ','
            << (th.certified_below ? "certified_below" : "certified_above") << "\n";
    }
}

}  // namespace ncert
