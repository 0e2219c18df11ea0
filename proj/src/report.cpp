#include "ncert/report.hpp"

namespace ncert {

using json = nlohmann::ordered_json;

json to_json(const Provenance& p) {
    json out;
    switch (p.kind) {
        case Provenance::Kind::Declared:
            out["method"] = "declared";
            break;
        case Provenance::Kind::Sampled:
            out["method"] = "sampled";
            out["window"] = {p.window.lo, p.window.hi};
            out["samples"] = p.samples;
            break;
        case Provenance::Kind::Computed:
            out["method"] = "computed";
            out["inputs"] = p.inputs;
            break;
    }
    return out;
}

json to_json(const Certificate& cert) {
    json out;
    out["id"] = std::string(test_id_name(cert.test_id));
    out["verdict"] = std::string(verdict_name(cert.verdict));
    out["margin"] = cert.margin;
    out["grid_certified"] = cert.grid_certified;
    json constants = json::object();
    for (const auto& [name, value] : cert.constants) {
        json c;
        c["value"] = value.value;
        c["provenance"] = to_json(value.prov);
        constants[name] = std::move(c);
    }
    out["constants"] = std::move(constants);
    json ineqs = json::array();
    for (const auto& s : cert.inequalities) ineqs.push_back({{"name", s.name}, {"slack", s.slack}});
    out["inequalities"] = std::move(ineqs);
    if (!cert.note.empty()) out["note"] = cert.note;
    return out;
}

json to_json(const ValidationReport& report) {
    json out;
    out["passed"] = report.passed;
    json findings = json::array();
    for (const auto& f : report.findings) {
        const char* sev = f.severity == Severity::Error     ? "error"
                          : f.severity == Severity::Warning ? "warning"
                                                            : "info";
        findings.push_back({{"severity", sev},
                            {"message", f.message},
                            {"quantity", f.quantity},
                            {"value", f.value}});
    }
    out["findings"] = std::move(findings);
    return out;
}

json to_json(const ExponentialBound& bound) {
    json out;
    out["lambda"] = bound.lambda;
    out["M0"] = bound.M0;
    out["c_x0"] = bound.c_x0;
    out["c_psi"] = bound.c_psi;
    out["c_phi"] = bound.c_phi;
    out["c_f"] = bound.c_f;
    out["provenance"] = to_json(
        Provenance::computed({"lambda", "M0", "A_sup", "B*_sup", "sigma", "tau_*"}));
    return out;
}

json to_json(const BoundCheck& check, int max_curve_points) {
    json out;
    out["max_ratio"] = check.max_ratio;
    if (check.first_violation)
        out["first_violation"] = *check.first_violation;
    else
        out["first_violation"] = nullptr;
    out["points"] = check.margin_curve.size();
    // The full curve lives in the BoundCheck; the report decimates it so big
    // trajectories stay readable.
    json curve = json::array();
    const std::size_t count = check.margin_curve.size();
    if (count > 0) {
        const std::size_t stride =
            std::max<std::size_t>(1, count / static_cast<std::size_t>(max_curve_points));
        for (std::size_t i = 0; i < count; i += stride) curve.push_back(check.margin_curve[i]);
        if ((count - 1) % stride != 0) curve.push_back(check.margin_curve[count - 1]);
    }
    out["ratio_curve"] = std::move(curve);
    out["ratio_curve_stride"] =
        count > 0 ? std::max<std::size_t>(1, count / static_cast<std::size_t>(max_curve_points))
                  : 1;
    return out;
}

}  // namespace ncert
