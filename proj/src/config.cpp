#include "ncert/config.hpp"

#include <fstream>

namespace ncert {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const json& need(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) fail(where, std::string("missing '") + key + "'");
    return obj.at(key);
}

double need_number(const json& obj, const char* key, const std::string& where) {
    const json& v = need(obj, key, where);
    if (!v.is_number()) fail(where + "." + key, "expected a number");
    return v.get<double>();
}

// Expression strings pass through parameter substitution before parsing, so
// sweeps can rewrite a named constant without touching the grammar.
struct ExprContext {
    std::map<std::string, double> parameters;
    int* substitutions = nullptr;
};

ExprPtr parse_entry(const json& v, const ExprContext& ctx, const std::string& where) {
    if (v.is_number()) return Expr::constant(v.get<double>());
    if (!v.is_string()) fail(where, "expected an expression string or number");
    const std::string source =
        substitute_parameters(v.get<std::string>(), ctx.parameters, ctx.substitutions);
    try {
        return parse_expression(source);
    } catch (const ParseError& e) {
        fail(where, std::string("expression error: ") + e.what());
    }
}

MatrixFunction parse_matrix(const json& v, int n, const ExprContext& ctx,
                            const std::string& where) {
    const json* rows = &v;
    std::optional<double> declared;
    if (v.is_object()) {
        rows = &need(v, "entries", where);
        if (v.contains("sup")) declared = v.at("sup").get<double>();
    }
    if (!rows->is_array() || static_cast<int>(rows->size()) != n)
        fail(where, "expected " + std::to_string(n) + " rows");
    MatrixFunction f;
    f.n = n;
    f.declared_sup = declared;
    f.entries.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        const json& row = (*rows)[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            fail(where + "[" + std::to_string(i) + "]",
                 "expected " + std::to_string(n) + " columns");
        for (int j = 0; j < n; ++j)
            f.entries.push_back(parse_entry(row[static_cast<std::size_t>(j)], ctx,
                                            where + "[" + std::to_string(i) + "][" +
                                                std::to_string(j) + "]"));
    }
    return f;
}

Mat parse_constant_matrix(const json& v, int n, const std::string& where) {
    if (!v.is_array() || static_cast<int>(v.size()) != n)
        fail(where, "expected " + std::to_string(n) + " rows of numbers");
    Mat m(n);
    for (int i = 0; i < n; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            fail(where, "expected " + std::to_string(n) + " columns of numbers");
        for (int j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

std::vector<ExprPtr> parse_vector(const json& v, int n, const ExprContext& ctx,
                                  const std::string& where) {
    if (!v.is_array() || static_cast<int>(v.size()) != n)
        fail(where, "expected a vector of length " + std::to_string(n));
    std::vector<ExprPtr> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(parse_entry(v[static_cast<std::size_t>(i)], ctx,
                                  where + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace

nlohmann::ordered_json read_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return doc;
}

RunConfig config_from_json(const json& doc, const LoadOptions& opts) {
    RunConfig cfg;
    ExprContext ctx;
    ctx.substitutions = &cfg.substitution_count;
    if (doc.contains("parameters")) {
        for (const auto& [name, value] : doc.at("parameters").items()) {
            if (!value.is_number()) fail("parameters." + name, "expected a number");
            ctx.parameters[name] = value.get<double>();
        }
    }
    for (const auto& [name, value] : opts.parameter_overrides) ctx.parameters[name] = value;

    const json& sys = need(doc, "system", "config");
    const int n = static_cast<int>(need_number(sys, "n", "system"));
    if (n < 1) fail("system.n", "dimension must be >= 1");
    cfg.system.n = n;
    cfg.system.t0 = sys.contains("t0") ? sys.at("t0").get<double>() : 0.0;
    cfg.system.A = parse_matrix(need(sys, "A", "system"), n, ctx, "system.A");

    const json& g = need(sys, "g", "system");
    cfg.system.g.h = parse_entry(need(g, "h", "system.g"), ctx, "system.g.h");
    cfg.system.g.tau = need_number(g, "sigma", "system.g");

    const json& terms = need(sys, "terms", "system");
    if (!terms.is_array() || terms.empty()) fail("system.terms", "expected a non-empty array");
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const std::string where = "system.terms[" + std::to_string(k) + "]";
        const json& term = terms[k];
        DelayTerm out;
        out.B = parse_matrix(need(term, "B", where), n, ctx, where + ".B");
        out.h.h = parse_entry(need(term, "h", where), ctx, where + ".h");
        out.h.tau = need_number(term, "tau", where);
        if (out.h.tau < 0.0) fail(where + ".tau", "lag bound must be >= 0");
        cfg.system.terms.push_back(std::move(out));
    }
    if (sys.contains("f") && !sys.at("f").is_null())
        cfg.system.f = parse_vector(sys.at("f"), n, ctx, "system.f");

    if (doc.contains("initial") && !doc.at("initial").is_null()) {
        const json& init = doc.at("initial");
        InitialData data;
        data.phi = parse_vector(need(init, "phi", "initial"), n, ctx, "initial.phi");
        if (init.contains("psi") && !init.at("psi").is_null())
            data.psi = parse_vector(init.at("psi"), n, ctx, "initial.psi");
        cfg.initial = std::move(data);
    }

    if (doc.contains("declared_bounds") && !doc.at("declared_bounds").is_null()) {
        const json& d = doc.at("declared_bounds");
        DeclaredBounds& out = cfg.certify.declared;
        if (d.contains("A_sup")) out.A_sup = d.at("A_sup").get<double>();
        if (d.contains("Bk_sup")) {
            for (const auto& v : d.at("Bk_sup"))
                out.Bk_sup.push_back(v.is_null() ? std::optional<double>{}
                                                 : std::optional<double>{v.get<double>()});
            if (out.Bk_sup.size() != cfg.system.terms.size())
                fail("declared_bounds.Bk_sup", "expected one entry per delayed term");
        }
        if (d.contains("B_sum_sup")) out.B_sum_sup = d.at("B_sum_sup").get<double>();
        if (d.contains("mu_B_sup")) out.mu_B_sup = d.at("mu_B_sup").get<double>();
        if (d.contains("domination")) {
            const json& dom = d.at("domination");
            if (dom.contains("A_bar"))
                out.A_bar = parse_constant_matrix(dom.at("A_bar"), n, "domination.A_bar");
            if (dom.contains("Bk_bar")) {
                const json& bars = dom.at("Bk_bar");
                if (!bars.is_array() || bars.size() != cfg.system.terms.size())
                    fail("domination.Bk_bar", "expected one matrix per delayed term");
                for (std::size_t k = 0; k < bars.size(); ++k)
                    out.Bk_bar.push_back(parse_constant_matrix(
                        bars[k], n, "domination.Bk_bar[" + std::to_string(k) + "]"));
            }
            if (dom.contains("B_bar"))
                out.B_bar = parse_constant_matrix(dom.at("B_bar"), n, "domination.B_bar");
        }
        // Keep the per-matrix declared sups in sync with the declared map.
        if (out.A_sup) cfg.system.A.declared_sup = out.A_sup;
        for (std::size_t k = 0; k < out.Bk_sup.size(); ++k)
            if (out.Bk_sup[k]) cfg.system.terms[k].B.declared_sup = out.Bk_sup[k];
    }

    SamplingPolicy& sampling = cfg.certify.sampling;
    if (opts.default_samples) sampling.samples = *opts.default_samples;
    if (doc.contains("sampling") && !doc.at("sampling").is_null()) {
        const json& s = doc.at("sampling");
        if (s.contains("window_length")) sampling.window_length = s.at("window_length").get<double>();
        if (s.contains("samples")) sampling.samples = s.at("samples").get<int>();
        if (s.contains("period")) sampling.period = s.at("period").get<double>();
    }
    if (sampling.samples < 2) fail("sampling.samples", "need at least 2 samples");

    if (doc.contains("norm") && !doc.at("norm").is_null()) {
        try {
            cfg.certify.norm = parse_norm_name(doc.at("norm").get<std::string>());
        } catch (const Error& e) {
            fail("norm", e.what());
        }
    }

    if (doc.contains("simulation") && !doc.at("simulation").is_null()) {
        const json& s = doc.at("simulation");
        SimulationSettings sim;
        sim.step = need_number(s, "step", "simulation");
        sim.t_end = need_number(s, "t_end", "simulation");
        if (!(sim.step > 0.0)) fail("simulation.step", "must be positive");
        cfg.simulation = sim;
    }

    if (doc.contains("options") && !doc.at("options").is_null()) {
        const json& o = doc.at("options");
        if (o.contains("prop1_alternate_numerator"))
            cfg.certify.prop1_alternate_numerator = o.at("prop1_alternate_numerator").get<bool>();
    }
    return cfg;
}

RunConfig load_config(const std::string& path, const LoadOptions& opts) {
    return config_from_json(read_config_json(path), opts);
}

}  // namespace ncert
