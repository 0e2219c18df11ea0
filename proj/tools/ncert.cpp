#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncert/config.hpp"
#include "ncert/report.hpp"
#include "ncert/sweep.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitCertified = 0;
constexpr int kExitNotCertified = 1;
constexpr int kExitError = 2;

ncert::LoadOptions make_load_options(const std::vector<std::string>& sets) {
    ncert::LoadOptions opts;
    if (const char* env = std::getenv("NCERT_SAMPLES")) {
        const int v = std::atoi(env);
        if (v >= 2) opts.default_samples = v;
    }
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ncert::ConfigError("--set expects NAME=VALUE, got '" + s + "'");
        opts.parameter_overrides[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    }
    return opts;
}

void emit(const json& report, const std::string& out_path) {
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw ncert::Error("cannot write '" + out_path + "'");
        out << text;
    }
}

json base_report(const std::string& command, const std::string& config_path,
                 const ncert::RunConfig& cfg) {
    json report;
    report["command"] = command;
    report["config"] = config_path;
    report["norm"] = std::string(ncert::norm_name(cfg.certify.norm));
    return report;
}

// Validation failures short-circuit every command with exit 2.
bool check_validation(const ncert::RunConfig& cfg, json& report) {
    const ncert::ValidationReport v =
        ncert::validate(cfg.system, cfg.certify.sampling, cfg.certify.norm);
    report["validation"] = ncert::to_json(v);
    return v.passed;
}

std::vector<ncert::TestId> default_tests(const ncert::RunConfig& cfg, bool with_rate) {
    std::vector<ncert::TestId> ids;
    if (with_rate) {
        ids.push_back(ncert::TestId::thm31);
        ids.push_back(ncert::TestId::thm31a);
    }
    ids.push_back(ncert::TestId::thm32);
    ids.push_back(ncert::TestId::thm32a);
    ids.push_back(ncert::TestId::cor33a);
    ids.push_back(ncert::TestId::cor41);
    if (cfg.system.n == 1) ids.push_back(ncert::TestId::cor410);
    ids.push_back(ncert::TestId::prop1);
    ids.push_back(ncert::TestId::prop2);
    ids.push_back(ncert::TestId::prop3);
    return ids;
}

int cmd_certify(const std::string& config_path, const std::vector<std::string>& test_names,
                std::optional<double> lambda, const std::vector<std::string>& sets,
                const std::string& out_path) {
    ncert::RunConfig cfg = ncert::load_config(config_path, make_load_options(sets));
    cfg.certify.lambda = lambda;
    json report = base_report("certify", config_path, cfg);
    if (!check_validation(cfg, report)) {
        emit(report, out_path);
        return kExitError;
    }

    const bool explicit_selection = !test_names.empty();
    std::vector<ncert::TestId> ids;
    if (explicit_selection) {
        for (const auto& name : test_names) ids.push_back(ncert::parse_test_id(name));
    } else {
        ids = default_tests(cfg, lambda.has_value());
    }

    json tests = json::array();
    int applicable = 0, failed = 0, inapplicable = 0;
    for (ncert::TestId id : ids) {
        const ncert::Certificate cert = ncert::run_test(cfg.system, id, cfg.certify);
        tests.push_back(ncert::to_json(cert));
        if (cert.verdict == ncert::Verdict::inapplicable) {
            ++inapplicable;
        } else {
            ++applicable;
            if (cert.verdict != ncert::Verdict::certified) ++failed;
        }
    }
    report["tests"] = std::move(tests);

    int exit_code;
    if (explicit_selection && inapplicable > 0)
        exit_code = kExitError;
    else if (applicable == 0)
        exit_code = kExitError;
    else
        exit_code = failed == 0 ? kExitCertified : kExitNotCertified;
    report["exit_code"] = exit_code;
    emit(report, out_path);
    return exit_code;
}

int cmd_bound(const std::string& config_path, std::optional<double> lambda, bool optimize,
              double lambda_max, int grid_points, const std::vector<std::string>& sets,
              const std::string& out_path) {
    ncert::RunConfig cfg = ncert::load_config(config_path, make_load_options(sets));
    json report = base_report("bound", config_path, cfg);
    if (!check_validation(cfg, report)) {
        emit(report, out_path);
        return kExitError;
    }

    if (lambda && !optimize) {
        const ncert::Certificate cert = ncert::certify_with_rate(cfg.system, *lambda, cfg.certify);
        report["certificate"] = ncert::to_json(cert);
        if (cert.verdict != ncert::Verdict::certified) {
            report["exit_code"] = kExitNotCertified;
            emit(report, out_path);
            return kExitNotCertified;
        }
        report["bound"] = ncert::to_json(ncert::solution_bound(cfg.system, cert, cfg.certify.norm));
        report["exit_code"] = kExitCertified;
        emit(report, out_path);
        return kExitCertified;
    }

    try {
        const ncert::RateSearchResult r =
            ncert::max_decay_rate(cfg.system, cfg.certify, lambda_max, grid_points);
        report["lambda_star"] = r.lambda_star;
        report["certificate"] = ncert::to_json(r.certificate);
        report["bound"] = ncert::to_json(r.bound);
        report["exit_code"] = kExitCertified;
        emit(report, out_path);
        return kExitCertified;
    } catch (const ncert::NoCertifiableRate& e) {
        report["error"] = e.what();
        report["exit_code"] = kExitNotCertified;
        emit(report, out_path);
        return kExitNotCertified;
    }
}

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& sets,
                 const std::string& out_path) {
    ncert::RunConfig cfg = ncert::load_config(config_path, make_load_options(sets));
    json report = base_report("simulate", config_path, cfg);
    if (!cfg.simulation) throw ncert::ConfigError("config has no 'simulation' block");
    if (!cfg.initial) throw ncert::ConfigError("config has no 'initial' block");
    if (!check_validation(cfg, report)) {
        emit(report, "");
        return kExitError;
    }

    const ncert::Trajectory traj = ncert::integrate(cfg.system, *cfg.initial,
                                                    cfg.simulation->t_end, cfg.simulation->step);
    const std::string csv_path = out_path.empty() ? "trajectory.csv" : out_path;
    std::ofstream out(csv_path);
    if (!out) throw ncert::Error("cannot write '" + csv_path + "'");
    ncert::write_trajectory_csv(traj, out);

    const double final_norm =
        ncert::vector_norm(traj.x_at(traj.times.size() - 1), cfg.certify.norm);
    report["out"] = csv_path;
    report["t_end"] = traj.t_end();
    report["final_norm"] = final_norm;
    report["exit_code"] = kExitCertified;
    emit(report, "");
    return kExitCertified;
}

int cmd_verify(const std::string& config_path, std::optional<double> lambda, double lambda_max,
               int grid_points, const std::vector<std::string>& sets,
               const std::string& out_path) {
    ncert::RunConfig cfg = ncert::load_config(config_path, make_load_options(sets));
    json report = base_report("verify", config_path, cfg);
    if (!cfg.simulation) throw ncert::ConfigError("config has no 'simulation' block");
    if (!cfg.initial) throw ncert::ConfigError("config has no 'initial' block");
    if (!check_validation(cfg, report)) {
        emit(report, out_path);
        return kExitError;
    }

    ncert::Certificate cert;
    ncert::ExponentialBound bound;
    if (lambda) {
        cert = ncert::certify_with_rate(cfg.system, *lambda, cfg.certify);
        if (cert.verdict != ncert::Verdict::certified) {
            report["certificate"] = ncert::to_json(cert);
            report["exit_code"] = kExitNotCertified;
            emit(report, out_path);
            return kExitNotCertified;
        }
        bound = ncert::solution_bound(cfg.system, cert, cfg.certify.norm);
    } else {
        try {
            ncert::RateSearchResult r =
                ncert::max_decay_rate(cfg.system, cfg.certify, lambda_max, grid_points);
            cert = std::move(r.certificate);
            bound = std::move(r.bound);
            report["lambda_star"] = r.lambda_star;
        } catch (const ncert::NoCertifiableRate& e) {
            report["error"] = e.what();
            report["exit_code"] = kExitNotCertified;
            emit(report, out_path);
            return kExitNotCertified;
        }
    }
    report["certificate"] = ncert::to_json(cert);
    report["bound"] = ncert::to_json(bound);

    const ncert::Trajectory traj = ncert::integrate(cfg.system, *cfg.initial,
                                                    cfg.simulation->t_end, cfg.simulation->step);
    const ncert::DataNorms norms = ncert::compute_data_norms(cfg.system, *cfg.initial,
                                                             cfg.certify.norm,
                                                             cfg.certify.sampling.samples);
    const int samples = cfg.certify.sampling.samples;
    const auto sampled_over = [&](double lo, double hi) {
        return ncert::to_json(ncert::Provenance::sampled({lo, hi}, samples));
    };
    json data_norms;
    data_norms["x0"] = {{"value", norms.x0},
                        {"provenance", ncert::to_json(ncert::Provenance::computed({"phi(t0)"}))}};
    data_norms["psi"] = {{"value", norms.psi},
                         {"provenance", sampled_over(cfg.system.t0 - cfg.system.sigma(),
                                                     cfg.system.t0)}};
    json phis = json::array();
    for (std::size_t k = 0; k < norms.phi.size(); ++k)
        phis.push_back({{"value", norms.phi[k]},
                        {"provenance", sampled_over(cfg.system.t0 - cfg.system.terms[k].h.tau,
                                                    cfg.system.t0)}});
    data_norms["phi"] = std::move(phis);
    report["data_norms"] = std::move(data_norms);

    const ncert::BoundCheck check =
        ncert::verify_bound(traj, cfg.system, bound, norms, cfg.certify.norm);
    report["bound_check"] = ncert::to_json(check);
    const int exit_code = check.first_violation ? kExitNotCertified : kExitCertified;
    report["exit_code"] = exit_code;
    emit(report, out_path);
    return exit_code;
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& range,
              int points, bool refine, const std::vector<std::string>& test_names,
              std::optional<double> lambda, const std::vector<std::string>& sets,
              const std::string& out_path) {
    const auto colon = range.find(':');
    if (colon == std::string::npos)
        throw ncert::ConfigError("--range expects LO:HI, got '" + range + "'");
    ncert::SweepSpec spec;
    spec.parameter = param;
    spec.lo = std::stod(range.substr(0, colon));
    spec.hi = std::stod(range.substr(colon + 1));
    spec.points = points;
    spec.refine = refine;
    spec.lambda = lambda;
    if (!test_names.empty()) {
        spec.tests.clear();
        for (const auto& name : test_names) spec.tests.push_back(ncert::parse_test_id(name));
    }

    const json doc = ncert::read_config_json(config_path);
    const ncert::SweepResult result = ncert::run_sweep(doc, spec, make_load_options(sets));

    const std::string csv_path = out_path.empty() ? "sweep.csv" : out_path;
    std::ofstream out(csv_path);
    if (!out) throw ncert::Error("cannot write '" + csv_path + "'");
    ncert::write_sweep_csv(result, out);

    json report;
    report["command"] = "sweep";
    report["config"] = config_path;
    report["parameter"] = param;
    report["rows"] = result.rows.size();
    report["out"] = csv_path;
    json thresholds = json::array();
    for (const auto& th : result.thresholds)
        thresholds.push_back({{"test", std::string(ncert::test_id_name(th.test))},
                              {"value", th.value},
                              {"certified_below", th.certified_below}});
    report["thresholds"] = std::move(thresholds);
    report["exit_code"] = kExitCertified;
    emit(report, "");
    return kExitCertified;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stability certificates and solution bounds for linear neutral delay systems"};
    app.require_subcommand(1);

    std::string config_path, out_path, param, range;
    std::vector<std::string> test_names, sets;
    std::optional<double> lambda;
    bool optimize = false, refine = false;
    double lambda_max = 2.0;
    int grid_points = 24, points = 21;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "JSON config file")->required();
        sub->add_option("--set", sets, "substitute a named parameter, NAME=VALUE")
            ->take_all();
        sub->add_option("--out", out_path, "output path");
    };

    CLI::App* certify = app.add_subcommand("certify", "run stability tests");
    add_common(certify);
    certify->add_option("--test", test_names, "test ids to run (default: all applicable)")
        ->take_all();
    certify->add_option("--lambda", lambda, "decay rate for the rate-based tests");

    CLI::App* bound = app.add_subcommand("bound", "compute an exponential solution bound");
    add_common(bound);
    bound->add_option("--lambda", lambda, "use this decay rate");
    bound->add_flag("--optimize", optimize, "search for the best certifiable rate");
    bound->add_option("--lambda-max", lambda_max, "upper end of the rate search grid");
    bound->add_option("--grid-points", grid_points, "rate search grid size");

    CLI::App* simulate = app.add_subcommand("simulate", "integrate the initial value problem");
    add_common(simulate);

    CLI::App* verify = app.add_subcommand("verify", "check the bound against a trajectory");
    add_common(verify);
    verify->add_option("--lambda", lambda, "use this decay rate (default: optimize)");
    verify->add_option("--lambda-max", lambda_max, "upper end of the rate search grid");
    verify->add_option("--grid-points", grid_points, "rate search grid size");

    CLI::App* sweep = app.add_subcommand("sweep", "evaluate certificates over a parameter range");
    add_common(sweep);
    sweep->add_option("--param", param, "parameter name")->required();
    sweep->add_option("--range", range, "LO:HI")->required();
    sweep->add_option("--points", points, "grid points");
    sweep->add_flag("--refine", refine, "bisect verdict flips to 1e-6");
    sweep->add_option("--test", test_names, "test ids (default: thm32 thm32a)")->take_all();
    sweep->add_option("--lambda", lambda, "decay rate for rate-based tests");

    CLI11_PARSE(app, argc, argv);

    try {
        if (certify->parsed())
            return cmd_certify(config_path, test_names, lambda, sets, out_path);
        if (bound->parsed())
            return cmd_bound(config_path, lambda, optimize, lambda_max, grid_points, sets,
                             out_path);
        if (simulate->parsed()) return cmd_simulate(config_path, sets, out_path);
        if (verify->parsed())
            return cmd_verify(config_path, lambda, lambda_max, grid_points, sets, out_path);
        if (sweep->parsed())
            return cmd_sweep(config_path, param, range, points, refine, test_names, lambda, sets,
                             out_path);
    } catch (const ncert::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
