#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef NCERT_CLI_BIN
#error "NCERT_CLI_BIN must be defined"
#endif
#ifndef NCERT_FIXTURES_DIR
#error "NCERT_FIXTURES_DIR must be defined"
#endif

namespace {

using json = nlohmann::ordered_json;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string out_path = "cli_stdout_" + std::to_string(counter) + ".txt";
    const std::string err_path = "cli_stderr_" + std::to_string(counter) + ".txt";
    ++counter;
    const std::string cmd =
        std::string(NCERT_CLI_BIN) + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return r;
}

std::string fixture(const std::string& name) {
    return std::string(NCERT_FIXTURES_DIR) + "/" + name;
}

std::string write_temp_config(const std::string& name, const json& doc) {
    std::ofstream out(name);
    out << doc.dump(2);
    return name;
}

json scalar_ode_config() {
    return json::parse(R"({
      "norm": "inf",
      "system": {
        "n": 1, "t0": 0.0,
        "A": [["0"]],
        "g": {"h": "t", "sigma": 0.0},
        "terms": [{"B": [["-1"]], "h": "t", "tau": 0.0}]
      },
      "initial": {"phi": ["1"], "psi": ["0"]},
      "sampling": {"samples": 101, "window_length": 10.0},
      "simulation": {"step": 0.001, "t_end": 1.0}
    })");
}

}  // namespace

TEST_CASE("certify exit codes") {
    CHECK(run_cli("certify " + fixture("example2.json") + " --test thm32").exit_code == 0);
    CHECK(run_cli("certify " + fixture("example410.json") + " --set nu=0.2").exit_code == 1);
    CHECK(run_cli("certify " + fixture("example410.json")).exit_code == 0);  // default nu = 0.05

    // explicitly requesting an inapplicable test is an error
    CHECK(run_cli("certify " + fixture("example2.json") + " --test cor410").exit_code == 2);
    CHECK(run_cli("certify no_such_file.json").exit_code == 2);
}

TEST_CASE("certify report structure") {
    const RunResult r = run_cli("certify " + fixture("example2.json") + " --test thm32");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("command") == "certify");
    CHECK(report.at("validation").at("passed") == true);
    const json& test = report.at("tests").at(0);
    CHECK(test.at("id") == "thm32");
    CHECK(test.at("verdict") == "certified");
    CHECK(test.at("constants").at("lhs_thm32").at("value").get<double>() < 1.0);
    // every constant is traceable
    for (const auto& [name, c] : test.at("constants").items()) {
        CAPTURE(name);
        REQUIRE(c.contains("provenance"));
        CHECK(c.at("provenance").contains("method"));
    }
}

TEST_CASE("malformed expression reports entry coordinates") {
    json doc = scalar_ode_config();
    doc["system"]["terms"][0]["B"][0][0] = "1 +";
    const std::string path = write_temp_config("cli_bad_expr.json", doc);
    const RunResult r = run_cli("certify " + path);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("terms[0].B[0][0]") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("reports are byte-identical across runs") {
    const std::string cmd = "certify " + fixture("example2.json");
    CHECK(run_cli(cmd).out == run_cli(cmd).out);
    const std::string bound_cmd = "bound " + fixture("example2.json") + " --lambda 0.06";
    CHECK(run_cli(bound_cmd).out == run_cli(bound_cmd).out);
}

TEST_CASE("bound with a fixed rate reproduces the reference coefficients") {
    const RunResult r = run_cli("bound " + fixture("example2.json") + " --lambda 0.06");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    const json& bound = report.at("bound");
    CHECK(std::fabs(bound.at("c_psi").get<double>() - 0.00102) / 0.00102 < 0.01);
    double phi_sum = 0.0;
    for (const auto& v : bound.at("c_phi")) phi_sum += v.get<double>();
    CHECK(std::fabs(phi_sum - 0.102) / 0.102 < 0.01);
    CHECK(std::fabs(bound.at("c_f").get<double>() - 33.6) / 33.6 < 0.01);
    CHECK(report.at("certificate").at("constants").at("M0").at("value").get<double>() <= 2.0);
}

TEST_CASE("bound --optimize finds at least the hand-picked rate") {
    const RunResult r = run_cli("bound " + fixture("example2.json") + " --optimize");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("lambda_star").get<double>() >= 0.06);
}

TEST_CASE("bound --optimize approaches the delay-free limit") {
    const std::string path = write_temp_config("cli_ode.json", scalar_ode_config());
    const RunResult r = run_cli("bound " + path + " --optimize");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("lambda_star").get<double>() == doctest::Approx(1.0).epsilon(1e-4));
    std::remove(path.c_str());
}

TEST_CASE("bound reports failure when nothing certifies") {
    const RunResult r =
        run_cli("bound " + fixture("example410.json") + " --set nu=0.2 --optimize");
    CHECK(r.exit_code == 1);
    const json report = json::parse(r.out);
    CHECK(report.contains("error"));
}

TEST_CASE("simulate writes the trajectory csv") {
    json doc = json::parse(R"({
      "system": {
        "n": 1, "t0": 0.0,
        "A": [["0.5"]],
        "g": {"h": "t - 1", "sigma": 1.0},
        "terms": [{"B": [["0"]], "h": "t", "tau": 0.0}]
      },
      "initial": {"phi": ["0"], "psi": ["1"]},
      "sampling": {"samples": 101, "window_length": 10.0},
      "simulation": {"step": 0.001, "t_end": 1.0}
    })");
    const std::string path = write_temp_config("cli_neutral.json", doc);
    const RunResult r = run_cli("simulate " + path + " --out cli_neutral.csv");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("final_norm").get<double>() == doctest::Approx(0.5).epsilon(1e-9));

    std::ifstream csv("cli_neutral.csv");
    std::string line, last;
    std::getline(csv, line);
    CHECK(line == "t,x1,xd1");
    while (std::getline(csv, line))
        if (!line.empty()) last = line;
    CHECK(last.substr(0, 2) == "1,");
    CHECK(std::stod(last.substr(2)) == doctest::Approx(0.5).epsilon(1e-9));
    std::remove(path.c_str());
    std::remove("cli_neutral.csv");
}

TEST_CASE("simulate the oscillating reference system decays") {
    const RunResult r =
        run_cli("simulate " + fixture("example2.json") + " --out cli_ex2.csv");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("t_end").get<double>() == doctest::Approx(50.0));
    CHECK(report.at("final_norm").get<double>() < 1e-3);  // started at norm 1
    std::remove("cli_ex2.csv");
}

TEST_CASE("simulate with zero data produces zero columns") {
    json doc = scalar_ode_config();
    doc["initial"]["phi"] = {"0"};
    const std::string path = write_temp_config("cli_zero.json", doc);
    const RunResult r = run_cli("simulate " + path + " --out cli_zero.csv");
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out).at("final_norm").get<double>() == 0.0);
    std::ifstream csv("cli_zero.csv");
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        const auto first_comma = line.find(',');
        CHECK(line.substr(first_comma + 1) == "0,0");
    }
    std::remove(path.c_str());
    std::remove("cli_zero.csv");
}

TEST_CASE("verify checks the bound against the trajectory") {
    const RunResult r = run_cli("verify " + fixture("example2.json") + " --lambda 0.06");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("bound_check").at("max_ratio").get<double>() <= 1.0);
    CHECK(report.at("bound_check").at("first_violation").is_null());

    // an uncertifiable system exits before simulating (no --lambda: the rate
    // search runs and finds nothing)
    const RunResult bad = run_cli("verify " + fixture("example410.json") + " --set nu=0.2");
    CHECK(bad.exit_code == 1);
    CHECK(json::parse(bad.out).contains("error"));
}

TEST_CASE("sweep reproduces both amplitude thresholds") {
    const RunResult r = run_cli("sweep " + fixture("example410.json") +
                                " --param nu --range 0.01:0.2 --points 39 --refine"
                                " --out cli_sweep.csv");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    double th32 = 0.0, th32a = 0.0;
    for (const auto& th : report.at("thresholds")) {
        if (th.at("test") == "thm32") th32 = th.at("value").get<double>();
        if (th.at("test") == "thm32a") th32a = th.at("value").get<double>();
    }
    CHECK(std::fabs(th32 - 1.0 / 16.5) < 1e-4);
    CHECK(std::fabs(th32a - 1.0 / 8.2) < 1e-4);

    std::ifstream csv("cli_sweep.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "nu,thm32_verdict,thm32_margin,thm32a_verdict,thm32a_margin");
    int rows = 0, thresholds = 0;
    std::string line;
    while (std::getline(csv, line)) {
        if (line.rfind("# threshold", 0) == 0)
            ++thresholds;
        else if (!line.empty())
            ++rows;
    }
    CHECK(rows == 39);
    CHECK(thresholds == 2);
    std::remove("cli_sweep.csv");
}

TEST_CASE("sweep over a range below both thresholds certifies every row") {
    const RunResult r = run_cli("sweep " + fixture("example410.json") +
                                " --param nu --range 0.01:0.05 --points 9 --out cli_low.csv");
    REQUIRE(r.exit_code == 0);
    std::ifstream csv("cli_low.csv");
    std::string line;
    std::getline(csv, line);
    int certified = 0, rows = 0;
    while (std::getline(csv, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++rows;
        if (line.find("not_certified") == std::string::npos) ++certified;
    }
    CHECK(rows == 9);
    CHECK(certified == 9);
    std::remove("cli_low.csv");
}

TEST_CASE("sampling density can come from the environment") {
    json doc = scalar_ode_config();
    doc.erase("sampling");  // no explicit density: the env fallback applies
    const std::string path = write_temp_config("cli_env.json", doc);
    const std::string cmd = std::string("NCERT_SAMPLES=11 ") + NCERT_CLI_BIN + " certify " +
                            path + " --test thm32 > cli_env_out.txt 2> /dev/null";
    REQUIRE(std::system(cmd.c_str()) != -1);
    const json report = json::parse(slurp("cli_env_out.txt"));
    const json& sup = report.at("tests").at(0).at("constants").at("B1_sup");
    CHECK(sup.at("provenance").at("method") == "sampled");
    CHECK(sup.at("provenance").at("samples").get<int>() == 11);
    std::remove(path.c_str());
    std::remove("cli_env_out.txt");
}

TEST_CASE("sweep rejects unused parameters") {
    const RunResult r = run_cli("sweep " + fixture("example2.json") +
                                " --param nu --range 0.01:0.2 --points 5");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("does not appear") != std::string::npos);
}
