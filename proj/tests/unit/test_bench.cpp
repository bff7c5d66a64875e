#include "seqcmc/bench/config.hpp"
#include "seqcmc/bench/emit.hpp"
#include "seqcmc/bench/experiment.hpp"
#include "seqcmc/bench/truth.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

using namespace seqcmc;
using namespace seqcmc::bench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json scenario(const std::string& file) {
    std::ifstream in(fs::path(SEQCMC_SCENARIO_DIR) / file);
    REQUIRE(in.good());
    return json::parse(in);
}

/// A shipped scenario cut down to a few short repetitions without timing.
json small(const std::string& file, int horizon, int repetitions) {
    json j = scenario(file);
    j["horizon"] = horizon;
    j["repetitions"] = repetitions;
    j["timing"] = false;
    if (j.at("kind") == "phd") {
        auto& targets = j["model"]["targets"];
        json kept = json::array();
        for (const auto& t : targets) {
            if (t.at("birth_step").get<int>() < horizon) kept.push_back(t);
        }
        targets = kept;
    }
    return j;
}

json set_particles(json j, int n) {
    for (auto& f : j["filters"]) {
        if (f.contains("particles")) f["particles"] = n;
        if (f.contains("particles_per_target")) f["particles_per_target"] = n;
    }
    return j;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string header_of(const std::string& csv) { return csv.substr(0, csv.find('\n')); }

/// Fresh scratch directory under the system temp dir.
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("seqcmc_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_json(const fs::path& dir, const std::string& name, const json& j) {
    const fs::path path = dir / name;
    std::ofstream(path) << j.dump(2);
    return path;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SEQCMC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_SUITE("bench") {

TEST_CASE("shipped scenarios parse") {
    for (const auto* file : {"gaussian.json", "arch.json", "sv_sigma018.json", "sv_sigma04.json", "jmss_a.json",
                             "jmss_b.json", "phd.json"}) {
        CAPTURE(file);
        CHECK_NOTHROW((void)load_config(fs::path(SEQCMC_SCENARIO_DIR) / file));
    }
}

TEST_CASE("shipped constants") {
    const auto jmss = parse_config(scenario("jmss_a.json"));
    CHECK(jmss.jmss_model.stay == 0.4);
    REQUIRE(jmss.jmss_model.omegas.size() == 3);
    CHECK(jmss.jmss_model.omegas[1] == doctest::Approx(3.0 * std::numbers::pi / 180.0).epsilon(1e-15));
    CHECK(jmss.jmss_model.omegas[2] == doctest::Approx(-3.0 * std::numbers::pi / 180.0).epsilon(1e-15));
    const auto phd = parse_config(scenario("phd.json"));
    CHECK(phd.phd_model.p_d == 0.95);
    CHECK(phd.phd_model.p_s == 0.98);
    CHECK(phd.phd_model.clutter_rate == 10.0);
    CHECK(phd.phd_model.sigma_xy == 0.3);
    CHECK(phd.ospa.c == 100.0);
    CHECK(phd.ospa.p == 1.0);
    const auto gaussian = parse_config(scenario("gaussian.json"));
    CHECK(gaussian.repetitions == 200);
    CHECK(gaussian.seeds.size() == 200);
}

TEST_CASE("config errors are reported") {
    auto rejects = [](json j) { CHECK_THROWS_AS((void)parse_config(j), ConfigError); };
    json j = scenario("gaussian.json");
    j["unknown_key"] = 1;
    rejects(j);
    j = scenario("gaussian.json");
    j["kind"] = "quantum";
    rejects(j);
    j = scenario("gaussian.json");
    j["repetitions"] = 0;
    rejects(j);
    j = scenario("gaussian.json");
    j["horizon"] = 0;
    rejects(j);
    j = scenario("gaussian.json");
    j.erase("filters");
    rejects(j);
    j = scenario("gaussian.json");
    j["filters"][1]["particles"] = 0;
    rejects(j);
    j = scenario("gaussian.json");
    j["filters"][2]["name"] = "sir";
    rejects(j);
    j = scenario("gaussian.json");
    j["model"]["R"] = -1.0;
    rejects(j);
    j = scenario("gaussian.json");
    j["output"]["format"] = "xml";
    rejects(j);
    j = scenario("sv_sigma04.json");
    j["filters"][0]["algorithm"] = "kalman";
    rejects(j);
    j = scenario("phd.json");
    j["model"]["targets"][0]["site"] = 7;
    rejects(j);
    j = scenario("phd.json");
    j["model"]["p_d"] = 1.5;
    rejects(j);
    CHECK_THROWS_AS((void)load_config("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("seed lists") {
    CHECK(parse_seed_list("3,1,4") == std::vector<std::uint64_t>{3, 1, 4});
    CHECK(parse_seed_list("18446744073709551615") == std::vector<std::uint64_t>{18446744073709551615ULL});
    CHECK_THROWS_AS((void)parse_seed_list(""), ConfigError);
    CHECK_THROWS_AS((void)parse_seed_list("1,,2"), ConfigError);
    CHECK_THROWS_AS((void)parse_seed_list("-1"), ConfigError);
    CHECK_THROWS_AS((void)parse_seed_list("1,x"), ConfigError);
}

TEST_CASE("efficiency and time averages") {
    CHECK(efficiency(2.0, 0.5) == 1.0);
    CHECK(std::isnan(efficiency(0.0, 0.5)));
    CHECK(std::isnan(efficiency(2.0, 0.0)));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(time_average({1.0, nan, 3.0}) == 2.0);
    CHECK(time_average({1.0, 2.0, 3.0, 4.0}, 2) == 3.5);
    CHECK(time_average({1.0, 2.0, 3.0, 4.0}, 0, 2) == 1.5);
    CHECK(std::isnan(time_average({})));
}

TEST_CASE("number formatting round-trips") {
    for (const double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) {
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()).empty());
}

TEST_CASE("truth is a deterministic function of the seed") {
    for (const auto* file : {"gaussian.json", "jmss_a.json", "phd.json"}) {
        CAPTURE(file);
        const auto config = parse_config(small(file, 20, 1));
        const auto a = generate_truth(config, 11);
        const auto b = generate_truth(config, 11);
        const auto c = generate_truth(config, 12);
        REQUIRE(a.states.size() == 20);
        REQUIRE(a.measurements.size() == 20);
        bool same = true;
        bool differs = false;
        for (std::size_t n = 0; n < a.states.size(); ++n) {
            same = same && a.measurements[n].size() == b.measurements[n].size();
            for (std::size_t k = 0; same && k < a.measurements[n].size(); ++k) {
                same = a.measurements[n][k] == b.measurements[n][k];
            }
            if (a.measurements[n].size() != c.measurements[n].size() ||
                (!a.measurements[n].empty() && a.measurements[n][0] != c.measurements[n][0])) {
                differs = true;
            }
        }
        CHECK(same);
        CHECK(differs);
    }
}

TEST_CASE("multi-target truth follows the schedule") {
    const auto config = parse_config(small("phd.json", 100, 1));
    const auto tape = generate_truth(config, 5);
    CHECK(tape.states[0].size() == 2);
    CHECK(tape.states[19].size() == 2);
    CHECK(tape.states[20].size() == 4);
    CHECK(tape.states[49].size() == 4);
    CHECK(tape.states[50].size() == 6);
    CHECK(tape.states[99].size() == 6);
    // Mean clutter of 10 per scan plus detections with p_d = 0.95.
    double total = 0.0;
    for (const auto& z : tape.measurements) total += static_cast<double>(z.size());
    const double expected = 100 * 10.0 + 0.95 * (2 * 20 + 4 * 30 + 6 * 50);
    CHECK(std::abs(total - expected) < 5.0 * std::sqrt(expected));
}

TEST_CASE("single particle sanity run emits one row per step") {
    json j = set_particles(small("gaussian.json", 12, 1), 1);
    const auto config = parse_config(j);
    const auto result = run_experiment(config);
    CHECK(result.steps.size() == 12);
    CHECK(result.steps.front() == 1);
    CHECK(result.metadata.runs_used == 1);
    const auto csv = to_csv(result);
    const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 1 + 12 * result.estimators.size());
    for (const auto& s : result.estimators) {
        REQUIRE(s.mse.size() == 12);
        for (const double v : s.mse) CHECK(v >= 0.0);
    }
}

TEST_CASE("Kalman estimate has the smallest error on the linear scenario") {
    const auto result = run_experiment(parse_config(set_particles(small("gaussian.json", 30, 20), 200)));
    const auto& kalman = result.series("kalman");
    for (const auto& s : result.estimators) {
        for (std::size_t n = 0; n < kalman.mse.size(); ++n) CHECK(kalman.mse[n] <= s.mse[n]);
    }
}

TEST_CASE("csv columns depend on the experiment") {
    auto single = parse_config(small("gaussian.json", 5, 2));
    CHECK(header_of(to_csv(run_experiment(single))) == "step,estimator,mse");
    single.timing = true;
    CHECK(header_of(to_csv(run_experiment(single))) == "step,estimator,mse,cost_s,efficiency");
    const auto multi = parse_config(set_particles(small("phd.json", 5, 2), 20));
    const auto result = run_experiment(multi);
    CHECK(header_of(to_csv(result)) == "step,estimator,ospa_mean,ospa_sd,count_mean,count_sd");
    CHECK(result.steps.front() == 0);
}

TEST_CASE("json metadata records the decisions in force") {
    const auto config = parse_config(set_particles(small("phd.json", 4, 2), 20));
    const auto doc = json::parse(to_json(run_experiment(config)));
    const auto& meta = doc.at("metadata");
    CHECK(meta.at("seeds").size() == 2);
    CHECK(meta.at("runs_used") == 2);
    CHECK(meta.contains("git_revision"));
    const auto& decisions = meta.at("decisions");
    CHECK(decisions.at("resampling").get<std::string>().find("multinomial") != std::string::npos);
    CHECK(decisions.contains("birth_placement.smc"));
    CHECK(decisions.contains("birth_placement.cmc"));
    CHECK(decisions.contains("birth_placement.gm"));
    CHECK(doc.at("estimators").size() == 3);
    CHECK(doc.at("estimators")[0].at("ospa_mean").size() == 4);
}

TEST_CASE("identical config and seeds give identical bytes") {
    for (const auto* file : {"gaussian.json", "jmss_a.json", "phd.json"}) {
        CAPTURE(file);
        const auto config = parse_config(set_particles(small(file, 6, 3), 30));
        const auto a = run_experiment(config, {1});
        const auto b = run_experiment(config, {3});
        CHECK(to_csv(a) == to_csv(b));
        CHECK(to_json(a) == to_json(b));
    }
}

TEST_CASE("emission writes the named file and rejects bad paths") {
    const auto dir = scratch("emit");
    const auto result = run_experiment(parse_config(small("gaussian.json", 3, 1)));
    const auto path = emit_results(result, OutputFormat::json, dir / "nested");
    CHECK(path == dir / "nested" / "gaussian.json");
    CHECK(slurp(path) == to_json(result));
    std::ofstream(dir / "file") << "x";
    CHECK_THROWS_AS(prepare_output_dir(dir / "file" / "sub"), EmitError);
}

} // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("runs, overrides and exit codes") {
    REQUIRE(std::string(SEQCMC_CLI_PATH).size() > 0);
    const auto dir = scratch("cli");
    const auto config = write_json(dir, "gaussian.json", set_particles(small("gaussian.json", 8, 2), 50));

    CHECK(run_cli("single --config " + config.string() + " --out " + (dir / "a").string()) == 0);
    CHECK(run_cli("single --config " + config.string() + " --out " + (dir / "b").string()) == 0);
    const auto first = slurp(dir / "a" / "gaussian.csv");
    CHECK(!first.empty());
    CHECK(first == slurp(dir / "b" / "gaussian.csv"));

    CHECK(run_cli("single --config " + config.string() + " --out " + (dir / "c").string() +
                  " --format json --seeds 7,8,9") == 0);
    const auto doc = json::parse(slurp(dir / "c" / "gaussian.json"));
    CHECK(doc.at("metadata").at("seeds") == json({7, 8, 9}));

    CHECK(run_cli("validate --config " + config.string()) == 0);
    CHECK(run_cli("jmss --config " + config.string() + " --out " + (dir / "d").string()) == 2);
    CHECK(run_cli("single --config " + config.string() + " --seeds 1,x") == 2);
    CHECK(run_cli("single --config " + config.string() + " --format xml") == 2);
    CHECK(run_cli("single --config " + (dir / "missing.json").string()) == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("") == 2);

    json broken = small("gaussian.json", 8, 2);
    broken["filters"][1]["particles"] = 0;
    CHECK(run_cli("validate --config " + write_json(dir, "broken.json", broken).string()) == 2);

    std::ofstream(dir / "plain") << "x";
    CHECK(run_cli("single --config " + config.string() + " --out " + (dir / "plain" / "sub").string()) == 1);
}

TEST_CASE("degenerate repetitions beyond the limit give exit code 3") {
    const auto dir = scratch("cli_degenerate");
    json j = small("gaussian.json", 5, 4);
    // With a subnormal observation variance every bootstrap log weight is -inf.
    j["model"]["R"] = 1e-320;
    j["filters"] = json::array({{{"name", "boot"}, {"algorithm", "bootstrap"}, {"particles", 10}}});
    const auto config = write_json(dir, "degenerate.json", j);
    CHECK(run_cli("single --config " + config.string() + " --out " + (dir / "out").string()) == 3);
    const auto result = run_experiment(parse_config(j));
    CHECK(result.metadata.runs_excluded == 4);
    CHECK(result.excluded_fraction() == 1.0);
}

} // TEST_SUITE
