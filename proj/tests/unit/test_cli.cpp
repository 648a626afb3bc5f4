#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string output;
};

Outcome run(const std::string& args) {
    const std::string cmd = std::string(HJBCTL_PATH) + " " + args + " 2>&1";
    Outcome o;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return o;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, p)) o.output += buf;
    const int status = pclose(p);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("hjbctl_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const std::string kSmall = R"(schema = 1
seed = 5

[model]
kind = "heat"
modes = 16
projection = [[1.0]]

[problem]
grid_nodes = 9
gh_order = 8
time_nodes = 48

[simulation]
dt = 2e-3
paths = 200

[verify]
constant_policies = 2
initial_states = 1
)";

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "run.toml";
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(Cli, MissingConfigNamesThePath) {
    const Outcome o = run("solve --config /nonexistent/run.toml --out /tmp");
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.output.find("/nonexistent/run.toml"), std::string::npos) << o.output;
}

TEST(Cli, UnknownOptionIsAUsageError) {
    EXPECT_EQ(run("solve --bogus").code, 2);
}

TEST(Cli, EstimatesWriteTablesAndManifest) {
    const fs::path d = scratch("estimates");
    const Outcome o = run("estimates --config " HJBS_CONFIG_DIR "/wave_default.toml --t-min 1e-4 --t-max 1e-2 --samples 10 --quiet --out " + d.string());
    ASSERT_EQ(o.code, 0) << o.output;
    EXPECT_TRUE(fs::exists(d / "estimates.csv"));
    EXPECT_TRUE(fs::exists(d / "estimates.json"));
    const std::string manifest = slurp(d / "manifest.json");
    EXPECT_NE(manifest.find("\"command\": \"estimates\""), std::string::npos);
    EXPECT_TRUE(std::regex_search(manifest, std::regex("\"config_digest\": \"[0-9a-f]{64}\"")));
    EXPECT_TRUE(std::regex_search(manifest, std::regex("\"started\": \"\\d{4}-\\d\\d-\\d\\dT\\d\\d:\\d\\d:\\d\\dZ\"")));
}

TEST(Cli, ThresholdGuardExitCode) {
    const fs::path d = scratch("guard");
    const fs::path cfg = write_config(d, std::string(kSmall).insert(kSmall.find("grid_nodes"), "lambda = 0.5\n"));
    const Outcome o = run("solve --config " + cfg.string() + " --out " + d.string());
    EXPECT_EQ(o.code, 4);
    EXPECT_NE(o.output.find("lambda0"), std::string::npos) << o.output;
    EXPECT_EQ(run("solve --quiet --lambda 0.5 --config " + cfg.string() + " --out " + d.string()).code, 0);
}

TEST(Cli, SolveIsDeterministicAndVerifyDetectsCorruption) {
    const fs::path d = scratch("solve");
    const fs::path cfg = write_config(d, kSmall);
    ASSERT_EQ(run("solve --quiet --config " + cfg.string() + " --out " + (d / "a").string()).code, 0);
    ASSERT_EQ(run("solve --quiet --threads 2 --config " + cfg.string() + " --out " + (d / "b").string()).code, 0);
    const std::string sol = slurp(d / "a" / "solution.json");
    EXPECT_EQ(sol, slurp(d / "b" / "solution.json"));
    EXPECT_EQ(slurp(d / "a" / "residuals.csv"), slurp(d / "b" / "residuals.csv"));

    const std::string solution = (d / "a" / "solution.json").string();
    const Outcome ok = run("verify --quiet --config " + cfg.string() + " --solution " + solution + " --out " + (d / "v").string());
    EXPECT_EQ(ok.code, 0) << ok.output;

    // Shift every tabulated value: the identity check must then fail.
    std::string bad = sol;
    const std::size_t at = bad.find("\"v\"");
    ASSERT_NE(at, std::string::npos);
    const std::size_t values = bad.find("\"values\"", at);
    const std::size_t open = bad.find('[', values), close = bad.find(']', open);
    std::string list = bad.substr(open + 1, close - open - 1);
    std::string shifted;
    std::stringstream items(list);
    std::string item;
    while (std::getline(items, item, ',')) {
        if (!shifted.empty()) shifted += ",";
        shifted += std::to_string(std::stod(item) + 0.01);
    }
    bad.replace(open + 1, close - open - 1, shifted);
    std::ofstream(d / "bad.json") << bad;
    const Outcome fail = run("verify --quiet --config " + cfg.string() + " --solution " + (d / "bad.json").string() + " --out " + (d / "vb").string());
    EXPECT_EQ(fail.code, 5) << fail.output;
}

TEST(Cli, CorruptSolutionIsAConfigError) {
    const fs::path d = scratch("corrupt");
    const fs::path cfg = write_config(d, kSmall);
    std::ofstream(d / "s.json") << "{\"format\": \"hjbs-value-solution\"}";
    const Outcome o = run("simulate --config " + cfg.string() + " --solution " + (d / "s.json").string() + " --out " + d.string());
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.output.find("s.json"), std::string::npos) << o.output;
}

TEST(Cli, SimulateWritesDeterministicJson) {
    const fs::path d = scratch("simulate");
    const fs::path cfg = write_config(d, kSmall);
    ASSERT_EQ(run("solve --quiet --config " + cfg.string() + " --out " + d.string()).code, 0);
    const std::string sol = (d / "solution.json").string();
    ASSERT_EQ(run("simulate --quiet --paths 50 --config " + cfg.string() + " --solution " + sol + " --out " + (d / "a").string()).code, 0);
    ASSERT_EQ(run("simulate --quiet --paths 50 --config " + cfg.string() + " --solution " + sol + " --out " + (d / "b").string()).code, 0);
    EXPECT_EQ(slurp(d / "a" / "simulation.json"), slurp(d / "b" / "simulation.json"));
    ASSERT_EQ(run("simulate --quiet --paths 50 --seed 6 --config " + cfg.string() + " --solution " + sol + " --out " + (d / "c").string()).code, 0);
    EXPECT_NE(slurp(d / "a" / "simulation.json"), slurp(d / "c" / "simulation.json"));
}
