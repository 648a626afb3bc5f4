#include <string>

#include "hjbs/config.hpp"
#include "hjbs/pipeline.hpp"
#include "hjbs/serialize.hpp"
#include "support.hpp"

using namespace hjbs;
using namespace hjbs::test;

namespace {

const std::string kSmall = R"(
schema = 1
seed = 5

[model]
kind = "heat"
modes = 16
projection = [[1.0]]

[problem]
grid_nodes = 9
gh_order = 8
time_nodes = 48
)";

}  // namespace

TEST(Config, DefaultsLoad) {
    const RunConfig heat = load_config_file(std::string(HJBS_CONFIG_DIR) + "/heat_default.toml");
    EXPECT_EQ(heat.model.kind, ModelKind::HeatBoundary);
    EXPECT_EQ(heat.model.modes, 64U);
    const RunConfig wave = load_config_file(std::string(HJBS_CONFIG_DIR) + "/wave_default.toml");
    EXPECT_EQ(wave.model.kind, ModelKind::WaveDistributed);
    EXPECT_EQ(wave.model.projected_modes, 8U);
}

TEST(Config, DigestIgnoresKeyOrder) {
    const RunConfig a = load_config_string("schema = 1\nseed = 3\n[model]\nkind = \"wave\"\nmodes = 4\nprojected_modes = 2\n");
    const RunConfig b = load_config_string("seed = 3\nschema = 1\n[model]\nprojected_modes = 2\nmodes = 4\nkind = \"wave\"\n");
    EXPECT_EQ(config_digest(a), config_digest(b));
    const RunConfig c = load_config_string("seed = 4\nschema = 1\n[model]\nprojected_modes = 2\nmodes = 4\nkind = \"wave\"\n");
    EXPECT_NE(config_digest(a), config_digest(c));
}

TEST(Config, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, UnknownKeysAreNamed) {
    try {
        load_config_string("schema = 1\n[model]\nkind = \"heat\"\nprojection = [[1.0]]\nmodse = 3\n");
        FAIL() << "expected a config error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Config);
        EXPECT_NE(std::string(e.what()).find("modse"), std::string::npos);
    }
}

TEST(Config, SchemaIsRequired) {
    EXPECT_EQ(error_code_of([] { load_config_string("[model]\nkind = \"heat\"\n"); }), ErrorCode::Config);
    EXPECT_EQ(error_code_of([] { load_config_string("schema = 2\n[model]\nkind = \"heat\"\n"); }), ErrorCode::Config);
}

TEST(Config, MissingFileIsAnIoError) {
    EXPECT_EQ(error_code_of([] { load_config_file("/nonexistent/run.toml"); }), ErrorCode::Io);
}

TEST(Config, MalformedTomlIsAConfigError) {
    EXPECT_EQ(error_code_of([] { load_config_string("schema = = 1\n"); }), ErrorCode::Config);
}

TEST(Serialize, SolutionRoundTripsExactly) {
    const RunConfig c = load_config_string(kSmall);
    const SolveOutput out = run_solve(c, std::nullopt, 1);
    const std::string text = solution_to_json(out.solution).dump();
    const ValueSolution back = solution_from_text(text);
    EXPECT_EQ(solution_to_json(back).dump(), text);
    EXPECT_EQ(back.v.values(), out.solution.v.values());
    EXPECT_DOUBLE_EQ(back.value(Vector::Constant(1, 0.01)), out.solution.value(Vector::Constant(1, 0.01)));
}

TEST(Serialize, MissingFieldIsNamed) {
    const RunConfig c = load_config_string(kSmall);
    nlohmann::json j = solution_to_json(run_solve(c, std::nullopt, 1).solution);
    j.erase("lambda");
    try {
        solution_from_json(j);
        FAIL() << "expected a config error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Config);
        EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
    }
}

TEST(Serialize, DoublesRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Pipeline, ThresholdGuardBlocksLowLambda) {
    const RunConfig c = load_config_string(kSmall + "lambda = 1.0\n");
    EXPECT_EQ(error_code_of([&] { run_solve(c, std::nullopt, 1); }), ErrorCode::ThresholdGuard);
    const SolveOutput forced = run_solve(c, 1.0, 1);
    EXPECT_TRUE(forced.solution.diagnostics.below_threshold);
}

TEST(Pipeline, EstimatesSummaryReportsTheFit) {
    const RunConfig c = load_config_string(kSmall);
    const EstimatesOutput e = run_estimates(c);
    EXPECT_TRUE(e.summary.contains("fitted_exponent"));
    EXPECT_TRUE(e.summary.contains("kappa0"));
    EXPECT_EQ(e.csv.substr(0, e.csv.find('\n')), "t,lambda_norm,duality_constant,lifted_lambda_norm,residual");
}
