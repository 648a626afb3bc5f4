// hjbctl: estimates, solve, simulate and verify on top of the hjbs C API.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hjbs/hjbs.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNotContracted = 3, kThreshold = 4, kVerify = 5 };

struct Options {
    std::string config;
    std::string out = ".";
    std::string solution;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::optional<unsigned> threads;
    std::size_t paths = 0;
    bool quiet = false;
    std::optional<double> t_min, t_max;
    std::size_t samples = 0;
};

struct ConfigDeleter { void operator()(hjbs_config* c) const { hjbs_config_free(c); } };
struct SolutionDeleter { void operator()(hjbs_solution* s) const { hjbs_solution_free(s); } };
using ConfigPtr = std::unique_ptr<hjbs_config, ConfigDeleter>;
using SolutionPtr = std::unique_ptr<hjbs_solution, SolutionDeleter>;

std::string take(char* s) {
    std::string out = s ? s : "";
    hjbs_string_free(s);
    return out;
}

int exit_for(hjbs_status st) {
    switch (st) {
        case HJBS_OK: return kOk;
        case HJBS_ERR_CONFIG:
        case HJBS_ERR_IO:
        case HJBS_ERR_INVALID_EXPONENTS:
        case HJBS_ERR_DEGENERATE_NOISE:
        case HJBS_ERR_DIMENSION_MISMATCH: return kConfig;
        case HJBS_ERR_NOT_CONTRACTED: return kNotContracted;
        case HJBS_ERR_THRESHOLD_GUARD: return kThreshold;
        default: return kFailure;
    }
}

int report(hjbs_status st) {
    const std::string msg = hjbs_last_error();
    std::cerr << "hjbctl: " << (msg.empty() ? hjbs_status_name(st) : msg) << "\n";
    return exit_for(st);
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

unsigned thread_count(const Options& o) {
    if (o.threads) return std::max(*o.threads, 1U);
    if (const char* env = std::getenv("HJB_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

/// Collects outputs and writes the manifest last.
class Run {
public:
    Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o), started_(utc_now()) {}

    bool write(const std::string& name, const std::string& content) {
        std::error_code ec;
        fs::create_directories(opts_.out, ec);
        const fs::path p = fs::path(opts_.out) / name;
        std::ofstream f(p, std::ios::binary);
        if (!f || !(f << content) || !f.flush()) {
            std::cerr << "hjbctl: IoError: cannot write '" << p.string() << "'\n";
            return false;
        }
        files_.push_back(name);
        return true;
    }

    bool finish(hjbs_config* cfg, json extra = json::object()) {
        char* digest = nullptr;
        const hjbs_status st = hjbs_config_digest(cfg, &digest);
        if (st != HJBS_OK) return report(st) == kOk;
        files_.push_back("manifest.json");
        json m = {{"tool", "hjbctl"},
                  {"version", hjbs_version()},
                  {"command", command_},
                  {"config", opts_.config},
                  {"config_digest", take(digest)},
                  {"seed", hjbs_config_seed(cfg)},
                  {"started", started_},
                  {"finished", utc_now()},
                  {"outputs", files_}};
        if (!extra.empty()) m["overrides"] = std::move(extra);
        files_.pop_back();
        return write("manifest.json", m.dump(2) + "\n");
    }

private:
    std::string command_;
    const Options& opts_;
    std::string started_;
    std::vector<std::string> files_;
};

int load(const Options& o, ConfigPtr& cfg) {
    hjbs_config* c = nullptr;
    const hjbs_status st = hjbs_config_load_file(o.config.c_str(), &c);
    if (st != HJBS_OK) return report(st);
    cfg.reset(c);
    if (o.seed) hjbs_config_set_seed(c, *o.seed);
    return kOk;
}

int load_solution(const Options& o, SolutionPtr& sol) {
    std::ifstream in(o.solution, std::ios::binary);
    if (!in) {
        std::cerr << "hjbctl: IoError: cannot open solution file '" << o.solution << "'\n";
        return kConfig;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    hjbs_solution* s = nullptr;
    const hjbs_status st = hjbs_solution_from_json(ss.str().c_str(), &s);
    if (st != HJBS_OK) {
        std::cerr << "hjbctl: " << o.solution << ": ";
        return report(st);
    }
    sol.reset(s);
    return kOk;
}

json overrides(const Options& o) {
    json j = json::object();
    if (o.seed) j["seed"] = *o.seed;
    if (o.lambda) j["lambda"] = *o.lambda;
    if (o.paths) j["paths"] = o.paths;
    if (o.t_min) j["t_min"] = *o.t_min;
    if (o.t_max) j["t_max"] = *o.t_max;
    if (o.samples) j["samples"] = o.samples;
    return j;
}

int cmd_estimates(const Options& o) {
    ConfigPtr cfg;
    if (int rc = load(o, cfg)) return rc;
    if (o.t_min || o.t_max || o.samples) {
        if (!o.t_min || !o.t_max) {
            std::cerr << "hjbctl: --t-min and --t-max must be given together\n";
            return kConfig;
        }
        const hjbs_status st = hjbs_config_set_estimates_window(cfg.get(), *o.t_min, *o.t_max, o.samples);
        if (st != HJBS_OK) return report(st);
    }
    char *csv = nullptr, *js = nullptr;
    const hjbs_status st = hjbs_run_estimates(cfg.get(), &csv, &js);
    if (st != HJBS_OK) return report(st);
    const std::string summary = take(js);
    Run run("estimates", o);
    if (!run.write("estimates.csv", take(csv)) || !run.write("estimates.json", summary + "\n") ||
        !run.finish(cfg.get(), overrides(o)))
        return kConfig;
    if (!o.quiet) {
        const json j = json::parse(summary);
        std::cout << "fitted exponent " << j["fitted_exponent"].get<double>() << " (R^2 "
                  << j["fit_r2"].get<double>() << "), kappa0 " << j["kappa0"].get<double>() << "\n";
    }
    return kOk;
}

int cmd_solve(const Options& o) {
    ConfigPtr cfg;
    if (int rc = load(o, cfg)) return rc;
    hjbs_solution* s = nullptr;
    double lambda0 = 0.0;
    const double* ov = o.lambda ? &*o.lambda : nullptr;
    const hjbs_status st = hjbs_solve(cfg.get(), ov, thread_count(o), &s, &lambda0);
    if (st == HJBS_ERR_THRESHOLD_GUARD) {
        std::cerr << "hjbctl: refusing to solve below the certified threshold lambda0 = " << lambda0
                  << " (pass --lambda to override)\n";
        return report(st);
    }
    if (st != HJBS_OK) return report(st);
    SolutionPtr sol(s);
    char *js = nullptr, *csv = nullptr;
    hjbs_status st2 = hjbs_solution_to_json(sol.get(), &js);
    if (st2 != HJBS_OK) return report(st2);
    st2 = hjbs_solution_residual_csv(sol.get(), &csv);
    if (st2 != HJBS_OK) return report(st2);
    Run run("solve", o);
    if (!run.write("solution.json", take(js) + "\n") || !run.write("residuals.csv", take(csv)) ||
        !run.finish(cfg.get(), overrides(o)))
        return kConfig;
    double lambda = 0.0;
    int converged = 0;
    hjbs_solution_lambda(sol.get(), &lambda);
    hjbs_solution_converged(sol.get(), &converged);
    if (!o.quiet) {
        std::cout << "lambda0 " << lambda0 << ", solved at lambda " << lambda << ", "
                  << (converged ? "converged" : "max_iter reached") << "\n";
        if (lambda < lambda0) std::cout << "warning: lambda is below the certified threshold\n";
    }
    return kOk;
}

int cmd_simulate(const Options& o) {
    ConfigPtr cfg;
    if (int rc = load(o, cfg)) return rc;
    SolutionPtr sol;
    if (int rc = load_solution(o, sol)) return rc;
    char *js = nullptr, *csv = nullptr;
    const hjbs_status st = hjbs_simulate(cfg.get(), sol.get(), thread_count(o), o.paths, &js, &csv);
    if (st != HJBS_OK) return report(st);
    Run run("simulate", o);
    if (!run.write("simulation.json", take(js) + "\n")) return kConfig;
    const std::string traj = take(csv);
    if (!traj.empty() && !run.write("trajectories.csv", traj)) return kConfig;
    if (!run.finish(cfg.get(), overrides(o))) return kConfig;
    return kOk;
}

int cmd_verify(const Options& o) {
    ConfigPtr cfg;
    if (int rc = load(o, cfg)) return rc;
    SolutionPtr sol;
    if (int rc = load_solution(o, sol)) return rc;
    char* js = nullptr;
    int passed = 0;
    const hjbs_status st = hjbs_verify(cfg.get(), sol.get(), thread_count(o), o.paths, &js, &passed);
    if (st != HJBS_OK) return report(st);
    Run run("verify", o);
    if (!run.write("verification.json", take(js) + "\n") || !run.finish(cfg.get(), overrides(o)))
        return kConfig;
    if (!o.quiet) std::cout << (passed ? "verification passed" : "verification FAILED") << "\n";
    return passed ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partial-smoothing HJB solver for truncated SPDE control problems"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub, bool needs_solution) {
        sub->add_option("--config", o.config, "TOML configuration")->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "override the configured seed");
        sub->add_option("--threads", o.threads, "worker threads (fallback: HJB_THREADS)");
        sub->add_flag("--quiet", o.quiet, "suppress the summary line");
        if (needs_solution) sub->add_option("--solution", o.solution, "solution JSON from solve")->required();
    };
    auto* est = app.add_subcommand("estimates", "smoothing-norm sweep and exponent fit");
    common(est, false);
    est->add_option("--t-min", o.t_min, "left end of the fit window");
    est->add_option("--t-max", o.t_max, "right end of the fit window");
    est->add_option("--samples", o.samples, "number of log-spaced samples");
    auto* solve = app.add_subcommand("solve", "fixed-point solve of the HJB equation");
    common(solve, false);
    solve->add_option("--lambda", o.lambda, "discount override (may be below the threshold)");
    auto* sim = app.add_subcommand("simulate", "closed-loop simulation under the feedback");
    common(sim, true);
    sim->add_option("--paths", o.paths, "Monte Carlo paths");
    auto* ver = app.add_subcommand("verify", "fundamental identity and optimality checks");
    common(ver, true);
    ver->add_option("--paths", o.paths, "Monte Carlo paths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }
    if (*est) return cmd_estimates(o);
    if (*solve) return cmd_solve(o);
    if (*sim) return cmd_simulate(o);
    return cmd_verify(o);
}
