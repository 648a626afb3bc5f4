#include "hjbs/hjbs.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "hjbs/config.hpp"
#include "hjbs/error.hpp"
#include "hjbs/pipeline.hpp"
#include "hjbs/serialize.hpp"

struct hjbs_config {
    hjbs::RunConfig config;
};

struct hjbs_model {
    hjbs::SpectralModel model;
};

struct hjbs_solution {
    hjbs::ValueSolution solution;
};

namespace {

thread_local std::string last_error;

hjbs_status status_of(hjbs::ErrorCode code) {
    using hjbs::ErrorCode;
    switch (code) {
        case ErrorCode::Config: return HJBS_ERR_CONFIG;
        case ErrorCode::Io: return HJBS_ERR_IO;
        case ErrorCode::InvalidExponents: return HJBS_ERR_INVALID_EXPONENTS;
        case ErrorCode::DegenerateNoise: return HJBS_ERR_DEGENERATE_NOISE;
        case ErrorCode::NegativeTime: return HJBS_ERR_NEGATIVE_TIME;
        case ErrorCode::DimensionMismatch: return HJBS_ERR_DIMENSION_MISMATCH;
        case ErrorCode::RangeViolation: return HJBS_ERR_RANGE_VIOLATION;
        case ErrorCode::DegeneratePencil: return HJBS_ERR_DEGENERATE_PENCIL;
        case ErrorCode::BadWeight: return HJBS_ERR_BAD_WEIGHT;
        case ErrorCode::NonFiniteIntegrand: return HJBS_ERR_NON_FINITE_INTEGRAND;
        case ErrorCode::ControlOutOfSet: return HJBS_ERR_CONTROL_OUT_OF_SET;
        case ErrorCode::BadExponent: return HJBS_ERR_BAD_EXPONENT;
        case ErrorCode::NoThreshold: return HJBS_ERR_NO_THRESHOLD;
        case ErrorCode::NotContracted: return HJBS_ERR_NOT_CONTRACTED;
        case ErrorCode::ThresholdGuard: return HJBS_ERR_THRESHOLD_GUARD;
        case ErrorCode::UnstableStep: return HJBS_ERR_UNSTABLE_STEP;
        case ErrorCode::InvalidArgument: return HJBS_ERR_INVALID_ARGUMENT;
    }
    return HJBS_ERR_INTERNAL;
}

template <class F>
hjbs_status guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return HJBS_OK;
    } catch (const hjbs::Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        last_error = e.what();
        return HJBS_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return HJBS_ERR_INTERNAL;
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void require(const void* p, const char* what) {
    if (!p) hjbs::fail(hjbs::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* hjbs_version(void) { return "0.1.0"; }

const char* hjbs_last_error(void) { return last_error.c_str(); }

const char* hjbs_status_name(hjbs_status status) {
    switch (status) {
        case HJBS_OK: return "Ok";
        case HJBS_ERR_INTERNAL: return "Internal";
        default: break;
    }
    for (int c = 0; c <= static_cast<int>(hjbs::ErrorCode::InvalidArgument); ++c) {
        const auto code = static_cast<hjbs::ErrorCode>(c);
        if (status_of(code) == status) return hjbs::to_string(code);
    }
    return "Unknown";
}

void hjbs_string_free(char* s) { std::free(s); }

hjbs_status hjbs_config_load_file(const char* path, hjbs_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new hjbs_config{hjbs::load_config_file(path)};
    });
}

hjbs_status hjbs_config_load_string(const char* toml, hjbs_config** out) {
    return guarded([&] {
        require(toml, "toml");
        require(out, "out");
        *out = new hjbs_config{hjbs::load_config_string(toml)};
    });
}

void hjbs_config_free(hjbs_config* config) { delete config; }

hjbs_status hjbs_config_digest(const hjbs_config* config, char** hex) {
    return guarded([&] {
        require(config, "config");
        require(hex, "hex");
        *hex = dup(hjbs::config_digest(config->config));
    });
}

uint64_t hjbs_config_seed(const hjbs_config* config) { return config ? config->config.seed : 0; }

void hjbs_config_set_seed(hjbs_config* config, uint64_t seed) {
    if (config) config->config.seed = seed;
}

hjbs_status hjbs_config_set_estimates_window(hjbs_config* config, double t_min, double t_max,
                                             size_t samples) {
    return guarded([&] {
        require(config, "config");
        if (!(t_min > 0.0 && t_max > t_min))
            hjbs::fail(hjbs::ErrorCode::Config, "estimate window needs 0 < t_min < t_max");
        if (samples != 0 && samples < 8) hjbs::fail(hjbs::ErrorCode::Config, "estimates need at least 8 samples");
        config->config.estimates.t_min = t_min;
        config->config.estimates.t_max = t_max;
        if (samples != 0) config->config.estimates.samples = samples;
    });
}

hjbs_status hjbs_model_create(const hjbs_config* config, hjbs_model** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new hjbs_model{hjbs::SpectralModel(config->config.model)};
    });
}

void hjbs_model_free(hjbs_model* model) { delete model; }

hjbs_status hjbs_model_dims(const hjbs_model* model, size_t* state_dim, size_t* dim_p, size_t* dim_k) {
    return guarded([&] {
        require(model, "model");
        if (state_dim) *state_dim = static_cast<size_t>(model->model.state_dim());
        if (dim_p) *dim_p = static_cast<size_t>(model->model.dim_p());
        if (dim_k) *dim_k = static_cast<size_t>(model->model.dim_k());
    });
}

hjbs_status hjbs_semigroup_apply(const hjbs_model* model, double t, const double* x, double* out) {
    return guarded([&] {
        require(model, "model");
        require(x, "x");
        require(out, "out");
        const Eigen::Index n = model->model.state_dim();
        const hjbs::Vector y = model->model.semigroup(t, Eigen::Map<const hjbs::Vector>(x, n));
        Eigen::Map<hjbs::Vector>(out, n) = y;
    });
}

hjbs_status hjbs_lambda_norm(const hjbs_model* model, double t, double* out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = hjbs::lambda_norm(model->model, t);
    });
}

hjbs_status hjbs_duality_constant(const hjbs_model* model, double t, double* out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = hjbs::duality_constant(model->model, t);
    });
}

hjbs_status hjbs_run_estimates(const hjbs_config* config, char** csv, char** json) {
    return guarded([&] {
        require(config, "config");
        const hjbs::EstimatesOutput r = hjbs::run_estimates(config->config);
        if (csv) *csv = dup(r.csv);
        if (json) *json = dup(r.summary.dump(2));
    });
}

hjbs_status hjbs_solve(const hjbs_config* config, const double* lambda_override, unsigned threads,
                       hjbs_solution** out, double* lambda0_out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        if (lambda0_out) {
            const hjbs::SpectralModel model(config->config.model);
            *lambda0_out = hjbs::certify_config(config->config, model).lambda0;
        }
        std::optional<double> ov;
        if (lambda_override) ov = *lambda_override;
        hjbs::SolveOutput r = hjbs::run_solve(config->config, ov, threads);
        *out = new hjbs_solution{std::move(r.solution)};
    });
}

void hjbs_solution_free(hjbs_solution* solution) { delete solution; }

hjbs_status hjbs_solution_to_json(const hjbs_solution* solution, char** json) {
    return guarded([&] {
        require(solution, "solution");
        require(json, "json");
        *json = dup(hjbs::solution_to_json(solution->solution).dump(1));
    });
}

hjbs_status hjbs_solution_from_json(const char* json, hjbs_solution** out) {
    return guarded([&] {
        require(json, "json");
        require(out, "out");
        *out = new hjbs_solution{hjbs::solution_from_text(json)};
    });
}

hjbs_status hjbs_solution_residual_csv(const hjbs_solution* solution, char** csv) {
    return guarded([&] {
        require(solution, "solution");
        require(csv, "csv");
        *csv = dup(hjbs::residual_csv(solution->solution));
    });
}

hjbs_status hjbs_solution_value(const hjbs_solution* solution, const double* z, size_t n, double* value) {
    return guarded([&] {
        require(solution, "solution");
        require(z, "z");
        require(value, "value");
        if (n != solution->solution.v.dims())
            hjbs::fail(hjbs::ErrorCode::DimensionMismatch, "point has the wrong dimension");
        *value = solution->solution.value(Eigen::Map<const hjbs::Vector>(z, static_cast<Eigen::Index>(n)));
    });
}

hjbs_status hjbs_solution_lambda(const hjbs_solution* solution, double* lambda) {
    return guarded([&] {
        require(solution, "solution");
        require(lambda, "lambda");
        *lambda = solution->solution.lambda;
    });
}

hjbs_status hjbs_solution_converged(const hjbs_solution* solution, int* converged) {
    return guarded([&] {
        require(solution, "solution");
        require(converged, "converged");
        *converged = solution->solution.diagnostics.converged ? 1 : 0;
    });
}

hjbs_status hjbs_simulate(const hjbs_config* config, const hjbs_solution* solution, unsigned threads,
                          size_t paths, char** json, char** trajectories_csv) {
    return guarded([&] {
        require(config, "config");
        require(solution, "solution");
        require(json, "json");
        const hjbs::SimulateOutput r = hjbs::run_simulate(config->config, solution->solution, threads, paths);
        *json = dup(r.json.dump(2));
        if (trajectories_csv) *trajectories_csv = dup(r.trajectories_csv);
    });
}

hjbs_status hjbs_verify(const hjbs_config* config, const hjbs_solution* solution, unsigned threads,
                        size_t paths, char** json, int* passed) {
    return guarded([&] {
        require(config, "config");
        require(solution, "solution");
        require(json, "json");
        const hjbs::VerifyOutput r = hjbs::run_verify(config->config, solution->solution, threads, paths);
        *json = dup(r.report.dump(2));
        if (passed) *passed = r.passed ? 1 : 0;
    });
}

}  // extern "C"
