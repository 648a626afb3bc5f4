#pragma once

#include <gtest/gtest.h>

#include "hjbs/error.hpp"
#include "hjbs/spectral.hpp"

namespace hjbs::test {

inline ModelConfig heat_config(std::size_t modes = 64) {
    ModelConfig c;
    c.kind = ModelKind::HeatBoundary;
    c.modes = modes;
    c.projection = Matrix::Ones(1, 1);
    return c;
}

inline ModelConfig wave_config(std::size_t modes = 16, std::size_t projected = 8) {
    ModelConfig c;
    c.kind = ModelKind::WaveDistributed;
    c.modes = modes;
    c.projected_modes = projected;
    return c;
}

template <class F>
ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an hjbs::Error";
    return ErrorCode::InvalidArgument;
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace hjbs::test
