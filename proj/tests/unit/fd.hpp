// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences, reported per named tensor.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dynapre/model.hpp"

namespace oracle {

struct TensorError {
    std::string name;
    double grad_norm = 0.0;
    double rel_error = 0.0;  // ||g - fd|| / max(||g||, ||fd||, floor)
};

inline constexpr double kFdNormFloor = 1e-6;

// loss(params, grad_or_null) evaluates the scalar loss; with a non-null
// grad it also accumulates the analytic gradient.
inline std::vector<TensorError> fd_check(const dynapre::model::Layout& layout, std::vector<double> params,
                                         const std::function<double(const std::vector<double>&, double*)>& loss,
                                         double eps = 1e-3) {
    std::vector<double> g(params.size(), 0.0);
    loss(params, g.data());
    std::vector<TensorError> out;
    for (const auto& t : layout.tensors()) {
        double diff2 = 0.0, g2 = 0.0, fd2 = 0.0;
        for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) {
            const double keep = params[i];
            params[i] = keep + eps;
            const double up = loss(params, nullptr);
            params[i] = keep - eps;
            const double down = loss(params, nullptr);
            params[i] = keep;
            const double fd = (up - down) / (2.0 * eps);
            diff2 += (g[i] - fd) * (g[i] - fd);
            g2 += g[i] * g[i];
            fd2 += fd * fd;
        }
        const double denom = std::max({std::sqrt(g2), std::sqrt(fd2), kFdNormFloor});
        out.push_back(TensorError{t.name, std::sqrt(g2), std::sqrt(diff2) / denom});
    }
    return out;
}

inline double max_rel_error(const std::vector<TensorError>& errs) {
    double m = 0.0;
    for (const auto& e : errs) m = std::max(m, e.rel_error);
    return m;
}

}  // namespace oracle
