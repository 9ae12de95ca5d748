#pragma once

#include "lode/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace lode::nn {

struct ParamCheck {
    std::string name;
    double worst_relative_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::string worst_param;
    std::vector<ParamCheck> per_param;

    bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

struct GradientCheckOptions {
    double step = 1e-5;
    /// Denominator floor: gradients smaller than this are compared in absolute terms.
    double magnitude_floor = 1e-6;
};

/// Compares analytic gradients against central differences for every entry of every parameter.
/// `loss` must evaluate the objective without touching gradients; `backprop` must zero all
/// gradients, run forward + backward once, and leave the accumulated gradients in place.
inline GradientCheckReport gradient_check(const std::vector<ParamRef<double>>& params,
                                          const std::function<double()>& loss,
                                          const std::function<void()>& backprop,
                                          GradientCheckOptions options = {}) {
    backprop();
    std::vector<TensorD> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(*p.grad);

    GradientCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        ParamCheck check{params[i].name};
        auto& value = *params[i].value;
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double saved = value[j];
            value[j] = saved + options.step;
            const double plus = loss();
            value[j] = saved - options.step;
            const double minus = loss();
            value[j] = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double a = analytic[i][j];
            const double denom = std::max({std::abs(a), std::abs(numeric), options.magnitude_floor});
            const double rel = std::abs(a - numeric) / denom;
            if (rel > check.worst_relative_error || j == 0) {
                check.worst_relative_error = rel;
                check.worst_index = j;
                check.analytic = a;
                check.numeric = numeric;
            }
        }
        if (check.worst_relative_error >= report.max_relative_error) {
            report.max_relative_error = check.worst_relative_error;
            report.worst_param = check.name;
        }
        report.per_param.push_back(check);
    }
    return report;
}

}  // namespace lode::nn
