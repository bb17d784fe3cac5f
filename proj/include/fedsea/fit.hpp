#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fedsea/core.hpp"

namespace fedsea {

enum class FitModel { power_law, log_law };

inline const char* to_string(FitModel m) { return m == FitModel::power_law ? "power_law" : "log_law"; }

// power_law: R ~ a * T^b.  log_law: R ~ a * log T + c (b unused).
struct FitResult {
    FitModel model = FitModel::power_law;
    double a = 0.0, b = 0.0, c = 0.0;
    double a_std_error = 0.0, b_std_error = 0.0, c_std_error = 0.0;
    double r_squared = 0.0;
    std::vector<double> horizons;
    std::vector<double> values;
    std::vector<double> point_std_errors;  // replicate standard error per point
};

inline constexpr std::size_t kMinFitPoints = 4;

namespace detail {

struct LineFit {
    double intercept = 0.0, slope = 0.0;
    double intercept_se = 0.0, slope_se = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit ols(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = compensated_sum(x) / n, my = compensated_sum(y) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw Error("degenerate fit: horizons must not all coincide");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ssr += r * r;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : (ssr == 0.0 ? 1.0 : 0.0);
    const double s2 = x.size() > 2 ? ssr / (n - 2.0) : 0.0;
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    return f;
}

inline void check_fit_input(std::span<const double> horizons, std::span<const double> values) {
    if (horizons.size() != values.size()) throw Error("fit input size mismatch");
    if (horizons.size() < kMinFitPoints) throw Error("scaling fit needs at least 4 horizon points");
    for (double t : horizons)
        if (!(t > 1.0) || !std::isfinite(t)) throw Error("fit horizons must be finite and > 1");
    if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; }))
        throw Error("degenerate fit: regret is zero everywhere");
    if (!vec::all_finite(values)) throw Error("fit values must be finite");
}

}  // namespace detail

// Least squares in log-log coordinates.
inline FitResult fit_power_law(std::span<const double> horizons, std::span<const double> values,
                               std::span<const double> std_errors = {}) {
    detail::check_fit_input(horizons, values);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (!(values[i] > 0.0)) throw Error("degenerate fit: power law needs positive values");
        lx.push_back(std::log(horizons[i]));
        ly.push_back(std::log(values[i]));
    }
    const auto f = detail::ols(lx, ly);
    FitResult out;
    out.model = FitModel::power_law;
    out.a = std::exp(f.intercept);
    out.a_std_error = out.a * f.intercept_se;
    out.b = f.slope;
    out.b_std_error = f.slope_se;
    out.r_squared = f.r_squared;
    out.horizons.assign(horizons.begin(), horizons.end());
    out.values.assign(values.begin(), values.end());
    out.point_std_errors.assign(std_errors.begin(), std_errors.end());
    return out;
}

// Least squares of values against log T.
inline FitResult fit_log_law(std::span<const double> horizons, std::span<const double> values,
                             std::span<const double> std_errors = {}) {
    detail::check_fit_input(horizons, values);
    std::vector<double> lx;
    for (double t : horizons) lx.push_back(std::log(t));
    const auto f = detail::ols(lx, values);
    FitResult out;
    out.model = FitModel::log_law;
    out.a = f.slope;
    out.a_std_error = f.slope_se;
    out.c = f.intercept;
    out.c_std_error = f.intercept_se;
    out.r_squared = f.r_squared;
    out.horizons.assign(horizons.begin(), horizons.end());
    out.values.assign(values.begin(), values.end());
    out.point_std_errors.assign(std_errors.begin(), std_errors.end());
    return out;
}

inline FitResult fit_scaling(FitModel model, std::span<const double> horizons, std::span<const double> values,
                             std::span<const double> std_errors = {}) {
    return model == FitModel::power_law ? fit_power_law(horizons, values, std_errors)
                                        : fit_log_law(horizons, values, std_errors);
}

}  // namespace fedsea
