#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "markdev/error.hpp"
#include "markdev/geometry.hpp"

namespace markdev {

enum class ScalingKind {
    Raw,                  // d(r) = T(r) - T0(r)
    Studentised,          // d(r) / sqrt(Var0(T(r)))
    Quantile,             // d(r) / (Tbar(r) - Tunder(r))
    DirectionalQuantile,  // one-sided quantile distances to T0
};

/// Pointwise summaries of T(r) under the null: mean (the T0 proxy),
/// variance, and 2.5% lower/upper quantiles.
struct NullDistribution {
    enum class Source { AnalyticT0, Simulated };

    RGrid grid;
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<double> q_lower;
    std::vector<double> q_upper;
    Source source = Source::Simulated;
    bool quantiles_unreliable = false;  // fewer than 40 functions
};

/// Build the null summaries from a family of simulated functions. The mean
/// field is set to the supplied t0 (analytic for the random labelling test).
/// Quantiles use the symmetric order-statistic rule k = ceil(0.025*count):
/// k-th smallest and k-th largest value, no interpolation.
inline NullDistribution build_null_distribution(const std::vector<FunctionEstimate>& functions,
                                                const FunctionEstimate& t0) {
    const std::size_t count = functions.size();
    if (count < 2) throw ValidationError("need at least 2 functions");
    for (const auto& fe : functions)
        if (fe.grid != t0.grid) throw ValidationError("incompatible grids");

    const std::size_t g = t0.grid.size();
    NullDistribution null{t0.grid, t0.values, std::vector<double>(g), std::vector<double>(g),
                          std::vector<double>(g), NullDistribution::Source::Simulated,
                          count < 40};

    const auto k = static_cast<std::size_t>(
        std::ceil(0.025 * static_cast<double>(count)));
    std::vector<double> column(count);
    for (std::size_t j = 0; j < g; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            column[i] = functions[i].values[j];
            mean += column[i];
        }
        mean /= static_cast<double>(count);
        double ss = 0.0;
        for (double v : column) ss += (v - mean) * (v - mean);
        null.variance[j] = ss / static_cast<double>(count - 1);
        std::sort(column.begin(), column.end());
        null.q_lower[j] = column[k - 1];
        null.q_upper[j] = column[count - k];
    }
    return null;
}

/// A residual function with its mask: grid points whose scaling denominator
/// fell below eps are excluded from downstream deviation measures.
struct ResidualFunction {
    RGrid grid;
    std::vector<double> values;
    std::vector<char> masked;  // 1 = excluded
};

inline constexpr double kDenominatorEpsilon = 1e-12;

/// Mask shared by every function scaled against the same NullDistribution;
/// it depends on the null summaries only, never on T itself.
inline std::vector<char> scaling_mask(const NullDistribution& null, ScalingKind scaling,
                                      double eps = kDenominatorEpsilon) {
    const std::size_t g = null.grid.size();
    std::vector<char> masked(g, 0);
    for (std::size_t j = 0; j < g; ++j) {
        switch (scaling) {
            case ScalingKind::Raw:
                break;
            case ScalingKind::Studentised:
                masked[j] = std::sqrt(null.variance[j]) < eps;
                break;
            case ScalingKind::Quantile:
                masked[j] = (null.q_upper[j] - null.q_lower[j]) < eps;
                break;
            case ScalingKind::DirectionalQuantile:
                masked[j] = std::abs(null.q_upper[j] - null.mean[j]) < eps ||
                            std::abs(null.q_lower[j] - null.mean[j]) < eps;
                break;
        }
    }
    return masked;
}

/// Residuals of t against an explicit t0, with a caller-supplied mask. Used
/// by the Diggle leave-one-out mode, where every function has its own mean
/// but the mask and scaling weights are shared across the family.
inline ResidualFunction compute_residuals(const FunctionEstimate& t, const std::vector<double>& t0,
                                          const NullDistribution& null, ScalingKind scaling,
                                          const std::vector<char>& mask) {
    if (t.grid != null.grid) throw ValidationError("incompatible grids");
    const std::size_t g = t.grid.size();
    if (t0.size() != g || mask.size() != g) throw ValidationError("incompatible grids");
    ResidualFunction res{t.grid, std::vector<double>(g, 0.0), mask};

    bool any_unmasked = false;
    for (std::size_t j = 0; j < g; ++j) {
        if (res.masked[j]) continue;
        any_unmasked = true;
        const double d = t.values[j] - t0[j];
        switch (scaling) {
            case ScalingKind::Raw:
                res.values[j] = d;
                break;
            case ScalingKind::Studentised:
                res.values[j] = d / std::sqrt(null.variance[j]);
                break;
            case ScalingKind::Quantile:
                res.values[j] = d / (null.q_upper[j] - null.q_lower[j]);
                break;
            case ScalingKind::DirectionalQuantile:
                res.values[j] = d >= 0.0 ? d / std::abs(null.q_upper[j] - null.mean[j])
                                         : d / std::abs(null.q_lower[j] - null.mean[j]);
                break;
        }
    }
    if (!any_unmasked) throw NumericalError("degenerate scaling");
    return res;
}

inline ResidualFunction compute_residuals(const FunctionEstimate& t, const NullDistribution& null,
                                          ScalingKind scaling,
                                          double eps = kDenominatorEpsilon) {
    return compute_residuals(t, null.mean, null, scaling, scaling_mask(null, scaling, eps));
}

}  // namespace markdev
