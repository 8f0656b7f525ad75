#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "markdev/error.hpp"
#include "markdev/residuals.hpp"

namespace markdev {

enum class DeviationKind {
    Supremum,    // max |d(r)| over the interval
    IntegralL2,  // sum of d(r)^2 * step over the interval
};

/// Collapse a residual function into a scalar over the interval, which must
/// be an aligned sub-grid of the residual grid. Masked points are skipped.
inline double deviation_measure(const ResidualFunction& residuals, const RGrid& interval,
                                DeviationKind kind) {
    if (!residuals.grid.contains_subgrid(interval))
        throw ValidationError("interval is not a sub-grid of the residual grid");
    const std::size_t first = residuals.grid.index_of(interval.r_min());
    const std::size_t last = residuals.grid.index_of(interval.r_max());

    bool any = false;
    double result = 0.0;
    for (std::size_t j = first; j <= last; ++j) {
        if (residuals.masked[j]) continue;
        any = true;
        const double d = residuals.values[j];
        if (kind == DeviationKind::Supremum)
            result = std::max(result, std::abs(d));
        else
            result += d * d * interval.step();
    }
    if (!any) throw NumericalError("empty interval");
    return result;
}

}  // namespace markdev
