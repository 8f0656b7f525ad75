#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "markdev/error.hpp"
#include "markdev/geometry.hpp"

namespace markdev {

/// Mark test function f(m1,m2) applied to the marks of a point pair.
enum class MarkFunctionKind {
    One,                    // f = 1, plain K
    FirstMark,              // f = m1, K_m.
    MarkProduct,            // f = m1*m2, K_mm
    HalfSquaredDifference,  // f = (m1-m2)^2/2, K_gamma
};

inline double mark_test_value(MarkFunctionKind kind, double m1, double m2) {
    switch (kind) {
        case MarkFunctionKind::One: return 1.0;
        case MarkFunctionKind::FirstMark: return m1;
        case MarkFunctionKind::MarkProduct: return m1 * m2;
        case MarkFunctionKind::HalfSquaredDifference: return 0.5 * (m1 - m2) * (m1 - m2);
    }
    return 0.0;
}

enum class EdgeCorrectionKind {
    None,
    Translational,
};

enum class TransformKind {
    Identity,
    SqrtOverPi,             // h(t) = sqrt(t/pi), K -> L
    ArcsinSqrtComplement,   // h(t) = arcsin(sqrt(1-t)) on [0,1]
};

/// Translational edge-correction factor |W| / |W ∩ W_shifted| for a
/// rectangular window and pair offset (dx, dy).
inline double translational_factor(const Window& window, double dx, double dy) {
    const double ax = window.width() - std::abs(dx);
    const double ay = window.height() - std::abs(dy);
    if (!(ax > 0.0) || !(ay > 0.0))
        throw NumericalError("degenerate overlap");
    return window.area() / (ax * ay);
}

/// Estimator of the normalising factor c_f: double sum of f over ordered
/// distinct pairs divided by n(n-1). Exactly 1 for f = 1.
inline double estimate_chat_f(const MarkedPattern& pattern, MarkFunctionKind f) {
    const std::size_t n = pattern.size();
    if (n < 2) throw ValidationError("pattern too small");
    if (f == MarkFunctionKind::One) return 1.0;
    const auto& m = pattern.marks();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            // both orders of the pair
            sum += mark_test_value(f, m[i], m[j]) + mark_test_value(f, m[j], m[i]);
        }
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Pair-level geometry shared across mark permutations: for every unordered
/// pair within r_max, the first grid index its indicator switches on at, and
/// its edge-correction factor. Computing this once is what makes a
/// permutation test with s=999 affordable.
class PairGeometry {
public:
    struct Pair {
        std::uint32_t k, l;
        std::uint32_t bin;  // smallest grid index j with r_j >= distance
        double edge;
    };

    PairGeometry(const MarkedPattern& pattern, EdgeCorrectionKind edge, const RGrid& grid)
        : grid_(grid), n_(pattern.size()), window_area_(pattern.window().area()) {
        if (n_ < 2) throw ValidationError("pattern too small");
        const auto& pts = pattern.points();
        const Window& w = pattern.window();
        const double r_max = grid.value(grid.size() - 1);
        for (std::size_t k = 0; k < n_; ++k) {
            for (std::size_t l = k + 1; l < n_; ++l) {
                const double dx = pts[k].x - pts[l].x;
                const double dy = pts[k].y - pts[l].y;
                const double d = std::hypot(dx, dy);
                if (d > r_max) continue;
                const double e = (edge == EdgeCorrectionKind::Translational)
                                     ? translational_factor(w, dx, dy)
                                     : 1.0;
                pairs_.push_back(Pair{static_cast<std::uint32_t>(k),
                                      static_cast<std::uint32_t>(l),
                                      bin_index(d), e});
            }
        }
    }

    const RGrid& grid() const { return grid_; }
    std::size_t point_count() const { return n_; }
    const std::vector<Pair>& pairs() const { return pairs_; }

    /// K_f estimate for a given mark vector, reusing the cached geometry.
    /// chat_f must be the (permutation-invariant) normaliser of the marks.
    FunctionEstimate evaluate(const std::vector<double>& marks, MarkFunctionKind f,
                              double chat_f) const {
        if (marks.size() != n_) throw ValidationError("mark vector length mismatch");
        if (!(chat_f > 0.0)) throw NumericalError("degenerate normalizer");
        std::vector<double> acc(grid_.size(), 0.0);
        if (f == MarkFunctionKind::FirstMark) {
            for (const Pair& p : pairs_)
                acc[p.bin] += (marks[p.k] + marks[p.l]) * p.edge;
        } else {
            for (const Pair& p : pairs_)
                acc[p.bin] += 2.0 * mark_test_value(f, marks[p.k], marks[p.l]) * p.edge;
        }
        // prefix sum turns per-bin contributions into the cumulative K_f
        for (std::size_t j = 1; j < acc.size(); ++j) acc[j] += acc[j - 1];
        // 1/(|W| lambda2 c_f) with lambda2 = n(n-1)/|W|^2
        const double scale =
            window_area_ / (static_cast<double>(n_) * static_cast<double>(n_ - 1) * chat_f);
        for (double& v : acc) v *= scale;
        return FunctionEstimate(grid_, std::move(acc));
    }

private:
    std::uint32_t bin_index(double d) const {
        // smallest j with grid value >= d; exact comparisons against the same
        // grid values the naive estimator uses, so the inclusive indicator
        // d <= r_j is reproduced bit for bit
        double pos = (d - grid_.r_min()) / grid_.step();
        if (pos < 0.0) pos = 0.0;
        auto j = static_cast<std::size_t>(std::ceil(pos));
        if (j >= grid_.size()) j = grid_.size() - 1;
        while (j > 0 && grid_.value(j - 1) >= d) --j;
        while (grid_.value(j) < d) ++j;
        return static_cast<std::uint32_t>(j);
    }

    RGrid grid_;
    std::size_t n_;
    double window_area_;
    std::vector<Pair> pairs_;
};

/// Mark-weighted K-function estimate on the grid.
inline FunctionEstimate estimate_kf(const MarkedPattern& pattern, MarkFunctionKind f,
                                    EdgeCorrectionKind edge, const RGrid& grid) {
    const double chat = estimate_chat_f(pattern, f);
    if (!(chat > 0.0)) throw NumericalError("degenerate normalizer");
    return PairGeometry(pattern, edge, grid).evaluate(pattern.marks(), f, chat);
}

/// Pointwise transformation of a tabulated function.
inline FunctionEstimate transform(const FunctionEstimate& estimate, TransformKind h) {
    if (h == TransformKind::Identity) return estimate;
    std::vector<double> out(estimate.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = estimate.values[i];
        if (h == TransformKind::SqrtOverPi) {
            if (t < 0.0)
                throw NumericalError("transformation domain violation at r=" +
                                     std::to_string(estimate.grid.value(i)));
            out[i] = std::sqrt(t / M_PI);
        } else {
            if (t < 0.0 || t > 1.0)
                throw NumericalError("transformation domain violation at r=" +
                                     std::to_string(estimate.grid.value(i)));
            out[i] = std::asin(std::sqrt(1.0 - t));
        }
    }
    return FunctionEstimate(estimate.grid, std::move(out));
}

}  // namespace markdev
