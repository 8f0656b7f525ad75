#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "markdev/deviation.hpp"
#include "markdev/error.hpp"
#include "markdev/estimators.hpp"
#include "markdev/geometry.hpp"
#include "markdev/random.hpp"
#include "markdev/residuals.hpp"

namespace markdev {

enum class T0Mode {
    Analytic,           // T0 = plain K-hat, exact for random labelling
    DiggleLeaveOneOut,  // each function compared to the mean of the others
};

/// Full parameterisation of one random-labelling deviation test.
struct TestConfig {
    MarkFunctionKind f = MarkFunctionKind::MarkProduct;
    EdgeCorrectionKind edge = EdgeCorrectionKind::Translational;
    TransformKind transformation = TransformKind::Identity;
    ScalingKind scaling = ScalingKind::Raw;
    DeviationKind deviation = DeviationKind::Supremum;
    RGrid grid{0.0, 25.0, 0.25};
    RGrid interval{0.0, 25.0, 0.25};
    int s = 999;
    std::uint64_t seed = 0;
    T0Mode t0_mode = T0Mode::Analytic;
    int threads = 1;

    void validate() const {
        if (s < 1) throw ValidationError("simulation count must be at least 1");
        if (!grid.contains_subgrid(interval))
            throw ValidationError("interval must be a sub-grid of the estimation grid");
        if (threads < 1) throw ValidationError("thread count must be at least 1");
    }
};

struct TestResult {
    std::vector<double> u;  // u[0] is the data value
    int rank = 0;           // #{i >= 1 : u[i] >= u[0]}
    double p_value = 1.0;
    FunctionEstimate t_data;
    FunctionEstimate t0;
    NullDistribution null;
    std::vector<std::size_t> masked_points;
};

/// Uniformly random permutation of the marks; point locations untouched.
inline MarkedPattern permute_marks(const MarkedPattern& pattern, std::mt19937_64& rng) {
    if (pattern.size() < 2) throw ValidationError("pattern too small");
    std::vector<double> marks = pattern.marks();
    std::shuffle(marks.begin(), marks.end(), rng);
    return pattern.with_marks(std::move(marks));
}

/// Leave-one-out means: for each i, the mean of all other functions.
inline std::vector<FunctionEstimate> diggle_leave_one_out(
    const std::vector<FunctionEstimate>& estimates) {
    if (estimates.size() < 2) throw ValidationError("missing estimates");
    const std::size_t count = estimates.size();
    const std::size_t g = estimates.front().grid.size();
    std::vector<double> total(g, 0.0);
    for (const auto& fe : estimates) {
        if (fe.grid != estimates.front().grid) throw ValidationError("incompatible grids");
        for (std::size_t j = 0; j < g; ++j) total[j] += fe.values[j];
    }
    std::vector<FunctionEstimate> means;
    means.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> v(g);
        for (std::size_t j = 0; j < g; ++j)
            v[j] = (total[j] - estimates[i].values[j]) / static_cast<double>(count - 1);
        means.emplace_back(estimates.front().grid, std::move(v));
    }
    return means;
}

/// T0 under the random labelling null: K-hat with f = 1 and the same edge
/// correction, evaluated on the cached pair geometry.
inline FunctionEstimate analytic_t0(const PairGeometry& geometry,
                                    const std::vector<double>& marks) {
    return geometry.evaluate(marks, MarkFunctionKind::One, 1.0);
}

namespace detail {

/// Evaluate K_f for the data marks and s random permutations. Permutation i
/// draws from a stream derived from (seed, i), so the result is independent
/// of how the work is split across threads.
inline std::vector<FunctionEstimate> permuted_estimates(const PairGeometry& geometry,
                                                        const std::vector<double>& data_marks,
                                                        MarkFunctionKind f, double chat, int s,
                                                        std::uint64_t seed, int threads) {
    const std::size_t g = geometry.grid().size();
    std::vector<std::vector<double>> values(static_cast<std::size_t>(s) + 1);
    values[0] = geometry.evaluate(data_marks, f, chat).values;

    auto worker = [&](int begin, int end) {
        std::vector<double> marks = data_marks;
        for (int i = begin; i < end; ++i) {
            std::mt19937_64 rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            marks = data_marks;
            std::shuffle(marks.begin(), marks.end(), rng);
            values[static_cast<std::size_t>(i)] = geometry.evaluate(marks, f, chat).values;
        }
    };

    if (threads <= 1) {
        worker(1, s + 1);
    } else {
        std::vector<std::thread> pool;
        const int per = (s + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = 1 + t * per;
            const int end = std::min(s + 1, begin + per);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    std::vector<FunctionEstimate> estimates;
    estimates.reserve(static_cast<std::size_t>(s) + 1);
    for (auto& v : values) {
        if (v.size() != g) throw NumericalError("permutation evaluation failed");
        estimates.emplace_back(geometry.grid(), std::move(v));
    }
    return estimates;
}

}  // namespace detail

/// The Monte Carlo random-labelling deviation test. Deterministic given
/// (pattern, config, seed) regardless of thread count.
inline TestResult run_test(const MarkedPattern& pattern, const TestConfig& config) {
    config.validate();
    if (pattern.size() < 2) throw ValidationError("pattern too small");

    const PairGeometry geometry(pattern, config.edge, config.grid);
    const double chat = estimate_chat_f(pattern, config.f);
    if (!(chat > 0.0)) throw NumericalError("degenerate normalizer");

    std::vector<FunctionEstimate> estimates = detail::permuted_estimates(
        geometry, pattern.marks(), config.f, chat, config.s, config.seed, config.threads);
    for (auto& fe : estimates) fe = transform(fe, config.transformation);

    const std::size_t count = estimates.size();
    FunctionEstimate t0 = transform(analytic_t0(geometry, pattern.marks()), config.transformation);

    NullDistribution null = build_null_distribution(estimates, t0);
    std::vector<FunctionEstimate> t0_family;  // Diggle mode only
    if (config.t0_mode == T0Mode::DiggleLeaveOneOut) {
        t0_family = diggle_leave_one_out(estimates);
        // the shared null summaries keep the family mean as the T0 proxy
        std::vector<double> overall(null.grid.size(), 0.0);
        for (const auto& fe : estimates)
            for (std::size_t j = 0; j < overall.size(); ++j)
                overall[j] += fe.values[j] / static_cast<double>(count);
        null.mean = std::move(overall);
    } else {
        null.source = NullDistribution::Source::AnalyticT0;
    }

    const std::vector<char> mask = scaling_mask(null, config.scaling);
    {
        const std::size_t first = config.grid.index_of(config.interval.r_min());
        const std::size_t last = config.grid.index_of(config.interval.r_max());
        bool any = false;
        for (std::size_t j = first; j <= last; ++j) any = any || !mask[j];
        if (!any) throw NumericalError("degenerate scaling");
    }
    std::vector<double> u(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        const std::vector<double>& t0_i =
            (config.t0_mode == T0Mode::DiggleLeaveOneOut) ? t0_family[i].values : t0.values;
        const ResidualFunction res =
            compute_residuals(estimates[i], t0_i, null, config.scaling, mask);
        u[i] = deviation_measure(res, config.interval, config.deviation);
    }

    int rank = 0;
    for (std::size_t i = 1; i < count; ++i)
        if (u[i] >= u[0]) ++rank;
    const double p = (1.0 + rank) / static_cast<double>(config.s + 1);

    std::vector<std::size_t> masked_points;
    const std::size_t first = config.grid.index_of(config.interval.r_min());
    const std::size_t last = config.grid.index_of(config.interval.r_max());
    for (std::size_t j = first; j <= last; ++j)
        if (mask[j]) masked_points.push_back(j);

    return TestResult{std::move(u), rank,    p,
                      std::move(estimates[0]), std::move(t0), std::move(null),
                      std::move(masked_points)};
}

}  // namespace markdev
