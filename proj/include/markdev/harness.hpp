#pragma once

#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "markdev/error.hpp"
#include "markdev/mctest.hpp"
#include "markdev/models.hpp"
#include "markdev/random.hpp"

namespace markdev {

/// One cell of the design cross applied to a simulated pattern.
struct StudyVariant {
    MarkFunctionKind f;
    TransformKind transformation;
    ScalingKind scaling;
    DeviationKind deviation;
    RGrid interval;
};

struct PowerRow {
    ModelFamily family;
    double parameter_value = 0.0;
    StudyVariant variant;
    std::size_t rejections = 0;
    std::size_t completed = 0;  // replicates that produced a p-value
    double power = 0.0;
    double stderr_ = 0.0;
};

struct PowerTable {
    std::vector<PowerRow> rows;
    std::size_t failed_replicates = 0;
};

inline std::pair<double, double> estimate_power(std::size_t rejections, std::size_t n) {
    if (n < 1 || rejections > n) throw ValidationError("invalid rejection count");
    const double p = static_cast<double>(rejections) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

/// Power study over one model's changing parameter and a design cross of
/// test variants. Every variant is evaluated on the same pattern and the
/// same s mark permutations; the per-pattern permuted K_f evaluations are
/// reused across transformations, scalings, measures and intervals.
struct StudyConfig {
    ModelSpec model;
    std::string changing_parameter;  // "theta", "a", "b", "sigma_eps"
    std::vector<double> values;
    std::size_t replicates = 200;
    int s = 199;
    double alpha = 0.05;
    EdgeCorrectionKind edge = EdgeCorrectionKind::Translational;
    std::vector<MarkFunctionKind> mark_functions{MarkFunctionKind::FirstMark};
    std::vector<TransformKind> transformations{TransformKind::Identity};
    std::vector<ScalingKind> scalings{ScalingKind::Raw};
    std::vector<DeviationKind> deviations{DeviationKind::Supremum};
    std::vector<RGrid> intervals{RGrid{0.0, 25.0, 0.25}};
    RGrid grid{0.0, 25.0, 0.25};
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const {
        model.validate();
        if (values.empty()) throw ValidationError("no parameter values");
        if (replicates < 1) throw ValidationError("replicate count must be positive");
        if (s < 1) throw ValidationError("simulation count must be at least 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
        if (mark_functions.empty() || transformations.empty() || scalings.empty() ||
            deviations.empty() || intervals.empty())
            throw ValidationError("empty design factor set");
        for (const RGrid& interval : intervals)
            if (!grid.contains_subgrid(interval))
                throw ValidationError("interval must be a sub-grid of the estimation grid");
        if (threads < 1) throw ValidationError("thread count must be at least 1");
    }

    std::vector<StudyVariant> variants() const {
        std::vector<StudyVariant> out;
        for (MarkFunctionKind f : mark_functions)
            for (TransformKind h : transformations)
                for (ScalingKind sc : scalings)
                    for (DeviationKind dev : deviations)
                        for (const RGrid& interval : intervals)
                            out.push_back(StudyVariant{f, h, sc, dev, interval});
        return out;
    }
};

inline ModelSpec apply_changing_parameter(ModelSpec spec, const std::string& name, double value) {
    if (name == "theta")
        spec.theta = value;
    else if (name == "a")
        spec.a = value;
    else if (name == "b")
        spec.b = value;
    else if (name == "sigma_eps")
        spec.sigma_eps = value;
    else
        throw ValidationError("unknown changing parameter: " + name);
    return spec;
}

namespace detail {

/// Rejection indicators of every variant for one simulated pattern.
inline std::vector<char> evaluate_variants(const MarkedPattern& pattern,
                                           const StudyConfig& config,
                                           const std::vector<StudyVariant>& variants,
                                           std::uint64_t perm_seed) {
    const PairGeometry geometry(pattern, config.edge, config.grid);
    const std::size_t count = static_cast<std::size_t>(config.s) + 1;

    std::vector<char> reject(variants.size(), 0);
    for (MarkFunctionKind f : config.mark_functions) {
        const double chat = estimate_chat_f(pattern, f);
        // same perm_seed for every f: the shuffles depend only on (seed, i),
        // so all mark functions see the identical permutation set
        const std::vector<FunctionEstimate> raw = permuted_estimates(
            geometry, pattern.marks(), f, chat, config.s, perm_seed, 1);
        const FunctionEstimate t0_raw = analytic_t0(geometry, pattern.marks());

        for (TransformKind h : config.transformations) {
            std::vector<FunctionEstimate> family;
            family.reserve(count);
            for (const auto& fe : raw) family.push_back(transform(fe, h));
            const FunctionEstimate t0 = transform(t0_raw, h);
            NullDistribution null = build_null_distribution(family, t0);
            null.source = NullDistribution::Source::AnalyticT0;

            for (ScalingKind sc : config.scalings) {
                const std::vector<char> mask = scaling_mask(null, sc);
                // u values for every (deviation, interval) pair at once
                std::vector<std::vector<double>> u(config.deviations.size() *
                                                   config.intervals.size());
                for (auto& v : u) v.reserve(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const ResidualFunction res =
                        compute_residuals(family[i], t0.values, null, sc, mask);
                    std::size_t cell = 0;
                    for (DeviationKind dev : config.deviations)
                        for (const RGrid& interval : config.intervals)
                            u[cell++].push_back(deviation_measure(res, interval, dev));
                }
                std::size_t cell = 0;
                for (std::size_t di = 0; di < config.deviations.size(); ++di) {
                    for (std::size_t ii = 0; ii < config.intervals.size(); ++ii, ++cell) {
                        int rank = 0;
                        for (std::size_t i = 1; i < count; ++i)
                            if (u[cell][i] >= u[cell][0]) ++rank;
                        const double p = (1.0 + rank) / static_cast<double>(config.s + 1);
                        // locate the variant index for (f, h, sc, dev, interval)
                        for (std::size_t v = 0; v < variants.size(); ++v) {
                            const StudyVariant& sv = variants[v];
                            if (sv.f == f && sv.transformation == h && sv.scaling == sc &&
                                sv.deviation == config.deviations[di] &&
                                sv.interval == config.intervals[ii])
                                reject[v] = p <= config.alpha;
                        }
                    }
                }
            }
        }
    }
    return reject;
}

}  // namespace detail

inline PowerTable run_power_study(const StudyConfig& config) {
    config.validate();
    const std::vector<StudyVariant> variants = config.variants();

    PowerTable table;
    for (std::size_t vi = 0; vi < config.values.size(); ++vi) {
        const double value = config.values[vi];
        const ModelSpec spec =
            apply_changing_parameter(config.model, config.changing_parameter, value);
        const ModelSimulator simulator(spec);

        std::vector<std::size_t> rejections(variants.size(), 0);
        std::size_t completed = 0;
        std::size_t failed = 0;
        std::mutex merge_mutex;

        auto worker = [&](std::size_t begin, std::size_t end) {
            std::vector<std::size_t> local_rej(variants.size(), 0);
            std::size_t local_done = 0;
            std::size_t local_fail = 0;
            for (std::size_t rep = begin; rep < end; ++rep) {
                const std::uint64_t rep_seed = derive_seed(config.seed, vi, rep);
                try {
                    std::mt19937_64 rng = make_rng(rep_seed);
                    const MarkedPattern pattern = simulator.simulate(rng);
                    const std::vector<char> reject = detail::evaluate_variants(
                        pattern, config, variants, derive_seed(rep_seed, 0x7065726dULL));
                    for (std::size_t v = 0; v < variants.size(); ++v)
                        local_rej[v] += reject[v] ? 1 : 0;
                    ++local_done;
                } catch (const NumericalError&) {
                    ++local_fail;  // recorded and excluded
                }
            }
            std::lock_guard<std::mutex> lock(merge_mutex);
            for (std::size_t v = 0; v < variants.size(); ++v) rejections[v] += local_rej[v];
            completed += local_done;
            failed += local_fail;
        };

        if (config.threads <= 1) {
            worker(0, config.replicates);
        } else {
            std::vector<std::thread> pool;
            const std::size_t per =
                (config.replicates + static_cast<std::size_t>(config.threads) - 1) /
                static_cast<std::size_t>(config.threads);
            for (int t = 0; t < config.threads; ++t) {
                const std::size_t begin = static_cast<std::size_t>(t) * per;
                const std::size_t end = std::min(config.replicates, begin + per);
                if (begin < end) pool.emplace_back(worker, begin, end);
            }
            for (auto& th : pool) th.join();
        }

        table.failed_replicates += failed;
        for (std::size_t v = 0; v < variants.size(); ++v) {
            PowerRow row{spec.family, value, variants[v], rejections[v], completed, 0.0, 0.0};
            if (completed > 0) {
                const auto [p, se] = estimate_power(rejections[v], completed);
                row.power = p;
                row.stderr_ = se;
            }
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace markdev
