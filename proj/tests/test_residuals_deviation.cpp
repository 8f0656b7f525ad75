#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "markdev/deviation.hpp"
#include "markdev/residuals.hpp"

using namespace markdev;

namespace {

FunctionEstimate constant_fn(const RGrid& grid, double v) {
    return FunctionEstimate(grid, std::vector<double>(grid.size(), v));
}

}  // namespace

TEST_CASE("null distribution summaries") {
    RGrid grid(0.0, 1.0, 1.0);

    SECTION("identical functions degenerate") {
        std::vector<FunctionEstimate> fns(5, constant_fn(grid, 3.0));
        auto null = build_null_distribution(fns, constant_fn(grid, 3.0));
        CHECK(null.variance[0] == 0.0);
        CHECK(null.q_lower[0] == null.q_upper[0]);
        CHECK(null.quantiles_unreliable);
    }
    SECTION("order-statistic quantile rule, count 1000") {
        std::vector<FunctionEstimate> fns;
        std::vector<int> order(1000);
        for (int i = 0; i < 1000; ++i) order[i] = i + 1;
        std::mt19937_64 rng(3);
        std::shuffle(order.begin(), order.end(), rng);
        for (int v : order)
            fns.push_back(constant_fn(grid, static_cast<double>(v)));
        auto null = build_null_distribution(fns, constant_fn(grid, 500.5));
        CHECK(null.q_lower[0] == 25.0);
        CHECK(null.q_upper[0] == 976.0);
        CHECK_FALSE(null.quantiles_unreliable);
    }
    SECTION("two-function sample variance") {
        std::vector<FunctionEstimate> fns = {constant_fn(grid, 0.0), constant_fn(grid, 2.0)};
        auto null = build_null_distribution(fns, constant_fn(grid, 1.0));
        CHECK(null.variance[0] == Catch::Approx(2.0));
        CHECK(null.q_lower[0] == 0.0);
        CHECK(null.q_upper[0] == 2.0);
    }
    SECTION("mean field is the supplied t0") {
        std::vector<FunctionEstimate> fns = {constant_fn(grid, 0.0), constant_fn(grid, 2.0)};
        auto null = build_null_distribution(fns, constant_fn(grid, 7.0));
        CHECK(null.mean[0] == 7.0);
    }
    SECTION("grid mismatch") {
        std::vector<FunctionEstimate> fns = {constant_fn(grid, 0.0), constant_fn(grid, 2.0)};
        CHECK_THROWS_WITH(build_null_distribution(fns, constant_fn(RGrid(0, 2, 1), 1.0)),
                          "incompatible grids");
    }
    SECTION("fewer than two functions") {
        std::vector<FunctionEstimate> fns = {constant_fn(grid, 0.0)};
        CHECK_THROWS_AS(build_null_distribution(fns, constant_fn(grid, 0.0)), ValidationError);
    }
}

TEST_CASE("residual scalings") {
    RGrid grid(0.0, 1.0, 1.0);
    NullDistribution null{grid, {5.0, 5.0}, {4.0, 4.0}, {4.0, 4.0}, {7.0, 7.0},
                          NullDistribution::Source::Simulated, false};

    SECTION("T = T0 gives zero under every scaling") {
        auto t = constant_fn(grid, 5.0);
        for (auto s : {ScalingKind::Raw, ScalingKind::Studentised, ScalingKind::Quantile,
                       ScalingKind::DirectionalQuantile}) {
            auto r = compute_residuals(t, null, s);
            CHECK(r.values[0] == 0.0);
            CHECK(r.values[1] == 0.0);
        }
    }
    SECTION("studentised hand computation") {
        auto r = compute_residuals(constant_fn(grid, 7.0), null, ScalingKind::Studentised);
        CHECK(r.values[0] == Catch::Approx(1.0));
    }
    SECTION("quantile hand computation") {
        auto r = compute_residuals(constant_fn(grid, 7.0), null, ScalingKind::Quantile);
        CHECK(r.values[0] == Catch::Approx(2.0 / 3.0));
    }
    SECTION("directional quantile negative branch") {
        auto r = compute_residuals(constant_fn(grid, 3.0), null,
                                   ScalingKind::DirectionalQuantile);
        // d = -2, lower quantile distance |4 - 5| = 1
        CHECK(r.values[0] == Catch::Approx(-2.0));
    }
    SECTION("directional quantile positive branch") {
        auto r = compute_residuals(constant_fn(grid, 6.0), null,
                                   ScalingKind::DirectionalQuantile);
        CHECK(r.values[0] == Catch::Approx(0.5));
    }
    SECTION("raw residuals are antisymmetric") {
        auto a = compute_residuals(constant_fn(grid, 8.0), null, ScalingKind::Raw);
        NullDistribution swapped = null;
        swapped.mean = {8.0, 8.0};
        auto b = compute_residuals(constant_fn(grid, 5.0), swapped, ScalingKind::Raw);
        CHECK(a.values[0] == -b.values[0]);
    }
    SECTION("sign is preserved by every scaling") {
        for (double tv : {2.0, 6.5}) {
            const double sign = tv - 5.0 > 0 ? 1.0 : -1.0;
            for (auto s : {ScalingKind::Raw, ScalingKind::Studentised, ScalingKind::Quantile,
                           ScalingKind::DirectionalQuantile}) {
                auto r = compute_residuals(constant_fn(grid, tv), null, s);
                CHECK(r.values[0] * sign > 0.0);
            }
        }
    }
}

TEST_CASE("positive homogeneity of studentised and quantile scalings") {
    RGrid grid(0.0, 2.0, 1.0);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(10.0, 2.0);
    std::vector<FunctionEstimate> fns;
    for (int i = 0; i < 50; ++i)
        fns.push_back(FunctionEstimate(grid, {g(rng), g(rng), g(rng)}));
    FunctionEstimate t(grid, {g(rng), g(rng), g(rng)});
    FunctionEstimate t0(grid, {10.0, 10.0, 10.0});

    const double a = 3.25;
    std::vector<FunctionEstimate> scaled_fns = fns;
    for (auto& fe : scaled_fns)
        for (double& v : fe.values) v *= a;
    FunctionEstimate ta = t;
    for (double& v : ta.values) v *= a;
    FunctionEstimate t0a = t0;
    for (double& v : t0a.values) v *= a;

    auto null = build_null_distribution(fns, t0);
    auto nulla = build_null_distribution(scaled_fns, t0a);
    for (auto s : {ScalingKind::Studentised, ScalingKind::Quantile,
                   ScalingKind::DirectionalQuantile}) {
        auto r = compute_residuals(t, null, s);
        auto ra = compute_residuals(ta, nulla, s);
        for (std::size_t j = 0; j < grid.size(); ++j)
            CHECK(r.values[j] == Catch::Approx(ra.values[j]).epsilon(1e-10));
    }
}

TEST_CASE("masking of degenerate denominators") {
    RGrid grid(0.0, 1.0, 1.0);
    // first grid point has zero spread, second is fine
    NullDistribution null{grid, {0.0, 5.0}, {0.0, 4.0}, {0.0, 4.0}, {0.0, 7.0},
                          NullDistribution::Source::Simulated, false};

    SECTION("studentised masks the degenerate point only") {
        auto r = compute_residuals(constant_fn(grid, 6.0), null, ScalingKind::Studentised);
        CHECK(r.masked[0] == 1);
        CHECK(r.masked[1] == 0);
        CHECK(r.values[0] == 0.0);
    }
    SECTION("raw never masks") {
        auto r = compute_residuals(constant_fn(grid, 6.0), null, ScalingKind::Raw);
        CHECK(r.masked[0] == 0);
        CHECK(r.masked[1] == 0);
    }
    SECTION("directional quantile masks if either side is degenerate") {
        NullDistribution one_sided{grid, {5.0, 5.0}, {4.0, 4.0}, {5.0, 4.0}, {7.0, 7.0},
                                   NullDistribution::Source::Simulated, false};
        auto mask = scaling_mask(one_sided, ScalingKind::DirectionalQuantile);
        CHECK(mask[0] == 1);
        CHECK(mask[1] == 0);
    }
    SECTION("all points masked is an error") {
        NullDistribution flat{grid, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0},
                              NullDistribution::Source::Simulated, false};
        CHECK_THROWS_WITH(compute_residuals(constant_fn(grid, 1.0), flat,
                                            ScalingKind::Studentised),
                          "degenerate scaling");
    }
}

TEST_CASE("deviation measures") {
    RGrid grid(0.0, 2.0, 1.0);

    SECTION("supremum hand computation") {
        ResidualFunction d{grid, {0.5, -2.0, 1.0}, {0, 0, 0}};
        CHECK(deviation_measure(d, grid, DeviationKind::Supremum) == 2.0);
    }
    SECTION("integral hand computation") {
        RGrid g(0.0, 0.5, 0.5);
        ResidualFunction d{g, {1.0, 2.0}, {0, 0}};
        CHECK(deviation_measure(d, g, DeviationKind::IntegralL2) == Catch::Approx(2.5));
    }
    SECTION("zero residual") {
        ResidualFunction d{grid, {0.0, 0.0, 0.0}, {0, 0, 0}};
        CHECK(deviation_measure(d, grid, DeviationKind::Supremum) == 0.0);
        CHECK(deviation_measure(d, grid, DeviationKind::IntegralL2) == 0.0);
    }
    SECTION("sign flip invariance") {
        ResidualFunction d{grid, {0.5, -2.0, 1.0}, {0, 0, 0}};
        ResidualFunction neg{grid, {-0.5, 2.0, -1.0}, {0, 0, 0}};
        for (auto k : {DeviationKind::Supremum, DeviationKind::IntegralL2})
            CHECK(deviation_measure(d, grid, k) == deviation_measure(neg, grid, k));
    }
    SECTION("monotone in interval inclusion") {
        ResidualFunction d{grid, {0.5, -2.0, 1.0}, {0, 0, 0}};
        RGrid inner(0.0, 1.0, 1.0);
        for (auto k : {DeviationKind::Supremum, DeviationKind::IntegralL2})
            CHECK(deviation_measure(d, inner, k) <= deviation_measure(d, grid, k));
    }
    SECTION("positive homogeneity degrees") {
        ResidualFunction d{grid, {0.5, -2.0, 1.0}, {0, 0, 0}};
        ResidualFunction d3{grid, {1.5, -6.0, 3.0}, {0, 0, 0}};
        CHECK(deviation_measure(d3, grid, DeviationKind::Supremum) ==
              Catch::Approx(3.0 * deviation_measure(d, grid, DeviationKind::Supremum)));
        CHECK(deviation_measure(d3, grid, DeviationKind::IntegralL2) ==
              Catch::Approx(9.0 * deviation_measure(d, grid, DeviationKind::IntegralL2)));
    }
    SECTION("masked points are skipped") {
        ResidualFunction d{grid, {0.5, -2.0, 1.0}, {0, 1, 0}};
        CHECK(deviation_measure(d, grid, DeviationKind::Supremum) == 1.0);
        CHECK(deviation_measure(d, grid, DeviationKind::IntegralL2) ==
              Catch::Approx(0.25 + 1.0));
    }
    SECTION("fully masked interval") {
        ResidualFunction d{grid, {0.5, -2.0, 1.0}, {1, 1, 1}};
        CHECK_THROWS_WITH(deviation_measure(d, grid, DeviationKind::Supremum),
                          "empty interval");
    }
    SECTION("misaligned interval") {
        ResidualFunction d{grid, {0.5, -2.0, 1.0}, {0, 0, 0}};
        CHECK_THROWS_AS(deviation_measure(d, RGrid(0.0, 2.0, 0.5), DeviationKind::Supremum),
                        ValidationError);
    }
}
