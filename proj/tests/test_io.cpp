#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "markdev/io.hpp"
#include "oracles.hpp"

using namespace markdev;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }

    void write(const std::string& content) const {
        std::ofstream out(path);
        out << content;
    }
};

}  // namespace

TEST_CASE("name maps") {
    CHECK(parse_mark_function("1") == MarkFunctionKind::One);
    CHECK(parse_mark_function("m.") == MarkFunctionKind::FirstMark);
    CHECK(parse_mark_function("mm") == MarkFunctionKind::MarkProduct);
    CHECK(parse_mark_function("gamma") == MarkFunctionKind::HalfSquaredDifference);
    CHECK_THROWS_AS(parse_mark_function("m2"), ValidationError);

    CHECK(parse_transform("K") == TransformKind::Identity);
    CHECK(parse_transform("L") == TransformKind::SqrtOverPi);
    CHECK(parse_scaling("qdir") == ScalingKind::DirectionalQuantile);
    CHECK(parse_deviation("int") == DeviationKind::IntegralL2);
    CHECK(parse_model_family("GNCP") == ModelFamily::GNCP);

    SECTION("round trip through the names") {
        for (auto f : {MarkFunctionKind::One, MarkFunctionKind::FirstMark,
                       MarkFunctionKind::MarkProduct, MarkFunctionKind::HalfSquaredDifference})
            CHECK(parse_mark_function(mark_function_name(f)) == f);
        for (auto s : {ScalingKind::Raw, ScalingKind::Studentised, ScalingKind::Quantile,
                       ScalingKind::DirectionalQuantile})
            CHECK(parse_scaling(scaling_name(s)) == s);
        for (auto m : {ModelFamily::SeqNIMPP, ModelFamily::ExpNIMCP, ModelFamily::ExpPIMCP,
                       ModelFamily::GNIMCP, ModelFamily::GNCP})
            CHECK(parse_model_family(model_family_name(m)) == m);
    }
}

TEST_CASE("pattern CSV round trip") {
    const Window w(0.0, 10.0, 0.0, 10.0);
    std::mt19937_64 rng(61);
    auto p = markdev::testing::random_pattern(40, w, rng);

    TempFile f("markdev_io_roundtrip.csv");
    write_pattern_csv(f.path, p);
    auto q = read_pattern_csv(f.path, w);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(q.points()[i].x == p.points()[i].x);
        CHECK(q.points()[i].y == p.points()[i].y);
        CHECK(q.marks()[i] == p.marks()[i]);
    }
}

TEST_CASE("pattern CSV errors carry line numbers") {
    const Window w(0.0, 10.0, 0.0, 10.0);
    TempFile f("markdev_io_bad.csv");

    SECTION("bad header") {
        f.write("x,y\n1,2\n");
        CHECK_THROWS_WITH(read_pattern_csv(f.path, w),
                          "pattern file must start with header 'x,y,mark'");
    }
    SECTION("malformed row") {
        f.write("x,y,mark\n1,2,3\n4,notanumber,1\n");
        CHECK_THROWS_WITH(read_pattern_csv(f.path, w), "malformed row at line 3");
    }
    SECTION("missing field") {
        f.write("x,y,mark\n1,2\n");
        CHECK_THROWS_WITH(read_pattern_csv(f.path, w), "malformed row at line 2");
    }
    SECTION("negative mark") {
        f.write("x,y,mark\n1,2,-0.5\n");
        CHECK_THROWS_WITH(read_pattern_csv(f.path, w), "negative mark at line 2");
    }
    SECTION("point outside window") {
        f.write("x,y,mark\n1,2,1\n11,2,1\n");
        CHECK_THROWS_WITH(read_pattern_csv(f.path, w),
                          Catch::Matchers::StartsWith("point outside window at line 3"));
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(read_pattern_csv("/nonexistent/nope.csv", w), ValidationError);
    }
}

TEST_CASE("test config parsing") {
    SECTION("defaults") {
        auto run = parse_test_config(json{{"window", {0.0, 100.0, 0.0, 100.0}}});
        CHECK(run.config.f == MarkFunctionKind::MarkProduct);
        CHECK(run.config.edge == EdgeCorrectionKind::Translational);
        CHECK(run.config.scaling == ScalingKind::Raw);
        CHECK(run.config.s == 999);
        CHECK(run.config.grid.step() == 0.25);
        CHECK(run.config.grid.r_max() == 25.0);
        CHECK(run.config.interval == run.config.grid);
        CHECK(run.config.t0_mode == T0Mode::Analytic);
    }
    SECTION("interval resolution") {
        auto run = parse_test_config(json{{"window", {0.0, 100.0, 0.0, 100.0}},
                                          {"interval", {{"r_min", 4.0}, {"r_max", 8.0}}}});
        CHECK(run.config.interval.size() == 17);
    }
    SECTION("echoed defaults include the masking epsilon") {
        TestRun run;
        auto j = test_config_to_json(run);
        CHECK(j["epsilon_denominator"] == 1e-12);
        CHECK(j["scaling"] == "raw");
        // echo parses back to the same config
        j.erase("epsilon_denominator");
        auto back = parse_test_config(j);
        CHECK(back.config.f == run.config.f);
        CHECK(back.config.grid == run.config.grid);
    }
    SECTION("strict keys") {
        CHECK_THROWS_WITH(parse_test_config(json{{"window", {0.0, 1.0, 0.0, 1.0}},
                                                 {"fn", "mm"}}),
                          "unknown key 'fn' in test config");
        CHECK_THROWS_WITH(parse_test_config(json::object()),
                          "missing required key 'window' in test config");
    }
    SECTION("bad enum values") {
        CHECK_THROWS_AS(parse_test_config(json{{"window", {0.0, 1.0, 0.0, 1.0}},
                                               {"scaling", "quantile"}}),
                        ValidationError);
        CHECK_THROWS_AS(parse_test_config(json{{"window", {0.0, 1.0, 0.0, 1.0}},
                                               {"t0_mode", "exact"}}),
                        ValidationError);
    }
}

TEST_CASE("model spec parsing") {
    SECTION("defaults fill Table-style parameters") {
        auto spec = parse_model_spec(json{{"family", "SeqNIMPP"}});
        CHECK(spec.n == 200);
        CHECK(spec.mark_mean == 24.0);
        CHECK(spec.mark_variance == 9.0);
        CHECK(spec.interaction_radius == 6.0);
        CHECK(spec.field.mean == -4.4);
        CHECK(spec.field.range == 4.0);
        CHECK(spec.field.cell == 0.5);
        CHECK_FALSE(spec.detach_marks);
    }
    SECTION("round trip") {
        auto spec = parse_model_spec(json{{"family", "GNIMCP"},
                                          {"n", 50},
                                          {"a", 24.0},
                                          {"b", -0.12},
                                          {"sigma_eps", 0.5},
                                          {"window", {0.0, 50.0, 0.0, 50.0}}});
        auto back = parse_model_spec(model_spec_to_json(spec));
        CHECK(back.family == spec.family);
        CHECK(back.b == spec.b);
        CHECK(back.window.x_max() == 50.0);
    }
    SECTION("validation runs at parse time") {
        CHECK_THROWS_AS(parse_model_spec(json{{"family", "GNCP"}, {"a", 0.0}}),
                        ValidationError);
        CHECK_THROWS_WITH(parse_model_spec(json{{"family", "SeqNIMPP"}, {"R", 6.0}}),
                          "unknown key 'R' in model spec");
    }
}

TEST_CASE("study config parsing") {
    const json base{{"model", {{"family", "SeqNIMPP"}, {"n", 30},
                               {"window", {0.0, 20.0, 0.0, 20.0}}}},
                    {"changing_parameter", "theta"},
                    {"values", {0.0, 0.1, 0.2}}};

    SECTION("defaults") {
        auto c = parse_study_config(base);
        CHECK(c.replicates == 200);
        CHECK(c.s == 199);
        CHECK(c.alpha == 0.05);
        CHECK(c.grid.r_max() == 25.0);
        CHECK(c.values.size() == 3);
    }
    SECTION("interval pairs use the grid step") {
        json j = base;
        j["intervals"] = json::array({json::array({4.0, 8.0}), json::array({3.0, 15.0})});
        auto c = parse_study_config(j);
        REQUIRE(c.intervals.size() == 2);
        CHECK(c.intervals[0].size() == 17);
        CHECK(c.intervals[1].step() == 0.25);
    }
    SECTION("round trip") {
        json j = base;
        j["mark_functions"] = {"m.", "gamma"};
        j["scalings"] = {"raw", "qdir"};
        auto c = parse_study_config(j);
        auto back = parse_study_config(study_config_to_json(c));
        CHECK(back.mark_functions == c.mark_functions);
        CHECK(back.scalings == c.scalings);
        CHECK(back.values == c.values);
    }
    SECTION("strict keys") {
        json j = base;
        j["reps"] = 100;
        CHECK_THROWS_WITH(parse_study_config(j), "unknown key 'reps' in study config");
    }
}

TEST_CASE("manifest") {
    TempFile input("markdev_io_input.csv");
    input.write("x,y,mark\n1,2,3\n");
    TempFile manifest("markdev_io_manifest.json");

    SECTION("digest is content-determined") {
        const std::string d1 = file_digest(input.path);
        CHECK(d1.size() == 16);
        CHECK(d1 == file_digest(input.path));
        input.write("x,y,mark\n1,2,4\n");
        CHECK(d1 != file_digest(input.path));
    }
    SECTION("manifest records the run") {
        write_manifest(manifest.path, "test", json{{"s", 99}}, 42, {1, 2, 3},
                       json{{"pattern", file_digest(input.path)}});
        std::ifstream in(manifest.path);
        json j = json::parse(in);
        CHECK(j["tool_version"] == kToolVersion);
        CHECK(j["subcommand"] == "test");
        CHECK(j["master_seed"] == 42);
        CHECK(j["derived_seeds"].size() == 3);
        CHECK(j["config"]["s"] == 99);
        CHECK(j.contains("timestamp"));
    }
}
