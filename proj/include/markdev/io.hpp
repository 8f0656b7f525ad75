#pragma once

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "markdev/error.hpp"
#include "markdev/estimators.hpp"
#include "markdev/geometry.hpp"
#include "markdev/harness.hpp"
#include "markdev/mctest.hpp"
#include "markdev/models.hpp"

namespace markdev {

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// name maps (string labels follow the figure labels: raw/st/q/qdir, sup/int)
// ---------------------------------------------------------------------------

inline MarkFunctionKind parse_mark_function(const std::string& s) {
    if (s == "1" || s == "one") return MarkFunctionKind::One;
    if (s == "m." || s == "m1") return MarkFunctionKind::FirstMark;
    if (s == "mm") return MarkFunctionKind::MarkProduct;
    if (s == "gamma") return MarkFunctionKind::HalfSquaredDifference;
    throw ValidationError("unknown mark test function: " + s);
}

inline std::string mark_function_name(MarkFunctionKind f) {
    switch (f) {
        case MarkFunctionKind::One: return "1";
        case MarkFunctionKind::FirstMark: return "m.";
        case MarkFunctionKind::MarkProduct: return "mm";
        case MarkFunctionKind::HalfSquaredDifference: return "gamma";
    }
    return "?";
}

inline EdgeCorrectionKind parse_edge(const std::string& s) {
    if (s == "translational") return EdgeCorrectionKind::Translational;
    if (s == "none") return EdgeCorrectionKind::None;
    throw ValidationError("unknown edge correction: " + s);
}

inline std::string edge_name(EdgeCorrectionKind e) {
    return e == EdgeCorrectionKind::Translational ? "translational" : "none";
}

inline TransformKind parse_transform(const std::string& s) {
    if (s == "identity" || s == "K") return TransformKind::Identity;
    if (s == "sqrt" || s == "L") return TransformKind::SqrtOverPi;
    if (s == "arcsin") return TransformKind::ArcsinSqrtComplement;
    throw ValidationError("unknown transformation: " + s);
}

inline std::string transform_name(TransformKind h) {
    switch (h) {
        case TransformKind::Identity: return "identity";
        case TransformKind::SqrtOverPi: return "sqrt";
        case TransformKind::ArcsinSqrtComplement: return "arcsin";
    }
    return "?";
}

inline ScalingKind parse_scaling(const std::string& s) {
    if (s == "raw") return ScalingKind::Raw;
    if (s == "st") return ScalingKind::Studentised;
    if (s == "q") return ScalingKind::Quantile;
    if (s == "qdir") return ScalingKind::DirectionalQuantile;
    throw ValidationError("unknown scaling: " + s);
}

inline std::string scaling_name(ScalingKind s) {
    switch (s) {
        case ScalingKind::Raw: return "raw";
        case ScalingKind::Studentised: return "st";
        case ScalingKind::Quantile: return "q";
        case ScalingKind::DirectionalQuantile: return "qdir";
    }
    return "?";
}

inline DeviationKind parse_deviation(const std::string& s) {
    if (s == "sup") return DeviationKind::Supremum;
    if (s == "int") return DeviationKind::IntegralL2;
    throw ValidationError("unknown deviation measure: " + s);
}

inline std::string deviation_name(DeviationKind d) {
    return d == DeviationKind::Supremum ? "sup" : "int";
}

inline ModelFamily parse_model_family(const std::string& s) {
    if (s == "SeqNIMPP") return ModelFamily::SeqNIMPP;
    if (s == "ExpNIMCP") return ModelFamily::ExpNIMCP;
    if (s == "ExpPIMCP") return ModelFamily::ExpPIMCP;
    if (s == "GNIMCP") return ModelFamily::GNIMCP;
    if (s == "GNCP") return ModelFamily::GNCP;
    throw ValidationError("unknown model family: " + s);
}

inline std::string model_family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::SeqNIMPP: return "SeqNIMPP";
        case ModelFamily::ExpNIMCP: return "ExpNIMCP";
        case ModelFamily::ExpPIMCP: return "ExpPIMCP";
        case ModelFamily::GNIMCP: return "GNIMCP";
        case ModelFamily::GNCP: return "GNCP";
    }
    return "?";
}

/// 17 significant digits: lossless round-trip for doubles.
inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// pattern CSV
// ---------------------------------------------------------------------------

/// Read a marked pattern from CSV with header `x,y,mark`; the window comes
/// from configuration, not the file.
inline MarkedPattern read_pattern_csv(const std::string& path, const Window& window) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pattern file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty pattern file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,mark")
        throw ValidationError("pattern file must start with header 'x,y,mark'");

    std::vector<Point> points;
    std::vector<double> marks;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string fx, fy, fm;
        if (!std::getline(row, fx, ',') || !std::getline(row, fy, ',') ||
            !std::getline(row, fm, ','))
            throw ValidationError("malformed row at line " + std::to_string(line_no));
        double x, y, m;
        try {
            std::size_t used = 0;
            x = std::stod(fx, &used);
            y = std::stod(fy);
            m = std::stod(fm);
            (void)used;
        } catch (const std::exception&) {
            throw ValidationError("malformed row at line " + std::to_string(line_no));
        }
        if (m < 0.0)
            throw ValidationError("negative mark at line " + std::to_string(line_no));
        if (!window.contains(x, y))
            throw ValidationError("point outside window at line " + std::to_string(line_no) +
                                  " (" + format_double(x) + "," + format_double(y) + ")");
        points.push_back(Point{x, y});
        marks.push_back(m);
    }
    return MarkedPattern(std::move(points), std::move(marks), window);
}

inline void write_pattern_csv(const std::string& path, const MarkedPattern& pattern) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write pattern file: " + path);
    out << "x,y,mark\n";
    for (std::size_t i = 0; i < pattern.size(); ++i)
        out << format_double(pattern.points()[i].x) << ',' << format_double(pattern.points()[i].y)
            << ',' << format_double(pattern.marks()[i]) << '\n';
}

// ---------------------------------------------------------------------------
// JSON configs
// ---------------------------------------------------------------------------

using json = nlohmann::json;

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::vector<std::string>& required, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError("unknown key '" + key + "' in " + where);
    }
    for (const std::string& key : required)
        if (!j.contains(key))
            throw ValidationError("missing required key '" + key + "' in " + where);
}

inline Window parse_window_json(const json& j) {
    if (!j.is_array() || j.size() != 4)
        throw ValidationError("window must be an array [x_min,x_max,y_min,y_max]");
    return Window(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                  j[3].get<double>());
}

inline RGrid parse_grid_json(const json& j, const std::string& where) {
    check_keys(j, {"r_min", "r_max", "step"}, {"r_min", "r_max"}, where);
    return RGrid(j["r_min"].get<double>(), j["r_max"].get<double>(),
                 j.value("step", 0.25));
}

/// Test configuration document: window + test parameters with defaults.
struct TestRun {
    Window window{0.0, 100.0, 0.0, 100.0};
    TestConfig config;
};

inline TestRun parse_test_config(const json& j) {
    check_keys(j,
               {"window", "f", "edge", "transformation", "scaling", "deviation", "grid",
                "interval", "s", "t0_mode", "threads"},
               {"window"}, "test config");
    TestRun run;
    run.window = parse_window_json(j.at("window"));
    TestConfig& c = run.config;
    c.f = parse_mark_function(j.value("f", std::string("mm")));
    c.edge = parse_edge(j.value("edge", std::string("translational")));
    c.transformation = parse_transform(j.value("transformation", std::string("identity")));
    c.scaling = parse_scaling(j.value("scaling", std::string("raw")));
    c.deviation = parse_deviation(j.value("deviation", std::string("sup")));
    if (j.contains("grid")) c.grid = parse_grid_json(j["grid"], "grid");
    c.interval = j.contains("interval") ? parse_grid_json(j["interval"], "interval") : c.grid;
    c.s = j.value("s", 999);
    const std::string mode = j.value("t0_mode", std::string("analytic"));
    if (mode == "analytic")
        c.t0_mode = T0Mode::Analytic;
    else if (mode == "diggle")
        c.t0_mode = T0Mode::DiggleLeaveOneOut;
    else
        throw ValidationError("unknown t0_mode: " + mode);
    c.threads = j.value("threads", 1);
    c.validate();
    return run;
}

inline json test_config_to_json(const TestRun& run) {
    const TestConfig& c = run.config;
    return json{{"window", {run.window.x_min(), run.window.x_max(), run.window.y_min(),
                            run.window.y_max()}},
                {"f", mark_function_name(c.f)},
                {"edge", edge_name(c.edge)},
                {"transformation", transform_name(c.transformation)},
                {"scaling", scaling_name(c.scaling)},
                {"deviation", deviation_name(c.deviation)},
                {"grid", {{"r_min", c.grid.r_min()}, {"r_max", c.grid.r_max()},
                          {"step", c.grid.step()}}},
                {"interval", {{"r_min", c.interval.r_min()}, {"r_max", c.interval.r_max()},
                              {"step", c.interval.step()}}},
                {"s", c.s},
                {"t0_mode", c.t0_mode == T0Mode::Analytic ? "analytic" : "diggle"},
                {"threads", c.threads},
                {"epsilon_denominator", kDenominatorEpsilon}};
}

inline ModelSpec parse_model_spec(const json& j) {
    check_keys(j,
               {"family", "n", "window", "mark_mean", "mark_variance", "theta",
                "interaction_radius", "a", "b", "sigma_eps", "field", "detach_marks"},
               {"family"}, "model spec");
    ModelSpec spec;
    spec.family = parse_model_family(j.at("family").get<std::string>());
    spec.n = j.value("n", 200);
    if (j.contains("window")) spec.window = parse_window_json(j["window"]);
    spec.mark_mean = j.value("mark_mean", 24.0);
    spec.mark_variance = j.value("mark_variance", 9.0);
    spec.theta = j.value("theta", 0.0);
    spec.interaction_radius = j.value("interaction_radius", 6.0);
    spec.a = j.value("a", 0.0);
    spec.b = j.value("b", 0.0);
    spec.sigma_eps = j.value("sigma_eps", 0.0);
    if (j.contains("field")) {
        check_keys(j["field"], {"mean", "range", "cell"}, {}, "field spec");
        spec.field.mean = j["field"].value("mean", -4.4);
        spec.field.range = j["field"].value("range", 4.0);
        spec.field.cell = j["field"].value("cell", 0.5);
    }
    spec.detach_marks = j.value("detach_marks", false);
    spec.validate();
    return spec;
}

inline json model_spec_to_json(const ModelSpec& spec) {
    return json{{"family", model_family_name(spec.family)},
                {"n", spec.n},
                {"window", {spec.window.x_min(), spec.window.x_max(), spec.window.y_min(),
                            spec.window.y_max()}},
                {"mark_mean", spec.mark_mean},
                {"mark_variance", spec.mark_variance},
                {"theta", spec.theta},
                {"interaction_radius", spec.interaction_radius},
                {"a", spec.a},
                {"b", spec.b},
                {"sigma_eps", spec.sigma_eps},
                {"field", {{"mean", spec.field.mean}, {"range", spec.field.range},
                           {"cell", spec.field.cell}}},
                {"detach_marks", spec.detach_marks}};
}

inline StudyConfig parse_study_config(const json& j) {
    check_keys(j,
               {"model", "changing_parameter", "values", "replicates", "s", "alpha", "edge",
                "mark_functions", "transformations", "scalings", "deviations", "intervals",
                "grid", "threads"},
               {"model", "changing_parameter", "values"}, "study config");
    StudyConfig c;
    c.model = parse_model_spec(j.at("model"));
    c.changing_parameter = j.at("changing_parameter").get<std::string>();
    c.values = j.at("values").get<std::vector<double>>();
    c.replicates = j.value("replicates", 200);
    c.s = j.value("s", 199);
    c.alpha = j.value("alpha", 0.05);
    c.edge = parse_edge(j.value("edge", std::string("translational")));
    if (j.contains("mark_functions")) {
        c.mark_functions.clear();
        for (const auto& s : j["mark_functions"])
            c.mark_functions.push_back(parse_mark_function(s.get<std::string>()));
    }
    if (j.contains("transformations")) {
        c.transformations.clear();
        for (const auto& s : j["transformations"])
            c.transformations.push_back(parse_transform(s.get<std::string>()));
    }
    if (j.contains("scalings")) {
        c.scalings.clear();
        for (const auto& s : j["scalings"]) c.scalings.push_back(parse_scaling(s.get<std::string>()));
    }
    if (j.contains("deviations")) {
        c.deviations.clear();
        for (const auto& s : j["deviations"])
            c.deviations.push_back(parse_deviation(s.get<std::string>()));
    }
    if (j.contains("grid")) c.grid = parse_grid_json(j["grid"], "grid");
    if (j.contains("intervals")) {
        c.intervals.clear();
        for (const auto& iv : j["intervals"]) {
            if (iv.is_array() && iv.size() == 2)
                c.intervals.emplace_back(iv[0].get<double>(), iv[1].get<double>(), c.grid.step());
            else
                c.intervals.push_back(parse_grid_json(iv, "interval"));
        }
    }
    c.threads = j.value("threads", 1);
    c.validate();
    return c;
}

inline json study_config_to_json(const StudyConfig& c) {
    json intervals = json::array();
    for (const RGrid& iv : c.intervals)
        intervals.push_back({{"r_min", iv.r_min()}, {"r_max", iv.r_max()}, {"step", iv.step()}});
    json fs = json::array(), hs = json::array(), scs = json::array(), devs = json::array();
    for (auto f : c.mark_functions) fs.push_back(mark_function_name(f));
    for (auto h : c.transformations) hs.push_back(transform_name(h));
    for (auto s : c.scalings) scs.push_back(scaling_name(s));
    for (auto d : c.deviations) devs.push_back(deviation_name(d));
    return json{{"model", model_spec_to_json(c.model)},
                {"changing_parameter", c.changing_parameter},
                {"values", c.values},
                {"replicates", c.replicates},
                {"s", c.s},
                {"alpha", c.alpha},
                {"edge", edge_name(c.edge)},
                {"mark_functions", fs},
                {"transformations", hs},
                {"scalings", scs},
                {"deviations", devs},
                {"intervals", intervals},
                {"grid", {{"r_min", c.grid.r_min()}, {"r_max", c.grid.r_max()},
                          {"step", c.grid.step()}}},
                {"threads", c.threads}};
}

// ---------------------------------------------------------------------------
// run manifest
// ---------------------------------------------------------------------------

/// FNV-1a digest of a file's bytes, for reproducibility bookkeeping.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file for digest: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline void write_manifest(const std::string& path, const std::string& subcommand,
                           const json& resolved_config, std::uint64_t master_seed,
                           const std::vector<std::uint64_t>& derived_seeds,
                           const json& input_digests) {
    json manifest{{"tool_version", kToolVersion},
                  {"subcommand", subcommand},
                  {"config", resolved_config},
                  {"master_seed", master_seed},
                  {"derived_seeds", derived_seeds},
                  {"input_digests", input_digests},
                  {"timestamp", static_cast<std::int64_t>(std::time(nullptr))}};
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write manifest: " + path);
    out << manifest.dump(2) << '\n';
}

}  // namespace markdev
