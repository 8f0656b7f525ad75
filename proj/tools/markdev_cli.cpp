// Command-line front end: deviation tests for marked point patterns,
// simulators for the alternative models, the power-study harness and the
// analytic toy-example power curves.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "markdev/harness.hpp"
#include "markdev/io.hpp"
#include "markdev/mctest.hpp"
#include "markdev/models.hpp"
#include "markdev/toypower.hpp"

namespace fs = std::filesystem;
using namespace markdev;

namespace {

int cmd_test(const std::string& pattern_path, const std::string& config_path,
             std::uint64_t seed, const std::string& out_path) {
    std::ifstream cfg(config_path);
    if (!cfg) throw ValidationError("cannot open config file: " + config_path);
    json j = json::parse(cfg);
    TestRun run = parse_test_config(j);
    run.config.seed = seed;

    const MarkedPattern pattern = read_pattern_csv(pattern_path, run.window);
    if (pattern.has_duplicate_points())
        std::cerr << "warning: pattern contains duplicate point locations\n";
    const TestResult result = run_test(pattern, run.config);

    const ResidualFunction residual = compute_residuals(
        result.t_data, result.t0.values, result.null, run.config.scaling,
        scaling_mask(result.null, run.config.scaling));

    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write output file: " + out_path);
    out << "r,T_data,T0,q_lower,q_upper,residual\n";
    for (std::size_t i = 0; i < result.t_data.grid.size(); ++i) {
        out << format_double(result.t_data.grid.value(i)) << ','
            << format_double(result.t_data.values[i]) << ','
            << format_double(result.t0.values[i]) << ','
            << format_double(result.null.q_lower[i]) << ','
            << format_double(result.null.q_upper[i]) << ','
            << (residual.masked[i] ? std::string("masked") : format_double(residual.values[i]))
            << '\n';
    }
    out << "p_value," << format_double(result.p_value) << '\n';
    out << "u_data," << format_double(result.u[0]) << '\n';

    write_manifest(out_path + ".manifest.json", "test", test_config_to_json(run), seed, {},
                   json{{"pattern", file_digest(pattern_path)},
                        {"config", file_digest(config_path)}});
    std::cout << "p_value = " << result.p_value << " (u_data = " << result.u[0] << ")\n";
    return 0;
}

int cmd_simulate(const std::string& model_name, const std::string& params_path, std::size_t n,
                 const std::vector<double>& window_spec, std::size_t reps, std::uint64_t seed,
                 const std::string& out_dir) {
    json params = json::object();
    json digests = json::object();
    if (!params_path.empty()) {
        std::ifstream in(params_path);
        if (!in) throw ValidationError("cannot open params file: " + params_path);
        params = json::parse(in);
        digests["params"] = file_digest(params_path);
    }
    params["family"] = model_name;
    if (n > 0) params["n"] = n;
    if (!window_spec.empty()) {
        if (window_spec.size() != 4)
            throw ValidationError("--window requires four values x0,x1,y0,y1");
        params["window"] = window_spec;
    }
    const ModelSpec spec = parse_model_spec(params);
    const ModelSimulator simulator(spec);

    fs::create_directories(out_dir);
    std::vector<std::uint64_t> derived;
    derived.reserve(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const std::uint64_t rep_seed = derive_seed(seed, rep);
        derived.push_back(rep_seed);
        const MarkedPattern pattern = simulator.simulate(rep_seed);
        char name[32];
        std::snprintf(name, sizeof(name), "pattern_%04zu.csv", rep);
        write_pattern_csv((fs::path(out_dir) / name).string(), pattern);
    }
    write_manifest((fs::path(out_dir) / "manifest.json").string(), "simulate",
                   model_spec_to_json(spec), seed, derived, digests);
    std::cout << "wrote " << reps << " pattern(s) to " << out_dir << '\n';
    return 0;
}

int cmd_power(const std::string& study_path, std::uint64_t seed, const std::string& out_path,
              bool full, int threads) {
    std::ifstream in(study_path);
    if (!in) throw ValidationError("cannot open study file: " + study_path);
    StudyConfig config = parse_study_config(json::parse(in));
    config.seed = seed;
    if (threads > 0) config.threads = threads;
    if (full) {
        config.replicates = 1000;
        config.s = 999;
    }

    const PowerTable table = run_power_study(config);

    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write output file: " + out_path);
    out << "model,value,f,transformation,scaling,deviation,interval_min,interval_max,"
           "rejections,N,power,stderr\n";
    for (const PowerRow& row : table.rows) {
        out << model_family_name(row.family) << ',' << format_double(row.parameter_value) << ','
            << mark_function_name(row.variant.f) << ','
            << transform_name(row.variant.transformation) << ','
            << scaling_name(row.variant.scaling) << ',' << deviation_name(row.variant.deviation)
            << ',' << format_double(row.variant.interval.r_min()) << ','
            << format_double(row.variant.interval.r_max()) << ',' << row.rejections << ','
            << row.completed << ',' << format_double(row.power) << ','
            << format_double(row.stderr_) << '\n';
    }
    if (table.failed_replicates > 0)
        std::cerr << "warning: " << table.failed_replicates << " replicate(s) failed\n";

    write_manifest(out_path + ".manifest.json", "power", study_config_to_json(config), seed, {},
                   json{{"study", file_digest(study_path)}});
    std::cout << "wrote " << table.rows.size() << " power row(s) to " << out_path << '\n';
    return 0;
}

int cmd_toy(int example, const std::string& variant, const std::string& mu3_grid, double alpha,
            const std::string& out_path) {
    double start = 0.0, step = 0.25, end = 3.0;
    if (!mu3_grid.empty()) {
        if (std::sscanf(mu3_grid.c_str(), "%lf:%lf:%lf", &start, &step, &end) != 3)
            throw ValidationError("--mu3-grid must be start:step:end");
        if (!(step > 0.0) || end < start) throw ValidationError("invalid --mu3-grid range");
    }

    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write output file: " + out_path);
    out << "mu3,power_unscaled,power_scaled\n";
    for (double mu3 = start; mu3 <= end + 1e-12; mu3 += step) {
        double unscaled, scaled;
        if (example == 1) {
            ToySpec1 spec;
            spec.mu = {0.0, 0.0, mu3};
            spec.sigma = variant == "a" ? std::vector<double>{1.0, 1.0, 0.1}
                                        : std::vector<double>{0.1, 0.1, 1.0};
            spec.alpha = alpha;
            unscaled = toy1_power(spec, false);
            scaled = toy1_power(spec, true);
        } else {
            ToySpec2 spec;
            spec.mu = {0.0, 0.0, mu3};
            spec.sigma_a = {0.1, 0.1, 0.1};
            const double sb = variant == "a" ? 0.13 : 0.07;
            spec.sigma_b = {sb, sb, sb};
            spec.alpha = alpha;
            unscaled = toy2_power(spec, false);
            scaled = toy2_power(spec, true);
        }
        out << format_double(mu3) << ',' << format_double(unscaled) << ','
            << format_double(scaled) << '\n';
    }
    std::cout << "wrote power curve to " << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deviation tests for marked point patterns"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    // test
    auto* test = app.add_subcommand("test", "Random-labelling deviation test on a pattern CSV");
    std::string pattern_path, config_path, out_path;
    std::uint64_t seed = 0;
    test->add_option("--pattern", pattern_path, "Pattern CSV (header x,y,mark)")->required();
    test->add_option("--config", config_path, "Test config JSON")->required();
    test->add_option("--seed", seed, "Master seed")->required();
    test->add_option("--out", out_path, "Output report CSV")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Simulate patterns from an alternative model");
    std::string model_name, params_path, out_dir;
    std::size_t sim_n = 0, reps = 1;
    std::vector<double> window_spec;
    simulate->add_option("--model", model_name, "Model family name")->required();
    simulate->add_option("--params", params_path, "Model parameter JSON");
    simulate->add_option("--n", sim_n, "Point count");
    simulate->add_option("--window", window_spec, "Window x0,x1,y0,y1")->delimiter(',');
    simulate->add_option("--reps", reps, "Number of replicates");
    simulate->add_option("--seed", seed, "Master seed")->required();
    simulate->add_option("--out-dir", out_dir, "Output directory")->required();

    // power
    auto* power = app.add_subcommand("power", "Run a power study");
    std::string study_path;
    bool full = false;
    int threads = 0;
    power->add_option("--study", study_path, "Study config JSON")->required();
    power->add_option("--seed", seed, "Master seed")->required();
    power->add_option("--out", out_path, "Output CSV")->required();
    power->add_flag("--full", full, "Full scale: N=1000 replicates, s=999 permutations");
    power->add_option("--threads", threads, "Worker threads");

    // toy
    auto* toy = app.add_subcommand("toy", "Analytic power for the toy examples");
    int example = 1;
    std::string variant = "a", mu3_grid;
    double alpha = 0.05;
    toy->add_option("--example", example, "Toy example number")->check(CLI::Range(1, 2));
    toy->add_option("--case", variant, "Case a or b")->check(CLI::IsMember({"a", "b"}));
    toy->add_option("--mu3-grid", mu3_grid, "Grid start:step:end for mu3");
    toy->add_option("--alpha", alpha, "Significance level");
    toy->add_option("--out", out_path, "Output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (test->parsed()) return cmd_test(pattern_path, config_path, seed, out_path);
        if (simulate->parsed())
            return cmd_simulate(model_name, params_path, sim_n, window_spec, reps, seed, out_dir);
        if (power->parsed()) return cmd_power(study_path, seed, out_path, full, threads);
        if (toy->parsed()) return cmd_toy(example, variant, mu3_grid, alpha, out_path);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
