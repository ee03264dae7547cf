// Command-line front end: suite generation, interpreter runs and benchmarks,
// patch search, patch application, verification, and report regeneration.
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 environment
// error (counter or page protection unavailable).

#include "CLI11.hpp"

#include <sys/stat.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "giw/arena.hpp"
#include "giw/batch.hpp"
#include "giw/pipeline.hpp"
#include "giw/runner.hpp"
#include "giw/search.hpp"
#include "giw/testgen.hpp"

namespace {

using namespace giw;

LaneWidth width_from_int(int width) {
    switch (width) {
    case 8: return LaneWidth::w8;
    case 16: return LaneWidth::w16;
    case 32: return LaneWidth::w32;
    default: throw CLI::ValidationError("--width must be 8, 16 or 32");
    }
}

// batch evaluation over an arbitrary case count, tiled to 64 lanes
std::vector<RegisterFileBatch> run_batches(const SuiteProgram& sp, const DivisionTable& table,
                                           const BatchOptions& opts, BatchStats* stats) {
    std::vector<RegisterFileBatch> tiles;
    for (std::size_t tile = 0; tile < sp.cases.size(); tile += batch_lanes) {
        std::array<std::pair<byte, byte>, batch_lanes> cases{};
        const std::size_t count = std::min<std::size_t>(batch_lanes, sp.cases.size() - tile);
        for (std::size_t c = 0; c < count; ++c)
            cases[c] = sp.cases[tile + c];
        tiles.push_back(interpret_batch(sp.program, cases, table, opts, stats));
    }
    return tiles;
}

int cmd_gen_suite(std::uint64_t seed, int programs, int length, int cases,
                  const std::string& out_path) {
    GenConfig config;
    config.program_count = programs;
    config.program_length = length;
    config.cases_per_program = cases;
    TestSuite suite = gen_suite(seed, config);
    save_suite(out_path, suite);
    std::cout << "wrote " << out_path << " (" << suite.programs.size() << " programs, "
              << cases << " cases each)\n";
    return 0;
}

int cmd_interpret(const std::string& suite_path, int width, const std::string& impl,
                  bool compare, const std::string& trace_prefix,
                  const std::string& regs_out) {
    TestSuite suite = load_suite(suite_path);
    DivisionTable table = DivisionTable::build();
    BatchOptions opts;
    opts.width = width_from_int(width);

    bool mismatch = false;
    std::vector<DistributionReport> reports;
    for (std::size_t p = 0; p < suite.programs.size(); ++p) {
        const SuiteProgram& sp = suite.programs[p];
        std::vector<RegisterState> oracle = expected_registers(sp.program, sp.cases, table);
        std::vector<RegisterFileBatch> tiles;
        if (impl == "batch" || compare || !regs_out.empty())
            tiles = run_batches(sp, table, opts, nullptr);

        std::cout << "program " << p << " R" << static_cast<int>(sp.program.output_reg) << ":";
        for (std::size_t c = 0; c < sp.cases.size(); ++c) {
            byte scalar_out = oracle[c].regs[sp.program.output_reg];
            byte value = scalar_out;
            if (impl == "batch" || compare) {
                byte batch_out = tiles[c / batch_lanes].at(sp.program.output_reg,
                                                           static_cast<int>(c % batch_lanes));
                if (compare && batch_out != scalar_out)
                    mismatch = true;
                if (impl == "batch")
                    value = batch_out;
            }
            std::cout << ' ' << static_cast<int>(value);
        }
        std::cout << '\n';

        if (!trace_prefix.empty())
            reports.push_back(trace_distributions(sp.program, sp.cases, table));
        if (!regs_out.empty()) {
            std::ofstream out(regs_out + "." + std::to_string(p) + ".csv");
            for (const RegisterFileBatch& tile : tiles)
                out << batch_to_csv(tile);
        }
    }

    if (!trace_prefix.empty()) {
        std::ofstream hist(trace_prefix + "_hist.csv");
        write_histogram_csv(hist, reports);
        std::ofstream entropy(trace_prefix + "_entropy.csv");
        write_entropy_csv(entropy, reports);
    }
    if (compare) {
        std::cout << (mismatch ? "scalar/batch MISMATCH\n" : "scalar and batch agree\n");
        return mismatch ? 1 : 0;
    }
    return 0;
}

int cmd_bench(const std::string& suite_path, int width, int reps, double clock_ghz) {
    TestSuite suite = load_suite(suite_path);
    DivisionTable table = DivisionTable::build();
    BatchOptions opts;
    opts.width = width_from_int(width);

    const char* counter_env = std::getenv("GI_COUNTER");
    const bool use_hw = counter_env && std::string(counter_env) == "hw";
    if (use_hw && !InstructionCounter::available()) {
        std::cerr << "bench: hardware counter unavailable\n";
        return 3;
    }

    std::uint64_t gp_ops = 0; // programs x instructions x cases
    for (const SuiteProgram& sp : suite.programs)
        gp_ops += sp.program.code.size() * sp.cases.size();
    gp_ops *= static_cast<std::uint64_t>(reps);

    InstructionCounter hw;
    BatchStats stats;
    if (use_hw)
        hw.start();
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        for (const SuiteProgram& sp : suite.programs)
            run_batches(sp, table, opts, &stats);
    auto t1 = std::chrono::steady_clock::now();
    std::uint64_t counted = use_hw ? hw.stop() : stats.model_ops;

    double seconds = std::chrono::duration<double>(t1 - t0).count();
    std::printf("width=%d reps=%d provider=%s\n", width, reps, use_hw ? "hw" : "model");
    std::printf("wall_clock_s=%.6f gp_ops=%llu wall_gp_per_s=%.3e\n", seconds,
                static_cast<unsigned long long>(gp_ops),
                seconds > 0 ? static_cast<double>(gp_ops) / seconds : 0.0);
    std::printf("counted_ops=%llu counter_gp_per_s=%.3e\n",
                static_cast<unsigned long long>(counted),
                counted ? static_cast<double>(gp_ops) * clock_ghz * 1e9 /
                              static_cast<double>(counted)
                        : 0.0);
    return 0;
}

int cmd_search(const std::string& scenario_path, std::uint64_t seed, long long budget_total,
               int jobs, const std::string& out_dir) {
    ScenarioConfig config = load_scenario(scenario_path);
    if (seed)
        config.seed = seed;
    SearchOptions options;
    options.warmup = config.warmup;
    options.budget = config.budget;
    options.jobs = jobs;
    if (budget_total >= 0) {
        // the command-line budget counts every evaluation, warmup included
        std::uint64_t total = static_cast<std::uint64_t>(budget_total);
        options.budget = total > static_cast<std::uint64_t>(options.warmup)
                             ? total - static_cast<std::uint64_t>(options.warmup)
                             : 0;
    }

    Pipeline pipeline(config);
    Rng rng(config.seed);
    SearchResult result = local_search(pipeline, options, rng);

    mkdir(out_dir.c_str(), 0755);
    save_patch(out_dir + "/best_patch.txt", result.best_patch);
    write_report_bundle(out_dir, result.log);
    std::cout << "baseline=" << result.baseline_fitness << " best=" << result.best_fitness
              << " steps=" << result.log.size() << "\n";
    std::cout << "best patch: "
              << (result.best_patch.edits.empty() ? "(empty)"
                                                  : patch_to_string(result.best_patch))
              << "\n";
    return 0;
}

int cmd_apply_patch(const std::string& patch_path, const std::string& scenario_path,
                    const std::string& out_dir) {
    ScenarioConfig config = load_scenario(scenario_path);
    Pipeline pipeline(config);
    Patch patch = load_patch(patch_path);
    mkdir(out_dir.c_str(), 0755);
    for (const auto& [file, text] : pipeline.render_patched(patch)) {
        std::ofstream out(out_dir + "/" + file);
        out << text;
        std::cout << "wrote " << out_dir << "/" << file << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& patch_path, const std::string& scenario_path) {
    ScenarioConfig config = load_scenario(scenario_path);
    Pipeline pipeline(config);
    Patch patch = load_patch(patch_path);

    Patch empty;
    empty.params = config.params;
    EvalOutcome baseline = pipeline.evaluate_fresh(empty);
    if (baseline.outcome != Outcome::all_tests_passed) {
        std::cerr << "verify: baseline failed: " << outcome_name(baseline.outcome) << "\n";
        return 3;
    }
    EvalOutcome eval = pipeline.evaluate_fresh(patch);
    if (eval.outcome == Outcome::object_unchanged) {
        std::cout << "object unchanged; delta 0\n";
        return 0;
    }
    if (eval.outcome != Outcome::all_tests_passed) {
        std::cout << "verify FAILED: " << outcome_name(eval.outcome) << " status "
                  << run_status_name(eval.record.status) << " " << eval.record.detail << "\n";
        return 1;
    }
    long long delta = static_cast<long long>(eval.fitness()) -
                      static_cast<long long>(baseline.fitness());
    std::cout << "all tests passed; fitness " << eval.fitness() << " baseline "
              << baseline.fitness() << " delta " << delta << "\n";
    return 0;
}

int cmd_report(const std::string& log_path, const std::string& out_dir) {
    std::ifstream in(log_path);
    if (!in) {
        std::cerr << "report: cannot open " << log_path << "\n";
        return 2;
    }
    std::vector<SearchStep> log = parse_steps_csv(in);
    write_report_bundle(out_dir, log);
    std::cout << "wrote report bundle to " << out_dir << " (" << log.size() << " steps)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"genetic-improvement workbench for a lane-parallel LGP interpreter"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::uint64_t search_seed = 0; // 0: use the scenario's seed
    int programs = 4, length = 4, cases = 64, width = 8, reps = 100, jobs = 1;
    long long budget_total = -1;
    double clock_ghz = 1.0;
    std::string out_path = "suite.txt", suite_path, impl = "scalar", trace_prefix, regs_out;
    std::string scenario_path, patch_path, out_dir = "out", log_path;
    bool compare = false;

    auto* gen = app.add_subcommand("gen-suite", "generate a test suite file");
    gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
    gen->add_option("--programs", programs)->capture_default_str();
    gen->add_option("--length", length, "instructions per program")->capture_default_str();
    gen->add_option("--cases", cases)->capture_default_str();
    gen->add_option("--out", out_path)->capture_default_str();

    auto* interp = app.add_subcommand("interpret", "run a suite through the interpreters");
    interp->add_option("--suite", suite_path)->required();
    interp->add_option("--width", width, "lane width (8/16/32)")->capture_default_str();
    interp->add_option("--impl", impl, "scalar|batch")->capture_default_str();
    interp->add_flag("--compare", compare, "compare scalar and batch outputs");
    interp->add_option("--trace", trace_prefix, "emit <prefix>_hist.csv and <prefix>_entropy.csv");
    interp->add_option("--regs-out", regs_out, "dump 8x64 register CSVs");

    auto* bench = app.add_subcommand("bench", "throughput benchmark");
    bench->add_option("--suite", suite_path)->required();
    bench->add_option("--width", width)->capture_default_str();
    bench->add_option("--reps", reps)->capture_default_str();
    bench->add_option("--clock-ghz", clock_ghz, "nominal clock for GP ops/s")->capture_default_str();

    auto* search = app.add_subcommand("search", "run the local search over a scenario");
    search->add_option("--scenario", scenario_path)->required();
    search->add_option("--seed", search_seed, "overrides the scenario seed");
    search->add_option("--budget", budget_total,
                       "total evaluation budget including warmup (default: scenario)");
    search->add_option("--jobs", jobs, "parallel candidate evaluations")->capture_default_str();
    search->add_option("--out", out_dir)->capture_default_str();

    auto* apply = app.add_subcommand("apply-patch", "render patched sources");
    apply->add_option("--patch", patch_path)->required();
    apply->add_option("--scenario", scenario_path)->required();
    apply->add_option("--out", out_dir)->capture_default_str();

    auto* verify = app.add_subcommand("verify", "apply a patch and run the full pipeline once");
    verify->add_option("--patch", patch_path)->required();
    verify->add_option("--scenario", scenario_path)->required();

    auto* report = app.add_subcommand("report", "rebuild the CSV bundle from a steps log");
    report->add_option("--log", log_path)->required();
    report->add_option("--out", out_dir)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_suite(seed, programs, length, cases, out_path);
        if (interp->parsed())
            return cmd_interpret(suite_path, width, impl, compare, trace_prefix, regs_out);
        if (bench->parsed())
            return cmd_bench(suite_path, width, reps, clock_ghz);
        if (search->parsed())
            return cmd_search(scenario_path, search_seed, budget_total, jobs, out_dir);
        if (apply->parsed())
            return cmd_apply_patch(patch_path, scenario_path, out_dir);
        if (verify->parsed())
            return cmd_verify(patch_path, scenario_path);
        if (report->parsed())
            return cmd_report(log_path, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
