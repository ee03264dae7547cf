#include "giw/pipeline.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace giw {

const char* outcome_name(Outcome outcome) {
    switch (outcome) {
    case Outcome::cache: return "cache";
    case Outcome::compile_error: return "compile_error";
    case Outcome::object_unchanged: return "object_unchanged";
    case Outcome::runtime_error: return "runtime_error";
    case Outcome::all_tests_passed: return "all_tests_passed";
    case Outcome::timeout: return "timeout";
    }
    return "unknown";
}

std::string ScenarioConfig::resolve(const std::string& path) const {
    if (path.empty() || path.front() == '/' || dir.empty())
        return path;
    return dir + "/" + path;
}

namespace {

std::string trim(const std::string& text) {
    std::size_t a = text.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = text.find_last_not_of(" \t\r\n");
    return text.substr(a, b - a + 1);
}

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> words;
    std::string word;
    while (in >> word)
        words.push_back(word);
    return words;
}

} // namespace

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open scenario file: " + path);
    ScenarioConfig config;
    std::size_t slash = path.rfind('/');
    config.dir = slash == std::string::npos ? "." : path.substr(0, slash);

    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (section == "edits") {
            config.edit_weights[key] = static_cast<std::uint32_t>(std::stoul(value));
        } else if (section == "params") {
            config.params[key] = value;
        } else if (key == "mode") {
            config.mode = value;
        } else if (key == "target" || key == "targets") {
            for (const std::string& f : split_words(value))
                config.targets.push_back(f);
        } else if (key == "ingredients") {
            for (const std::string& f : split_words(value))
                config.ingredients.push_back(f);
        } else if (key == "suite") {
            config.suite = value;
        } else if (key == "budget") {
            config.budget = std::stoull(value);
        } else if (key == "warmup") {
            config.warmup = std::stoi(value);
        } else if (key == "seed") {
            config.seed = std::stoull(value);
        } else if (key == "compile_timeout") {
            config.compile_timeout = std::stod(value);
        } else if (key == "run_timeout") {
            config.run_timeout = std::stod(value);
        } else if (key == "run_steps") {
            config.toy_max_steps = std::stoull(value);
        } else if (key == "build_cmd") {
            config.build_cmd = value;
        } else if (key == "run_cmd") {
            config.run_cmd = value;
        } else if (key == "artifact") {
            config.artifact = value;
        } else if (key == "work_dir") {
            config.work_dir = value;
        } else if (key == "counter") {
            config.counter = value;
        } else {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unknown key " + key);
        }
    }
    if (config.targets.empty())
        throw std::runtime_error(path + ": scenario names no target files");
    if (config.mode != "toy" && config.mode != "external")
        throw std::runtime_error(path + ": unknown mode " + config.mode);
    if (config.mode == "toy" && config.suite.empty())
        throw std::runtime_error(path + ": toy mode needs a suite file");
    return config;
}

ToyHostSpec toy_host_spec() {
    ToyHostSpec spec;
    spec.arrays = {"code_op", "code_dst", "code_s1", "code_s2", "code_s2k", "reg", "lut"};
    spec.scalars = {"n", "width"};
    return spec;
}

std::vector<std::uint64_t> build_lut64(const DivisionTable& table) {
    std::vector<std::uint64_t> lut(DivisionTable::entry_count);
    const std::uint32_t* src = table.data();
    for (std::size_t i = 0; i < lut.size(); ++i)
        lut[i] = src[i];
    return lut;
}

namespace {

constexpr std::size_t toy_reg_len = 4096; // matches the guarded registers page

std::uint64_t saturating_abs_diff(std::uint64_t a, std::uint64_t b) {
    std::uint64_t d = a > b ? a - b : b - a;
    return std::min<std::uint64_t>(d, 1u << 20); // keep wild values from swamping the sum
}

} // namespace

ToyRunOutcome toy_run_suite(const ToyModule& module, const TestSuite& suite,
                            const DivisionTable& table,
                            const std::vector<std::uint64_t>& lut64,
                            std::uint64_t max_steps,
                            const std::map<std::string, std::string>& params) {
    ToyRunOutcome out;
    std::vector<std::uint64_t> reg(toy_reg_len);
    std::map<std::string, std::uint64_t> scalars;
    scalars["width"] = 8;
    if (auto it = params.find("width"); it != params.end())
        scalars["width"] = std::strtoull(it->second.c_str(), nullptr, 10);

    for (const SuiteProgram& sp : suite.programs) {
        const Program& program = sp.program;
        std::vector<std::uint64_t> code_op, code_dst, code_s1, code_s2, code_s2k;
        for (const Instruction& instr : program.code) {
            code_op.push_back(static_cast<std::uint64_t>(instr.op));
            code_dst.push_back(instr.dst);
            code_s1.push_back(instr.src1);
            code_s2.push_back(instr.src2.value);
            code_s2k.push_back(instr.src2.is_const ? 1 : 0);
        }
        scalars["n"] = program.code.size();

        std::map<std::string, ToyArrayView> arrays;
        arrays["code_op"] = {code_op.data(), code_op.size(), true};
        arrays["code_dst"] = {code_dst.data(), code_dst.size(), true};
        arrays["code_s1"] = {code_s1.data(), code_s1.size(), true};
        arrays["code_s2"] = {code_s2.data(), code_s2.size(), true};
        arrays["code_s2k"] = {code_s2k.data(), code_s2k.size(), true};
        arrays["reg"] = {reg.data(), reg.size(), false};
        arrays["lut"] = {const_cast<std::uint64_t*>(lut64.data()), lut64.size(), true};

        for (std::size_t tile = 0; tile < sp.cases.size(); tile += batch_lanes) {
            const std::size_t count = std::min<std::size_t>(batch_lanes, sp.cases.size() - tile);

            std::fill(reg.begin(), reg.end(), padding_byte);
            for (std::size_t c = 0; c < count; ++c) {
                reg[program.input_reg_x * batch_lanes + c] = sp.cases[tile + c].first;
                reg[program.input_reg_y * batch_lanes + c] = sp.cases[tile + c].second;
            }

            ToyExecResult exec = toy_execute(module, arrays, scalars, max_steps);
            out.cost += exec.cost;
            if (exec.fault != ToyFault::none) {
                out.detail = std::string(toy_fault_name(exec.fault)) +
                             (exec.detail.empty() ? "" : " " + exec.detail);
                switch (exec.fault) {
                case ToyFault::out_of_bounds:
                case ToyFault::readonly_write:
                    out.status = RunStatus::sigsegv;
                    return out;
                case ToyFault::div_by_zero:
                    out.status = RunStatus::sigfpe;
                    return out;
                case ToyFault::step_limit:
                    out.status = RunStatus::timeout;
                    return out;
                default:
                    out.status = RunStatus::measurement_failure;
                    return out;
                }
            }

            // padding pattern beyond the 8x64 matrix
            for (std::size_t i = register_count * batch_lanes; i < toy_reg_len; ++i)
                if (reg[i] != padding_byte) {
                    out.status = RunStatus::padding_overwritten;
                    return out;
                }

            std::span<const std::pair<byte, byte>> cases(sp.cases.data() + tile, count);
            std::vector<RegisterState> expected = expected_registers(program, cases, table);
            std::uint8_t written = expected.empty() ? 0 : expected.front().written;
            std::uint8_t touched = written;
            touched |= static_cast<std::uint8_t>(1u << program.input_reg_x);
            touched |= static_cast<std::uint8_t>(1u << program.input_reg_y);

            // rows the program should never touch must keep the pattern
            for (int r = 0; r < register_count; ++r) {
                if ((touched >> r) & 1)
                    continue;
                for (int c = 0; c < batch_lanes; ++c)
                    if (reg[r * batch_lanes + c] != padding_byte) {
                        out.status = RunStatus::registers_corrupted;
                        return out;
                    }
            }

            for (int r = 0; r < register_count; ++r) {
                if (!((written >> r) & 1))
                    continue;
                for (std::size_t c = 0; c < count; ++c)
                    out.error_sum +=
                        saturating_abs_diff(reg[r * batch_lanes + c], expected[c].regs[r]);
            }
        }
    }
    if (out.error_sum > 0)
        out.status = RunStatus::wrong_output;
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct Pipeline::Impl {
    DivisionTable table = DivisionTable::build();
    std::vector<std::uint64_t> lut64;
    std::string baseline_artifact;
    std::map<std::string, EvalOutcome> cache;
    mutable std::shared_mutex cache_mutex;
    std::mutex eval_mutex; // external mode work dir is shared
    std::atomic<std::uint64_t> builds{0};
};

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write file: " + path);
    out << text;
}

EvalOutcome failed_eval(Outcome outcome, std::string detail) {
    EvalOutcome eval;
    eval.outcome = outcome;
    eval.record = make_fitness(RunStatus::measurement_failure, 0, 0, "none", std::move(detail));
    return eval;
}

} // namespace

Pipeline::Pipeline(const ScenarioConfig& config)
    : config_(config), impl_(std::make_unique<Impl>()) {
    for (const std::string& file : config_.targets)
        trees_.targets.push_back(load_source_tree(config_.resolve(file), false));
    for (const std::string& file : config_.ingredients)
        trees_.ingredients.push_back(load_source_tree(config_.resolve(file), true));

    if (config_.mode == "toy") {
        suite_ = load_suite(config_.resolve(config_.suite));
        impl_->lut64 = build_lut64(impl_->table);
        std::string source;
        for (const SourceTree& tree : trees_.targets)
            source += render_source(tree);
        ToyCompileResult baseline = toy_compile(source, toy_host_spec(), true);
        if (!baseline.ok)
            throw std::runtime_error("baseline does not compile: " + baseline.error);
        impl_->baseline_artifact = baseline.module.serialize();
    } else {
        if (config_.work_dir.empty() || config_.build_cmd.empty() || config_.run_cmd.empty() ||
            config_.artifact.empty())
            throw std::runtime_error("external mode needs work_dir, build_cmd, run_cmd, artifact");
        mkdir(config_.resolve(config_.work_dir).c_str(), 0755);
        // build the unpatched baseline once to pin the artifact bytes
        for (const SourceTree& tree : trees_.targets)
            write_file(config_.resolve(config_.work_dir) + "/" + tree.file, render_source(tree));
        CommandResult build = run_command("cd " + config_.resolve(config_.work_dir) + " && " +
                                              config_.build_cmd,
                                          config_.compile_timeout, {{"GI_OPT", "1"}});
        if (build.exit_code != 0)
            throw std::runtime_error("baseline build failed");
        impl_->baseline_artifact =
            read_file(config_.resolve(config_.work_dir) + "/" + config_.artifact);
    }
}

Pipeline::~Pipeline() = default;

std::uint64_t Pipeline::builds_performed() const { return impl_->builds.load(); }

std::map<std::string, std::string> Pipeline::render_patched(const Patch& patch) const {
    PatchApplication application = apply_patch(trees_, patch);
    std::map<std::string, std::string> rendered;
    for (const SourceTree& tree : application.trees.targets)
        rendered[tree.file] = render_source(tree);
    return rendered;
}

EvalOutcome Pipeline::evaluate_fresh(const Patch& patch) {
    PatchApplication application = apply_patch(trees_, patch);

    if (config_.mode == "toy") {
        std::string source;
        for (const SourceTree& tree : application.trees.targets)
            source += render_source(tree);

        // stage 1: unoptimized build, then run (catches mutants that only
        // behave under the optimizer)
        impl_->builds.fetch_add(1);
        ToyCompileResult plain = toy_compile(source, toy_host_spec(), false);
        if (!plain.ok)
            return failed_eval(Outcome::compile_error, plain.error);
        ToyRunOutcome first =
            toy_run_suite(plain.module, suite_, impl_->table, impl_->lut64,
                          config_.toy_max_steps, patch.params);
        if (first.status == RunStatus::timeout)
            return failed_eval(Outcome::timeout, "step limit");
        if (first.status != RunStatus::ok) {
            EvalOutcome eval;
            eval.outcome = Outcome::runtime_error;
            eval.record = make_fitness(first.status, first.error_sum, 0, "model", first.detail);
            return eval;
        }

        // stage 2: optimized build; identical artifact means an equivalent
        // mutant, rejected without running
        ToyCompileResult optimized = toy_compile(source, toy_host_spec(), true);
        if (!optimized.ok)
            return failed_eval(Outcome::compile_error, optimized.error);
        std::string artifact = optimized.module.serialize();
        // the empty patch IS the baseline; only real edits can be equivalent
        if (!patch.edits.empty() && artifact == impl_->baseline_artifact)
            return failed_eval(Outcome::object_unchanged, "artifact matches baseline");

        ToyRunOutcome second =
            toy_run_suite(optimized.module, suite_, impl_->table, impl_->lut64,
                          config_.toy_max_steps, patch.params);
        if (second.status == RunStatus::timeout)
            return failed_eval(Outcome::timeout, "step limit");
        EvalOutcome eval;
        if (second.status != RunStatus::ok) {
            eval.outcome = Outcome::runtime_error;
            eval.record = make_fitness(second.status, second.error_sum, 0, "model", second.detail);
            return eval;
        }
        eval.outcome = Outcome::all_tests_passed;
        eval.record = make_fitness(RunStatus::ok, 0, second.cost, "model");
        return eval;
    }

    // external-command mode; the work dir is exclusive
    std::lock_guard<std::mutex> lock(impl_->eval_mutex);
    const std::string work = config_.resolve(config_.work_dir);
    for (const SourceTree& tree : application.trees.targets)
        write_file(work + "/" + tree.file, render_source(tree));

    auto stage_env = [&](const char* opt) {
        std::vector<std::pair<std::string, std::string>> env = {{"GI_OPT", opt},
                                                                {"GI_COUNTER", config_.counter}};
        if (!config_.suite.empty())
            env.emplace_back("GI_SUITE", config_.resolve(config_.suite));
        return env;
    };

    impl_->builds.fetch_add(1);
    CommandResult build1 = run_command("cd " + work + " && " + config_.build_cmd,
                                       config_.compile_timeout, stage_env("0"));
    if (build1.timed_out)
        return failed_eval(Outcome::timeout, "stage-1 build timeout");
    if (build1.exit_code != 0)
        return failed_eval(Outcome::compile_error,
                           "stage-1 build exit " + std::to_string(build1.exit_code));

    const std::string counter_file = work + "/counters.txt";
    auto run_stage = [&](const char* stage) {
        std::vector<std::pair<std::string, std::string>> env = stage_env("1");
        env.emplace_back("GI_STAGE", stage);
        env.emplace_back("GI_COUNTER_OUT", counter_file);
        return run_command("cd " + work + " && " + config_.run_cmd, config_.run_timeout, env);
    };

    CommandResult run1 = run_stage("1");
    auto classify_run = [&](const CommandResult& run) -> EvalOutcome {
        EvalOutcome eval;
        auto kv = read_kv_file(counter_file);
        auto kv_u64 = [&kv](const char* key) -> std::uint64_t {
            auto it = kv.find(key);
            return it == kv.end() ? 0 : std::strtoull(it->second.c_str(), nullptr, 10);
        };
        if (run.timed_out)
            return failed_eval(Outcome::timeout, "run timeout");
        if (run.term_signal) {
            RunStatus status = run.term_signal == SIGSEGV  ? RunStatus::sigsegv
                               : run.term_signal == SIGFPE ? RunStatus::sigfpe
                               : run.term_signal == SIGABRT ? RunStatus::sigabrt
                                                            : RunStatus::measurement_failure;
            eval.outcome = Outcome::runtime_error;
            eval.record = make_fitness(status, 0, 0, config_.counter,
                                       "signal " + std::to_string(run.term_signal));
            return eval;
        }
        switch (run.exit_code) {
        case 0:
            eval.outcome = Outcome::all_tests_passed;
            eval.record = make_fitness(RunStatus::ok, 0, kv_u64("instructions"), config_.counter);
            return eval;
        case 1:
            eval.outcome = Outcome::runtime_error;
            eval.record =
                make_fitness(RunStatus::wrong_output, kv_u64("error"), 0, config_.counter);
            return eval;
        case 3:
            eval.outcome = Outcome::runtime_error;
            eval.record = make_fitness(RunStatus::padding_overwritten, 0, 0, config_.counter);
            return eval;
        case 4:
            eval.outcome = Outcome::runtime_error;
            eval.record = make_fitness(RunStatus::registers_corrupted, 0, 0, config_.counter);
            return eval;
        default:
            eval.outcome = Outcome::runtime_error;
            eval.record = make_fitness(RunStatus::measurement_failure, 0, 0, config_.counter,
                                       "exit " + std::to_string(run.exit_code));
            return eval;
        }
    };
    EvalOutcome first = classify_run(run1);
    if (first.outcome != Outcome::all_tests_passed)
        return first;

    impl_->builds.fetch_add(1);
    CommandResult build2 = run_command("cd " + work + " && " + config_.build_cmd,
                                       config_.compile_timeout, stage_env("1"));
    if (build2.timed_out)
        return failed_eval(Outcome::timeout, "stage-2 build timeout");
    if (build2.exit_code != 0)
        return failed_eval(Outcome::compile_error,
                           "stage-2 build exit " + std::to_string(build2.exit_code));
    std::string artifact = read_file(work + "/" + config_.artifact);
    if (!patch.edits.empty() && artifact == impl_->baseline_artifact)
        return failed_eval(Outcome::object_unchanged, "artifact matches baseline");

    CommandResult run2 = run_stage("2");
    return classify_run(run2);
}

EvalOutcome Pipeline::evaluate(const Patch& patch) {
    const std::string key = patch_to_string(patch);
    {
        std::shared_lock<std::shared_mutex> lock(impl_->cache_mutex);
        auto it = impl_->cache.find(key);
        if (it != impl_->cache.end()) {
            EvalOutcome hit = it->second;
            hit.outcome = Outcome::cache;
            hit.cache_hit = true;
            // keep the stored pass/fail visible through record.status
            return hit;
        }
    }
    EvalOutcome fresh = evaluate_fresh(patch);
    {
        std::unique_lock<std::shared_mutex> lock(impl_->cache_mutex);
        impl_->cache.emplace(key, fresh);
    }
    return fresh;
}

std::vector<EvalOutcome> Pipeline::evaluate_batch(const std::vector<Patch>& patches, int jobs) {
    std::vector<EvalOutcome> results(patches.size());
    if (jobs <= 1 || patches.size() <= 1 || config_.mode == "external") {
        for (std::size_t i = 0; i < patches.size(); ++i)
            results[i] = evaluate(patches[i]);
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= patches.size())
                return;
            results[i] = evaluate(patches[i]);
        }
    };
    std::vector<std::thread> threads;
    const int n = std::min<int>(jobs, static_cast<int>(patches.size()));
    threads.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        threads.emplace_back(worker);
    for (std::thread& t : threads)
        t.join();
    return results;
}

} // namespace giw
