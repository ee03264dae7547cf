#pragma once

// The fitness pipeline: render a patched source, compile it twice (first
// unoptimized as a stability check, then optimized), reject mutants whose
// compiled artifact matches the unpatched baseline, run the survivor against
// the test suite, and cache every result under the canonical patch
// serialization. Two modes share the flow: the hermetic toy mode (built-in
// language on the cost-model VM) and external-command mode (arbitrary
// build/run commands plus an artifact file).

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "giw/edits.hpp"
#include "giw/runner.hpp"
#include "giw/testgen.hpp"
#include "giw/toyvm.hpp"
#include "giw/tree.hpp"

namespace giw {

enum class Outcome : std::uint8_t {
    cache,
    compile_error,
    object_unchanged,
    runtime_error,
    all_tests_passed,
    timeout,
};

const char* outcome_name(Outcome outcome);

struct EvalOutcome {
    Outcome outcome = Outcome::compile_error;
    FitnessRecord record; // for non-run outcomes: penalty fitness, detail set
    bool cache_hit = false;

    std::uint64_t fitness() const { return record.fitness; }
    bool passed() const { return outcome == Outcome::all_tests_passed ||
                                 (outcome == Outcome::cache && record.status == RunStatus::ok); }
};

struct ScenarioConfig {
    std::string dir; // directory of the scenario file; relative paths resolve here
    std::vector<std::string> targets;
    std::vector<std::string> ingredients;
    std::string mode = "toy"; // "toy" | "external"
    std::string suite;
    EditWeights edit_weights;
    std::uint64_t budget = 100000; // search steps after warmup
    int warmup = 3;
    std::uint64_t seed = 1;
    double compile_timeout = 30.0;
    double run_timeout = 30.0;
    std::uint64_t toy_max_steps = 20'000'000;
    std::string build_cmd;
    std::string run_cmd;
    std::string artifact;
    std::string work_dir;
    std::string counter = "model"; // "model" | "hw"
    std::map<std::string, std::string> params;

    std::string resolve(const std::string& path) const;
};

ScenarioConfig load_scenario(const std::string& path); // throws std::runtime_error

// Host interface the toy interpreter fixtures compile against.
ToyHostSpec toy_host_spec();

struct ToyRunOutcome {
    RunStatus status = RunStatus::ok;
    std::uint64_t error_sum = 0;
    std::uint64_t cost = 0;
    std::string detail;
};

// Runs a compiled toy module against the whole suite with the sandbox
// checks: padding bytes and untouched register rows must keep the padding
// pattern (statuses 3/4), written rows are scored against the scalar oracle.
ToyRunOutcome toy_run_suite(const ToyModule& module, const TestSuite& suite,
                            const DivisionTable& table,
                            const std::vector<std::uint64_t>& lut64,
                            std::uint64_t max_steps,
                            const std::map<std::string, std::string>& params);

std::vector<std::uint64_t> build_lut64(const DivisionTable& table);

class Pipeline {
public:
    explicit Pipeline(const ScenarioConfig& config); // throws on setup failure

    const ScenarioConfig& config() const { return config_; }
    const TreeSet& trees() const { return trees_; }
    const TestSuite& suite() const { return suite_; }

    EvalOutcome evaluate(const Patch& patch);       // cached
    EvalOutcome evaluate_fresh(const Patch& patch); // bypasses the cache

    // Concurrent evaluation of independent candidates; results line up with
    // the input order. Acceptance decisions stay with the caller.
    std::vector<EvalOutcome> evaluate_batch(const std::vector<Patch>& patches, int jobs);

    std::uint64_t builds_performed() const;
    std::map<std::string, std::string> render_patched(const Patch& patch) const;

    ~Pipeline();

private:
    struct Impl;
    ScenarioConfig config_;
    TreeSet trees_;
    TestSuite suite_;
    std::unique_ptr<Impl> impl_;
};

} // namespace giw
