#pragma once

// Child-process execution of candidate code and the fitness record taxonomy.
// Exit codes 0/1/3/4 are the child contract (ok / wrong outputs / padding
// overwritten / registers corrupted); signal deaths and timeouts are mapped by
// the parent. Instruction counts come from the hardware counter when the OS
// allows it, otherwise from the deterministic cost model.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace giw {

enum class RunStatus : std::uint8_t {
    ok = 0,
    wrong_output = 1,
    padding_overwritten = 3,
    registers_corrupted = 4,
    sigsegv,
    sigfpe,
    sigabrt,
    timeout,
    measurement_failure,
};

const char* run_status_name(RunStatus status);

// Any failed run lands at least this far above every legitimate instruction
// count (runs are capped well below 1e8 operations).
constexpr std::uint64_t fitness_penalty = 1'000'000'000;

struct FitnessRecord {
    RunStatus status = RunStatus::measurement_failure;
    std::uint64_t error_sum = 0;
    std::uint64_t instruction_count = 0;
    std::uint64_t fitness = fitness_penalty;
    std::string counter_provider; // "hw" or "model"
    std::string detail;

    friend bool operator==(const FitnessRecord&, const FitnessRecord&) = default;
};

FitnessRecord make_fitness(RunStatus status, std::uint64_t error_sum,
                           std::uint64_t instruction_count, std::string provider,
                           std::string detail = {});

struct RunLimits {
    double timeout_seconds = 30.0;
    std::vector<std::string> extra_args;
    std::optional<std::string> counter_env; // GI_COUNTER value, if set
};

// Runs `executable suite_path [extra args]` in a child process, maps its exit
// into a FitnessRecord, and reads the key=value counter file the child writes.
FitnessRecord run_mutant(const std::string& executable, const std::string& suite_path,
                         const RunLimits& limits = {});

// Retired-instruction counter over the calling thread, via the kernel
// performance-counter interface. available() probes once per process.
class InstructionCounter {
public:
    static bool available();

    InstructionCounter();
    ~InstructionCounter();
    InstructionCounter(const InstructionCounter&) = delete;
    InstructionCounter& operator=(const InstructionCounter&) = delete;

    bool ok() const { return fd_ >= 0; }
    void start();
    std::uint64_t stop(); // retired instructions since start()

private:
    int fd_ = -1;
};

// key=value lines, used for the child counter file.
std::map<std::string, std::string> read_kv_file(const std::string& path);
void write_kv_file(const std::string& path, const std::map<std::string, std::string>& kv);

// Runs a shell command with a timeout; used by the external pipeline mode.
struct CommandResult {
    bool timed_out = false;
    bool spawn_failed = false;
    int exit_code = -1;   // valid when exited normally
    int term_signal = 0;  // nonzero when signalled
};
CommandResult run_command(const std::string& command, double timeout_seconds,
                          const std::vector<std::pair<std::string, std::string>>& env = {});

} // namespace giw
