#include "giw/runner.hpp"

#include <fcntl.h>
#include <linux/perf_event.h>
#include <signal.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace giw {

const char* run_status_name(RunStatus status) {
    switch (status) {
    case RunStatus::ok: return "ok";
    case RunStatus::wrong_output: return "wrong_output";
    case RunStatus::padding_overwritten: return "padding_overwritten";
    case RunStatus::registers_corrupted: return "registers_corrupted";
    case RunStatus::sigsegv: return "sigsegv";
    case RunStatus::sigfpe: return "sigfpe";
    case RunStatus::sigabrt: return "sigabrt";
    case RunStatus::timeout: return "timeout";
    case RunStatus::measurement_failure: return "measurement_failure";
    }
    return "unknown";
}

FitnessRecord make_fitness(RunStatus status, std::uint64_t error_sum,
                           std::uint64_t instruction_count, std::string provider,
                           std::string detail) {
    FitnessRecord record;
    record.status = status;
    record.error_sum = error_sum;
    record.instruction_count = instruction_count;
    record.counter_provider = std::move(provider);
    record.detail = std::move(detail);
    record.fitness = status == RunStatus::ok ? instruction_count
                                             : fitness_penalty + error_sum;
    return record;
}

namespace {

int perf_open_instructions() {
    perf_event_attr attr;
    std::memset(&attr, 0, sizeof(attr));
    attr.type = PERF_TYPE_HARDWARE;
    attr.size = sizeof(attr);
    attr.config = PERF_COUNT_HW_INSTRUCTIONS;
    attr.disabled = 1;
    attr.exclude_kernel = 1;
    attr.exclude_hv = 1;
    return static_cast<int>(syscall(SYS_perf_event_open, &attr, 0, -1, -1, 0));
}

} // namespace

bool InstructionCounter::available() {
    static const bool probed = [] {
        int fd = perf_open_instructions();
        if (fd >= 0) {
            close(fd);
            return true;
        }
        return false;
    }();
    return probed;
}

InstructionCounter::InstructionCounter() : fd_(perf_open_instructions()) {}

InstructionCounter::~InstructionCounter() {
    if (fd_ >= 0)
        close(fd_);
}

void InstructionCounter::start() {
    if (fd_ < 0)
        return;
    ioctl(fd_, PERF_EVENT_IOC_RESET, 0);
    ioctl(fd_, PERF_EVENT_IOC_ENABLE, 0);
}

std::uint64_t InstructionCounter::stop() {
    if (fd_ < 0)
        return 0;
    ioctl(fd_, PERF_EVENT_IOC_DISABLE, 0);
    std::uint64_t count = 0;
    if (read(fd_, &count, sizeof(count)) != sizeof(count))
        return 0;
    return count;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_kv_file(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream out(path);
    for (const auto& [key, value] : kv)
        out << key << '=' << value << '\n';
}

namespace {

struct WaitOutcome {
    bool timed_out = false;
    int status = 0;
};

WaitOutcome wait_with_timeout(pid_t pid, double timeout_seconds) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double>(timeout_seconds));
    WaitOutcome outcome;
    for (;;) {
        int status = 0;
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            outcome.status = status;
            return outcome;
        }
        if (r < 0 && errno != EINTR) {
            outcome.status = -1;
            return outcome;
        }
        if (clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            outcome.timed_out = true;
            return outcome;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
}

std::string temp_counter_path() {
    static std::atomic<int> counter{0};
    return "/tmp/giw_counter_" + std::to_string(getpid()) + "_" +
           std::to_string(counter.fetch_add(1));
}

} // namespace

FitnessRecord run_mutant(const std::string& executable, const std::string& suite_path,
                         const RunLimits& limits) {
    const std::string counter_path = temp_counter_path();

    pid_t pid = fork();
    if (pid < 0)
        return make_fitness(RunStatus::measurement_failure, 0, 0, "none", "fork failed");
    if (pid == 0) {
        std::vector<std::string> args = {executable, suite_path, "--counter-out", counter_path};
        for (const std::string& a : limits.extra_args)
            args.push_back(a);
        std::vector<char*> argv;
        for (std::string& a : args)
            argv.push_back(a.data());
        argv.push_back(nullptr);
        if (limits.counter_env)
            setenv("GI_COUNTER", limits.counter_env->c_str(), 1);
        execv(executable.c_str(), argv.data());
        _exit(127);
    }

    WaitOutcome outcome = wait_with_timeout(pid, limits.timeout_seconds);
    auto kv = read_kv_file(counter_path);
    unlink(counter_path.c_str());

    auto kv_u64 = [&kv](const char* key) -> std::uint64_t {
        auto it = kv.find(key);
        return it == kv.end() ? 0 : std::strtoull(it->second.c_str(), nullptr, 10);
    };
    std::string provider = kv.count("provider") ? kv.at("provider") : "none";

    if (outcome.timed_out)
        return make_fitness(RunStatus::timeout, 0, 0, provider, "wall-clock timeout");
    if (WIFSIGNALED(outcome.status)) {
        int sig = WTERMSIG(outcome.status);
        RunStatus status = sig == SIGSEGV  ? RunStatus::sigsegv
                           : sig == SIGFPE ? RunStatus::sigfpe
                           : sig == SIGABRT
                               ? RunStatus::sigabrt
                               : RunStatus::measurement_failure;
        return make_fitness(status, 0, 0, provider, std::string("signal ") + strsignal(sig));
    }
    if (!WIFEXITED(outcome.status))
        return make_fitness(RunStatus::measurement_failure, 0, 0, provider, "wait failed");

    switch (WEXITSTATUS(outcome.status)) {
    case 0:
        return make_fitness(RunStatus::ok, 0, kv_u64("instructions"), provider);
    case 1:
        return make_fitness(RunStatus::wrong_output, kv_u64("error"), 0, provider);
    case 3:
        return make_fitness(RunStatus::padding_overwritten, 0, 0, provider);
    case 4:
        return make_fitness(RunStatus::registers_corrupted, 0, 0, provider);
    case 9:
        return make_fitness(RunStatus::measurement_failure, 0, 0, provider,
                            "instruction counter unavailable");
    case 127:
        return make_fitness(RunStatus::measurement_failure, 0, 0, provider, "exec failed");
    default:
        return make_fitness(RunStatus::measurement_failure, 0, 0, provider,
                            "unexpected exit code " + std::to_string(WEXITSTATUS(outcome.status)));
    }
}

CommandResult run_command(const std::string& command, double timeout_seconds,
                          const std::vector<std::pair<std::string, std::string>>& env) {
    CommandResult result;
    pid_t pid = fork();
    if (pid < 0) {
        result.spawn_failed = true;
        return result;
    }
    if (pid == 0) {
        for (const auto& [key, value] : env)
            setenv(key.c_str(), value.c_str(), 1);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    WaitOutcome outcome = wait_with_timeout(pid, timeout_seconds);
    if (outcome.timed_out) {
        result.timed_out = true;
        return result;
    }
    if (WIFSIGNALED(outcome.status)) {
        result.term_signal = WTERMSIG(outcome.status);
        return result;
    }
    result.exit_code = WIFEXITED(outcome.status) ? WEXITSTATUS(outcome.status) : -1;
    return result;
}

} // namespace giw
