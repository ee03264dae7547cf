// Reference candidate runner: loads a suite, builds the guarded arena per
// program, runs the lane-parallel interpreter on the arena memory, verifies
// padding and registers, scores outputs against the scalar oracle and writes
// the counter file. Exits through _exit so the page protections are never
// unwound: 0 ok, 1 wrong outputs, 3 padding overwritten, 4 registers
// corrupted, 9 counter unavailable.
//
// --fault injects deliberate misbehaviour for the sandbox tests.

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "giw/arena.hpp"
#include "giw/batch.hpp"
#include "giw/runner.hpp"
#include "giw/testgen.hpp"

namespace {

const char* canary_path = nullptr;

void canary() {
    // Only reachable if the process unwinds through the normal exit path;
    // the harness asserts this file never appears.
    if (canary_path) {
        std::FILE* f = std::fopen(canary_path, "w");
        if (f)
            std::fclose(f);
    }
}

[[noreturn]] void finish(int code, const std::string& counter_out,
                         const std::map<std::string, std::string>& kv) {
    if (!counter_out.empty())
        giw::write_kv_file(counter_out, kv);
    _exit(code);
}

void inject_fault(const std::string& kind, giw::Arena& arena) {
    volatile giw::byte* regs = arena.registers_page();
    volatile giw::byte* lut = arena.lut_page();
    volatile giw::byte* prog = arena.program_page();
    if (kind == "reg-minus-one") {
        regs[-1] = 0; // register index -1 lands in the low guard page
    } else if (kind == "past-registers") {
        regs[giw::page_size] = 0; // one past the registers page
    } else if (kind == "lut-write") {
        lut[0] = 0;
    } else if (kind == "program-write") {
        prog[0] = 0;
    } else if (kind == "lut-minus-one") {
        (void)lut[-1]; // guard pages fault on reads too
    } else if (kind == "past-lut") {
        (void)lut[giw::lut_pages * giw::page_size];
    } else if (kind == "program-minus-one") {
        (void)prog[-1];
    } else if (kind == "past-program") {
        prog[giw::page_size] = 0; // fixture programs fit one page
    } else if (kind == "padding") {
        regs[3000] = 0; // inside the registers page, beyond the 8x64 matrix
    }
}

} // namespace

int main(int argc, char** argv) {
    using namespace giw;

    std::string suite_path;
    std::string counter_out;
    std::string fault;
    BatchOptions opts;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        auto next = [&]() -> std::string {
            if (i + 1 >= argc) {
                std::fprintf(stderr, "giw-child: missing value for %s\n", arg.c_str());
                _exit(2);
            }
            return argv[++i];
        };
        if (arg == "--counter-out") {
            counter_out = next();
        } else if (arg == "--fault") {
            fault = next();
        } else if (arg == "--width") {
            std::string w = next();
            opts.width = w == "16" ? LaneWidth::w16 : w == "32" ? LaneWidth::w32 : LaneWidth::w8;
        } else if (arg == "--no-redundant-mask") {
            opts.redundant_mask = false;
        } else if (arg == "--ge-dispatch") {
            opts.ge_dispatch = true;
        } else if (arg == "--exit-canary") {
            static std::string path;
            path = next();
            canary_path = path.c_str();
            std::atexit(canary);
        } else if (!arg.empty() && arg[0] != '-') {
            suite_path = arg;
        } else {
            std::fprintf(stderr, "giw-child: unknown flag %s\n", arg.c_str());
            _exit(2);
        }
    }
    if (suite_path.empty()) {
        std::fprintf(stderr, "usage: giw-child <suite> [--counter-out FILE] [--width 8|16|32]\n");
        _exit(2);
    }

    const char* counter_sel = std::getenv("GI_COUNTER");
    const bool use_hw = counter_sel && std::string(counter_sel) == "hw";
    std::map<std::string, std::string> kv;
    kv["provider"] = use_hw ? "hw" : "model";

    if (use_hw && !InstructionCounter::available())
        finish(9, counter_out, kv);

    TestSuite suite;
    try {
        suite = load_suite(suite_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "giw-child: %s\n", e.what());
        _exit(2);
    }

    const DivisionTable table = DivisionTable::build();
    std::uint64_t total_error = 0;
    std::uint64_t total_instructions = 0;
    BatchStats stats;
    InstructionCounter hw_counter;

    if (fault == "hang")
        for (;;)
            ;

    for (const SuiteProgram& sp : suite.programs) {
        // evaluate in 64-case tiles; each tile gets a fresh guarded arena
        for (std::size_t tile = 0; tile < sp.cases.size(); tile += batch_lanes) {
            const std::size_t count = std::min<std::size_t>(batch_lanes, sp.cases.size() - tile);
            std::span<const std::pair<byte, byte>> cases(sp.cases.data() + tile, count);
            Arena arena = Arena::build(sp.program, cases, table);

            if (use_hw)
                hw_counter.start();
            std::uint8_t written =
                interpret64(arena.instr_count(), arena.program(), arena.registers(),
                            arena.lut(), opts, &stats);
            if (use_hw)
                total_instructions += hw_counter.stop();

            if (!fault.empty() && fault != "hang") {
                if (fault == "unused-reg") {
                    // poke the first row the program should leave untouched
                    std::uint8_t touched = written;
                    touched |= static_cast<std::uint8_t>(1u << sp.program.input_reg_x);
                    touched |= static_cast<std::uint8_t>(1u << sp.program.input_reg_y);
                    for (int r = 0; r < register_count; ++r) {
                        if (!((touched >> r) & 1)) {
                            arena.registers()[r * batch_lanes] = 0;
                            break;
                        }
                    }
                } else {
                    inject_fault(fault, arena);
                }
            }

            if (!check_padding(arena, sp.program)) {
                // distinguish page padding (3) from corrupted register rows (4)
                bool page_padding_ok = true;
                const byte* regs = arena.registers();
                for (std::size_t i = register_count * batch_lanes; i < page_size; ++i)
                    if (regs[i] != padding_byte) {
                        page_padding_ok = false;
                        break;
                    }
                finish(page_padding_ok ? 4 : 3, counter_out, kv);
            }

            std::vector<RegisterState> expected = expected_registers(sp.program, cases, table);
            std::uint8_t oracle_written = expected.empty() ? 0 : expected.front().written;
            total_error += score_outputs(arena.registers(), expected, oracle_written, count);
        }
    }

    if (!use_hw)
        total_instructions = stats.model_ops;

    kv["instructions"] = std::to_string(total_instructions);
    kv["error"] = std::to_string(total_error);
    if (total_error > 0)
        finish(1, counter_out, kv);
    finish(0, counter_out, kv);
}
