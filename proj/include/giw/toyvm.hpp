#pragma once

// The miniature statement language behind the hermetic pipeline mode: a
// strict compiler to a small register IR, an optional peephole optimizer
// (stage-2 "optimized" builds), and a cost-counting virtual machine whose
// operation total stands in for a retired-instruction count.
//
// Cost per executed operation: loads, moves, additions, subtractions, bit
// ops, shifts, ordered compares, indexing and jumps cost 1; multiply, divide,
// modulo and equality compares cost 2 (equality tests a value pair, ordered
// compares only a sign).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace giw {

enum class ToyOp : std::uint8_t {
    loadk,
    mov,
    add,
    sub,
    mul,
    divi,
    mod,
    band,
    bor,
    bxor,
    shl,
    shr,
    cmpeq,
    cmpne,
    cmplt,
    cmple,
    cmpgt,
    cmpge,
    loadidx,  // dst <- array[a] [ reg b ]
    storeidx, // array[dst] [ reg a ] <- reg b
    jz,       // if reg a == 0, jump to instruction b
    jmp,      // jump to instruction a
    halt,
};

struct ToyInstr {
    ToyOp op = ToyOp::halt;
    std::int32_t dst = 0;
    std::int32_t a = 0;
    std::int32_t b = 0;
    std::uint64_t imm = 0;
};

// Names the compiler resolves against the host environment: arrays are
// indexed stores the host owns; scalars are preset variables.
struct ToyHostSpec {
    std::vector<std::string> arrays;
    std::vector<std::string> scalars;
};

struct ToyModule {
    std::vector<ToyInstr> code;
    std::int32_t reg_count = 0;
    std::vector<std::string> array_names;                  // id -> host array
    std::vector<std::pair<std::string, std::int32_t>> scalar_regs;

    // Deterministic byte image; equality of images is the equivalent-mutant
    // check (identical compiled artifact => rejected without running).
    std::string serialize() const;
};

struct ToyCompileResult {
    bool ok = false;
    ToyModule module;
    std::string error;
};

ToyCompileResult toy_compile(const std::string& source, const ToyHostSpec& host,
                             bool optimize);

struct ToyArrayView {
    std::uint64_t* data = nullptr;
    std::size_t len = 0;
    bool read_only = false;
};

enum class ToyFault : std::uint8_t {
    none,
    out_of_bounds,
    readonly_write,
    div_by_zero,
    step_limit,
    missing_array,
};

const char* toy_fault_name(ToyFault fault);

struct ToyExecResult {
    ToyFault fault = ToyFault::none;
    std::uint64_t cost = 0;
    std::uint64_t steps = 0;
    std::string detail;
};

ToyExecResult toy_execute(const ToyModule& module,
                          const std::map<std::string, ToyArrayView>& arrays,
                          const std::map<std::string, std::uint64_t>& scalars,
                          std::uint64_t max_steps);

} // namespace giw
