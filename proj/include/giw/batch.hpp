#pragma once

// Lane-parallel interpreter: evaluates one program over 64 test cases at once.
// The lane emulation is portable (plain loops over fixed-width lanes) so every
// build behaves identically; correctness is defined by bit-equality with the
// scalar oracle in lgp.hpp, per column, at every lane width.

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "giw/lgp.hpp"

namespace giw {

enum class LaneWidth : std::uint8_t { w8 = 8, w16 = 16, w32 = 32 };

// 512-bit vector groups per register row: 64 byte lanes fit one group, 32
// 16-bit lanes need two, 16 32-bit lanes need four.
constexpr int vector_groups(LaneWidth width) {
    switch (width) {
    case LaneWidth::w8: return 1;
    case LaneWidth::w16: return 2;
    case LaneWidth::w32: return 4;
    }
    return 1;
}

struct BatchOptions {
    LaneWidth width = LaneWidth::w8;
    // Keep the dead pre-mask in the widened operand paths. Semantically inert
    // (outputs are identical either way) but it costs operations, so the
    // search benchmark has the same inefficiency to find as the hand code.
    bool redundant_mask = true;
    // Dispatch the opcode chain with >= instead of ==. Equivalent because div
    // holds the largest code; exists so the equivalence is directly testable.
    bool ge_dispatch = false;
};

// Cost-model operation count, the deterministic stand-in for a hardware
// retired-instruction counter. Per executed instruction per vector group:
// dispatch 1, operand fetch 1 each, add/sub/mul 1, div 2; widened paths add
// 1 per redundant mask and 1 for the narrow-to-byte step.
struct BatchStats {
    std::uint64_t model_ops = 0;
};

// One row per register, one column per test case.
struct RegisterFileBatch {
    std::array<byte, register_count * batch_lanes> regs{};
    std::uint8_t written = 0;

    byte at(int reg, int lane) const { return regs[reg * batch_lanes + lane]; }

    friend bool operator==(const RegisterFileBatch&, const RegisterFileBatch&) = default;
};

enum class WhichOperand { first, second };

// Operand values widened to the configured lane width, stored one per lane.
// With the default options upper bits are zero; with redundant_mask off the
// w16/w32 paths keep the sign-extension residue for downstream ops to narrow.
struct WideLanes {
    std::array<std::uint32_t, batch_lanes> lane{};
};

WideLanes fetch_operand(const Instruction& instr, WhichOperand which,
                        const RegisterFileBatch& batch, const BatchOptions& opts);

// Per-lane protected division through the table, grouped as 32-bit gathers
// (four groups of 16 lanes).
std::array<byte, batch_lanes> gather_divide(std::span<const byte, batch_lanes> xs,
                                            std::span<const byte, batch_lanes> ys,
                                            const DivisionTable& table);

// Fixed-size instruction encoding handed to the sandboxed interpreter entry
// point (one read-only arena block holds length + instructions).
struct EncodedInstr {
    std::uint8_t op = 0;
    std::uint8_t dst = 0;
    std::uint8_t src1 = 0;
    std::uint8_t src2 = 0;
    std::uint8_t src2_is_const = 0;
    std::uint8_t pad[3] = {0, 0, 0};
};
static_assert(sizeof(EncodedInstr) == 8);

EncodedInstr encode_instruction(const Instruction& instr);
Instruction decode_instruction(const EncodedInstr& enc);

// The interpreter proper. Operates on raw pointers because the harness hands
// it arena memory: `registers` is the writable 8x64 matrix (inputs preloaded,
// everything else the padding byte), `lut` the read-only division table.
// Returns the bitmask of written register rows.
std::uint8_t interpret64(std::uint32_t instr_count, const EncodedInstr* code,
                         byte* registers, const std::uint32_t* lut,
                         const BatchOptions& opts, BatchStats* stats);

// Value-level wrapper: runs `interpret64` over exactly 64 input pairs.
RegisterFileBatch interpret_batch(const Program& program,
                                  std::span<const std::pair<byte, byte>, batch_lanes> cases,
                                  const DivisionTable& table, const BatchOptions& opts,
                                  BatchStats* stats = nullptr);

// 8x64 CSV (one row per register) for debugging.
std::string batch_to_csv(const RegisterFileBatch& batch);

} // namespace giw
