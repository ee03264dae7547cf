#pragma once

// Core linear-GP model: the four-opcode instruction set over 8 byte registers,
// wraparound byte arithmetic, protected division and its lookup table, and the
// scalar reference interpreter that serves as the correctness oracle for the
// lane-parallel interpreter and the sandbox harness.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace giw {

using byte = std::uint8_t;

constexpr int register_count = 8;
constexpr int batch_lanes = 64;

// Padding byte filling unused sandbox memory and uninvolved registers.
// 90 = 0x5a: four bits set, four clear.
constexpr byte padding_byte = 90;

// div must keep the numerically largest code: the batch interpreter dispatches
// with a descending compare chain and relies on (code == div) <=> (code >= div).
enum class Opcode : std::uint8_t { add = 0, sub = 1, mul = 2, div = 3 };

constexpr int opcode_count = 4;
static_assert(static_cast<int>(Opcode::div) == opcode_count - 1);

char opcode_char(Opcode op);
std::optional<Opcode> opcode_from_char(char c);

// Second operand: a register index, or a constant broadcast to every lane.
struct Operand {
    bool is_const = false;
    byte value = 0; // register index 0..7, or constant byte

    friend bool operator==(const Operand&, const Operand&) = default;
};

struct Instruction {
    Opcode op = Opcode::add;
    byte dst = 0;  // 0..7
    byte src1 = 0; // 0..7
    Operand src2;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Program {
    std::vector<Instruction> code;
    byte input_reg_x = 0;
    byte input_reg_y = 0;
    byte output_reg = 0;

    friend bool operator==(const Program&, const Program&) = default;
};

// Validates register ranges. Constants are accepted over the full byte range:
// the generator only ever draws 0..127 but fixture programs use larger ones.
bool instruction_valid(const Instruction& instr);

// y == 0 yields 0; otherwise the integer quotient. Total on bytes.
constexpr byte protected_div(byte x, byte y) {
    return y == 0 ? byte{0} : static_cast<byte>(x / y);
}

// 256x256 table of precomputed protected-division results. Entries are 32 bits
// wide (values 0..255) so lane-parallel code can use 32-bit gathers; the whole
// table is 256*256*4 bytes = 64 pages of 4096 bytes.
class DivisionTable {
public:
    static constexpr std::size_t entry_count = 256 * 256;
    static constexpr std::size_t size_bytes = entry_count * sizeof(std::uint32_t);

    static DivisionTable build();

    std::uint32_t at(byte x, byte y) const {
        return entries_[static_cast<std::size_t>(x) * 256 + y];
    }

    const std::uint32_t* data() const { return entries_.data(); }

private:
    DivisionTable() = default;
    std::vector<std::uint32_t> entries_; // row-major [x][y]
};

// add/sub/mul wrap modulo 256; div goes through the lookup table.
byte apply_opcode(Opcode op, byte a, byte b, const DivisionTable& table);

struct RegisterState {
    std::array<byte, register_count> regs{};
    std::uint8_t written = 0; // bitmask of registers written by the program

    bool was_written(int reg) const { return (written >> reg) & 1; }

    friend bool operator==(const RegisterState&, const RegisterState&) = default;
};

// Scalar reference interpreter. Registers start as the padding byte except the
// two input registers; instructions execute in order; `written` records
// destination registers. Deterministic and side-effect free.
RegisterState interpret_scalar(const Program& program, byte x, byte y,
                               const DivisionTable& table);

// Register state after each instruction (states[k] = state once instruction k
// has run). states[0] is the initial load.
std::vector<RegisterState> interpret_scalar_steps(const Program& program, byte x,
                                                  byte y, const DivisionTable& table);

// Per-case oracle states for a batch of inputs; the harness scores mutant
// output against these.
std::vector<RegisterState> expected_registers(const Program& program,
                                              std::span<const std::pair<byte, byte>> cases,
                                              const DivisionTable& table);

// Text form used by suite files, exactly as printed: R5=R0/R4, R6=R4/126.
std::string format_instruction(const Instruction& instr);
Instruction parse_instruction(std::string_view line); // throws std::runtime_error

} // namespace giw
