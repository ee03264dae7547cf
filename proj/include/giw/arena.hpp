#pragma once

// Page-aligned sandbox memory for running candidate interpreter code: the
// writable register matrix, the read-only division table and encoded program,
// each flanked by inaccessible guard pages.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "giw/batch.hpp"
#include "giw/lgp.hpp"

namespace giw {

constexpr std::size_t page_size = 4096;
constexpr std::size_t lut_pages = DivisionTable::size_bytes / page_size;
static_assert(lut_pages == 64);

class Arena {
public:
    // Layout: guard | registers page | guard | 64 LUT pages | guard | program
    // page(s) | guard. Inputs are preloaded into the two input-register rows;
    // every other register byte and all page padding is the padding byte.
    // Throws std::runtime_error if mapping or protection fails.
    static Arena build(const Program& program, std::span<const std::pair<byte, byte>> cases,
                       const DivisionTable& table);

    Arena(Arena&& other) noexcept { *this = std::move(other); }
    Arena& operator=(Arena&& other) noexcept;
    Arena(const Arena&) = delete;
    Arena& operator=(const Arena&) = delete;
    ~Arena();

    byte* registers() { return registers_; }
    const byte* registers() const { return registers_; }
    const std::uint32_t* lut() const { return lut_; }
    std::uint32_t instr_count() const;
    const EncodedInstr* program() const;

    // Raw block addresses, used by the fault-injection paths.
    byte* registers_page() { return registers_; }
    byte* lut_page() { return reinterpret_cast<byte*>(const_cast<std::uint32_t*>(lut_)); }
    byte* program_page() { return program_block_; }

private:
    Arena() = default;

    byte* base_ = nullptr;
    std::size_t total_size_ = 0;
    byte* registers_ = nullptr;
    const std::uint32_t* lut_ = nullptr;
    byte* program_block_ = nullptr;
};

// True iff the registers-page padding (bytes beyond the 8x64 matrix) and every
// register row the program never writes (input rows aside) still hold the
// padding byte. Blind to reads by construction.
bool check_padding(const Arena& arena, const Program& program);

// Sum of |actual - expected| over the registers the program writes, for the
// first `case_count` columns.
std::uint64_t score_outputs(const byte* registers, std::span<const RegisterState> expected,
                            std::uint8_t written_mask, std::size_t case_count);

} // namespace giw
