#include "giw/arena.hpp"

#include <sys/mman.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

namespace giw {

namespace {

std::size_t pages_for(std::size_t bytes) {
    return (bytes + page_size - 1) / page_size;
}

void protect(void* addr, std::size_t len, int prot, const char* what) {
    if (mprotect(addr, len, prot) != 0)
        throw std::runtime_error(std::string("mprotect failed for ") + what);
}

} // namespace

Arena Arena::build(const Program& program, std::span<const std::pair<byte, byte>> cases,
                   const DivisionTable& table) {
    if (static_cast<std::size_t>(sysconf(_SC_PAGESIZE)) != page_size)
        throw std::runtime_error("arena: system page size is not 4096");
    if (cases.size() > batch_lanes)
        throw std::runtime_error("arena: at most 64 cases per arena");

    const std::size_t program_bytes = sizeof(std::uint32_t) + program.code.size() * sizeof(EncodedInstr);
    const std::size_t program_pages = pages_for(program_bytes);
    // guard + registers + guard + lut + guard + program + guard
    const std::size_t total_pages = 1 + 1 + 1 + lut_pages + 1 + program_pages + 1;

    Arena arena;
    arena.total_size_ = total_pages * page_size;
    void* base = mmap(nullptr, arena.total_size_, PROT_READ | PROT_WRITE,
                      MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
    if (base == MAP_FAILED)
        throw std::runtime_error("arena: mmap failed");
    arena.base_ = static_cast<byte*>(base);

    byte* p = arena.base_;
    byte* guard0 = p;
    arena.registers_ = p + page_size;
    byte* guard1 = arena.registers_ + page_size;
    byte* lut_block = guard1 + page_size;
    byte* guard2 = lut_block + lut_pages * page_size;
    arena.program_block_ = guard2 + page_size;
    byte* guard3 = arena.program_block_ + program_pages * page_size;

    // registers page: padding pattern everywhere, then the preloaded inputs
    std::memset(arena.registers_, padding_byte, page_size);
    for (std::size_t c = 0; c < cases.size(); ++c) {
        arena.registers_[program.input_reg_x * batch_lanes + c] = cases[c].first;
        arena.registers_[program.input_reg_y * batch_lanes + c] = cases[c].second;
    }

    std::memcpy(lut_block, table.data(), DivisionTable::size_bytes);
    arena.lut_ = reinterpret_cast<const std::uint32_t*>(lut_block);

    std::memset(arena.program_block_, padding_byte, program_pages * page_size);
    std::uint32_t count = static_cast<std::uint32_t>(program.code.size());
    std::memcpy(arena.program_block_, &count, sizeof(count));
    EncodedInstr* code = reinterpret_cast<EncodedInstr*>(arena.program_block_ + sizeof(count));
    for (std::size_t i = 0; i < program.code.size(); ++i)
        code[i] = encode_instruction(program.code[i]);

    protect(guard0, page_size, PROT_NONE, "low guard");
    protect(guard1, page_size, PROT_NONE, "registers guard");
    protect(lut_block, lut_pages * page_size, PROT_READ, "lut block");
    protect(guard2, page_size, PROT_NONE, "lut guard");
    protect(arena.program_block_, program_pages * page_size, PROT_READ, "program block");
    protect(guard3, page_size, PROT_NONE, "high guard");
    return arena;
}

Arena& Arena::operator=(Arena&& other) noexcept {
    if (this != &other) {
        if (base_)
            munmap(base_, total_size_);
        base_ = other.base_;
        total_size_ = other.total_size_;
        registers_ = other.registers_;
        lut_ = other.lut_;
        program_block_ = other.program_block_;
        other.base_ = nullptr;
        other.total_size_ = 0;
    }
    return *this;
}

Arena::~Arena() {
    if (base_)
        munmap(base_, total_size_);
}

std::uint32_t Arena::instr_count() const {
    std::uint32_t count;
    std::memcpy(&count, program_block_, sizeof(count));
    return count;
}

const EncodedInstr* Arena::program() const {
    return reinterpret_cast<const EncodedInstr*>(program_block_ + sizeof(std::uint32_t));
}

bool check_padding(const Arena& arena, const Program& program) {
    const byte* regs = arena.registers();
    for (std::size_t i = register_count * batch_lanes; i < page_size; ++i)
        if (regs[i] != padding_byte)
            return false;
    std::uint8_t touched = 0;
    touched |= static_cast<std::uint8_t>(1u << program.input_reg_x);
    touched |= static_cast<std::uint8_t>(1u << program.input_reg_y);
    for (const Instruction& instr : program.code)
        touched |= static_cast<std::uint8_t>(1u << instr.dst);
    for (int r = 0; r < register_count; ++r) {
        if ((touched >> r) & 1)
            continue;
        for (int c = 0; c < batch_lanes; ++c)
            if (regs[r * batch_lanes + c] != padding_byte)
                return false;
    }
    return true;
}

std::uint64_t score_outputs(const byte* registers, std::span<const RegisterState> expected,
                            std::uint8_t written_mask, std::size_t case_count) {
    std::uint64_t error = 0;
    for (int r = 0; r < register_count; ++r) {
        if (!((written_mask >> r) & 1))
            continue;
        for (std::size_t c = 0; c < case_count && c < expected.size(); ++c) {
            int actual = registers[r * batch_lanes + c];
            int want = expected[c].regs[r];
            error += static_cast<std::uint64_t>(actual > want ? actual - want : want - actual);
        }
    }
    return error;
}

} // namespace giw
