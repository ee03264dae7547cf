#include "giw/lgp.hpp"

#include <charconv>
#include <stdexcept>

namespace giw {

char opcode_char(Opcode op) {
    switch (op) {
    case Opcode::add: return '+';
    case Opcode::sub: return '-';
    case Opcode::mul: return '*';
    case Opcode::div: return '/';
    }
    return '?';
}

std::optional<Opcode> opcode_from_char(char c) {
    switch (c) {
    case '+': return Opcode::add;
    case '-': return Opcode::sub;
    case '*': return Opcode::mul;
    case '/': return Opcode::div;
    default: return std::nullopt;
    }
}

bool instruction_valid(const Instruction& instr) {
    if (instr.dst >= register_count || instr.src1 >= register_count)
        return false;
    if (!instr.src2.is_const && instr.src2.value >= register_count)
        return false;
    return static_cast<int>(instr.op) < opcode_count;
}

DivisionTable DivisionTable::build() {
    DivisionTable table;
    table.entries_.resize(entry_count);
    for (int x = 0; x < 256; ++x)
        for (int y = 0; y < 256; ++y)
            table.entries_[static_cast<std::size_t>(x) * 256 + y] =
                protected_div(static_cast<byte>(x), static_cast<byte>(y));
    return table;
}

byte apply_opcode(Opcode op, byte a, byte b, const DivisionTable& table) {
    switch (op) {
    case Opcode::add: return static_cast<byte>(a + b);
    case Opcode::sub: return static_cast<byte>(a - b);
    case Opcode::mul:
        // full 16-bit product truncated back to the low byte
        return static_cast<byte>((static_cast<unsigned>(a) * b) & 0xff);
    case Opcode::div: return static_cast<byte>(table.at(a, b));
    }
    return 0;
}

static RegisterState initial_state(const Program& program, byte x, byte y) {
    RegisterState st;
    st.regs.fill(padding_byte);
    st.regs[program.input_reg_x] = x;
    st.regs[program.input_reg_y] = y;
    return st;
}

static void step(RegisterState& st, const Instruction& instr, const DivisionTable& table) {
    byte a = st.regs[instr.src1];
    byte b = instr.src2.is_const ? instr.src2.value : st.regs[instr.src2.value];
    st.regs[instr.dst] = apply_opcode(instr.op, a, b, table);
    st.written |= static_cast<std::uint8_t>(1u << instr.dst);
}

RegisterState interpret_scalar(const Program& program, byte x, byte y,
                               const DivisionTable& table) {
    RegisterState st = initial_state(program, x, y);
    for (const Instruction& instr : program.code)
        step(st, instr, table);
    return st;
}

std::vector<RegisterState> interpret_scalar_steps(const Program& program, byte x,
                                                  byte y, const DivisionTable& table) {
    std::vector<RegisterState> states;
    states.reserve(program.code.size() + 1);
    states.push_back(initial_state(program, x, y));
    for (const Instruction& instr : program.code) {
        RegisterState st = states.back();
        step(st, instr, table);
        states.push_back(st);
    }
    return states;
}

std::vector<RegisterState> expected_registers(const Program& program,
                                              std::span<const std::pair<byte, byte>> cases,
                                              const DivisionTable& table) {
    std::vector<RegisterState> expected;
    expected.reserve(cases.size());
    for (auto [x, y] : cases)
        expected.push_back(interpret_scalar(program, x, y, table));
    return expected;
}

std::string format_instruction(const Instruction& instr) {
    std::string out = "R" + std::to_string(instr.dst) + "=R" + std::to_string(instr.src1);
    out += opcode_char(instr.op);
    if (instr.src2.is_const)
        out += std::to_string(instr.src2.value);
    else
        out += "R" + std::to_string(instr.src2.value);
    return out;
}

static unsigned parse_uint(std::string_view text, std::size_t& pos, std::string_view line) {
    unsigned value = 0;
    const char* first = text.data() + pos;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr == first)
        throw std::runtime_error("bad instruction: " + std::string(line));
    pos += static_cast<std::size_t>(ptr - first);
    return value;
}

Instruction parse_instruction(std::string_view line) {
    // strip surrounding whitespace
    std::string_view text = line;
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);

    auto fail = [&]() -> std::runtime_error {
        return std::runtime_error("bad instruction: " + std::string(line));
    };

    std::size_t pos = 0;
    auto expect = [&](char c) {
        if (pos >= text.size() || text[pos] != c)
            throw fail();
        ++pos;
    };

    Instruction instr;
    expect('R');
    unsigned dst = parse_uint(text, pos, line);
    expect('=');
    expect('R');
    unsigned src1 = parse_uint(text, pos, line);
    if (pos >= text.size())
        throw fail();
    auto op = opcode_from_char(text[pos]);
    if (!op)
        throw fail();
    ++pos;
    instr.op = *op;
    if (pos < text.size() && text[pos] == 'R') {
        ++pos;
        unsigned reg = parse_uint(text, pos, line);
        if (reg >= register_count)
            throw fail();
        instr.src2 = Operand{false, static_cast<byte>(reg)};
    } else {
        unsigned value = parse_uint(text, pos, line);
        if (value > 255)
            throw fail();
        instr.src2 = Operand{true, static_cast<byte>(value)};
    }
    if (pos != text.size())
        throw fail();
    if (dst >= register_count || src1 >= register_count)
        throw fail();
    instr.dst = static_cast<byte>(dst);
    instr.src1 = static_cast<byte>(src1);
    return instr;
}

} // namespace giw
