#include "giw/batch.hpp"

#include <sstream>

namespace giw {

namespace {

constexpr std::uint8_t div_code = static_cast<std::uint8_t>(Opcode::div);
constexpr std::uint8_t mul_code = static_cast<std::uint8_t>(Opcode::mul);
constexpr std::uint8_t sub_code = static_cast<std::uint8_t>(Opcode::sub);

// The compare-per-opcode dispatch site. With ge_dispatch the equality tests
// become >=, which is equivalent because the chain tests codes in descending
// order and div is the largest.
inline bool dispatch_match(std::uint8_t op, std::uint8_t code, const BatchOptions& opts) {
    return opts.ge_dispatch ? op >= code : op == code;
}

inline std::uint32_t sign_extend(byte v, LaneWidth width) {
    switch (width) {
    case LaneWidth::w8: return v;
    case LaneWidth::w16: return static_cast<std::uint16_t>(static_cast<std::int8_t>(v));
    case LaneWidth::w32: return static_cast<std::uint32_t>(static_cast<std::int8_t>(v));
    }
    return v;
}

inline std::uint32_t lane_wrap(std::uint64_t v, LaneWidth width) {
    switch (width) {
    case LaneWidth::w8: return static_cast<std::uint32_t>(v & 0xff);
    case LaneWidth::w16: return static_cast<std::uint32_t>(v & 0xffff);
    case LaneWidth::w32: return static_cast<std::uint32_t>(v & 0xffffffff);
    }
    return static_cast<std::uint32_t>(v);
}

WideLanes fetch_raw(const EncodedInstr& in, WhichOperand which, const byte* registers,
                    const BatchOptions& opts) {
    WideLanes out;
    if (which == WhichOperand::second && in.src2_is_const) {
        // constants broadcast to all lanes; they never carry a sign residue
        std::uint32_t v = sign_extend(in.src2, opts.width);
        out.lane.fill(v);
    } else {
        int row = which == WhichOperand::first ? in.src1 : in.src2;
        const byte* src = registers + row * batch_lanes;
        for (int c = 0; c < batch_lanes; ++c)
            out.lane[c] = sign_extend(src[c], opts.width);
    }
    if (opts.redundant_mask && opts.width != LaneWidth::w8) {
        for (auto& v : out.lane)
            v &= 0xff;
    }
    return out;
}

} // namespace

WideLanes fetch_operand(const Instruction& instr, WhichOperand which,
                        const RegisterFileBatch& batch, const BatchOptions& opts) {
    return fetch_raw(encode_instruction(instr), which, batch.regs.data(), opts);
}

std::array<byte, batch_lanes> gather_divide(std::span<const byte, batch_lanes> xs,
                                            std::span<const byte, batch_lanes> ys,
                                            const DivisionTable& table) {
    std::array<byte, batch_lanes> out{};
    const std::uint32_t* lut = table.data();
    // four gathers of 16 lanes each, 32-bit entries
    for (int group = 0; group < 4; ++group) {
        for (int k = 0; k < 16; ++k) {
            int c = group * 16 + k;
            std::uint32_t index = static_cast<std::uint32_t>(xs[c]) * 256 + ys[c];
            out[c] = static_cast<byte>(lut[index]);
        }
    }
    return out;
}

EncodedInstr encode_instruction(const Instruction& instr) {
    EncodedInstr enc;
    enc.op = static_cast<std::uint8_t>(instr.op);
    enc.dst = instr.dst;
    enc.src1 = instr.src1;
    enc.src2 = instr.src2.value;
    enc.src2_is_const = instr.src2.is_const ? 1 : 0;
    return enc;
}

Instruction decode_instruction(const EncodedInstr& enc) {
    Instruction instr;
    instr.op = static_cast<Opcode>(enc.op & 3);
    instr.dst = enc.dst;
    instr.src1 = enc.src1;
    instr.src2 = Operand{enc.src2_is_const != 0, enc.src2};
    return instr;
}

std::uint8_t interpret64(std::uint32_t instr_count, const EncodedInstr* code,
                         byte* registers, const std::uint32_t* lut,
                         const BatchOptions& opts, BatchStats* stats) {
    std::uint8_t written = 0;
    const std::uint64_t groups = vector_groups(opts.width);
    const bool widened = opts.width != LaneWidth::w8;
    std::uint64_t ops = 0;

    for (std::uint32_t i = 0; i < instr_count; ++i) {
        const EncodedInstr& in = code[i];
        byte* dst = registers + (in.dst & 7) * batch_lanes;
        ops += groups; // dispatch

        if (dispatch_match(in.op, div_code, opts)) {
            WideLanes a = fetch_raw(in, WhichOperand::first, registers, opts);
            WideLanes b = fetch_raw(in, WhichOperand::second, registers, opts);
            ops += groups * 2; // operand fetches
            if (opts.redundant_mask && widened)
                ops += groups * 2;
            // gather indices are masked to bytes regardless of lane residue
            for (int c = 0; c < batch_lanes; ++c) {
                std::uint32_t index = (a.lane[c] & 0xff) * 256 + (b.lane[c] & 0xff);
                dst[c] = static_cast<byte>(lut[index]);
            }
            ops += groups * 2; // div weight
        } else if (dispatch_match(in.op, mul_code, opts)) {
            WideLanes a = fetch_raw(in, WhichOperand::first, registers, opts);
            WideLanes b = fetch_raw(in, WhichOperand::second, registers, opts);
            ops += groups * 2;
            if (opts.redundant_mask && widened)
                ops += groups * 2;
            if (widened) {
                for (int c = 0; c < batch_lanes; ++c) {
                    std::uint64_t p = static_cast<std::uint64_t>(a.lane[c]) * b.lane[c];
                    dst[c] = static_cast<byte>(lane_wrap(p, opts.width) & 0xff);
                }
                ops += groups * 2; // mul + narrow
            } else {
                // bytes widen to 16-bit lanes for the multiply, low byte kept
                for (int c = 0; c < batch_lanes; ++c) {
                    std::uint32_t p = (a.lane[c] * b.lane[c]) & 0xffff;
                    dst[c] = static_cast<byte>(p & 0xff);
                }
                ops += groups;
            }
        } else if (dispatch_match(in.op, sub_code, opts)) {
            WideLanes a = fetch_raw(in, WhichOperand::first, registers, opts);
            WideLanes b = fetch_raw(in, WhichOperand::second, registers, opts);
            ops += groups * 2;
            if (opts.redundant_mask && widened)
                ops += groups * 2;
            for (int c = 0; c < batch_lanes; ++c) {
                std::uint64_t d = static_cast<std::uint64_t>(a.lane[c]) - b.lane[c];
                dst[c] = static_cast<byte>(lane_wrap(d, opts.width) & 0xff);
            }
            ops += widened ? groups * 2 : groups;
        } else {
            WideLanes a = fetch_raw(in, WhichOperand::first, registers, opts);
            WideLanes b = fetch_raw(in, WhichOperand::second, registers, opts);
            ops += groups * 2;
            if (opts.redundant_mask && widened)
                ops += groups * 2;
            for (int c = 0; c < batch_lanes; ++c) {
                std::uint64_t s = static_cast<std::uint64_t>(a.lane[c]) + b.lane[c];
                dst[c] = static_cast<byte>(lane_wrap(s, opts.width) & 0xff);
            }
            ops += widened ? groups * 2 : groups;
        }
        written |= static_cast<std::uint8_t>(1u << (in.dst & 7));
    }
    if (stats)
        stats->model_ops += ops;
    return written;
}

RegisterFileBatch interpret_batch(const Program& program,
                                  std::span<const std::pair<byte, byte>, batch_lanes> cases,
                                  const DivisionTable& table, const BatchOptions& opts,
                                  BatchStats* stats) {
    RegisterFileBatch batch;
    batch.regs.fill(padding_byte);
    for (int c = 0; c < batch_lanes; ++c) {
        batch.regs[program.input_reg_x * batch_lanes + c] = cases[c].first;
        batch.regs[program.input_reg_y * batch_lanes + c] = cases[c].second;
    }

    std::vector<EncodedInstr> code;
    code.reserve(program.code.size());
    for (const Instruction& instr : program.code)
        code.push_back(encode_instruction(instr));

    batch.written = interpret64(static_cast<std::uint32_t>(code.size()), code.data(),
                                batch.regs.data(), table.data(), opts, stats);
    return batch;
}

std::string batch_to_csv(const RegisterFileBatch& batch) {
    std::ostringstream out;
    for (int r = 0; r < register_count; ++r) {
        for (int c = 0; c < batch_lanes; ++c) {
            if (c)
                out << ',';
            out << static_cast<int>(batch.at(r, c));
        }
        out << '\n';
    }
    return out.str();
}

} // namespace giw
