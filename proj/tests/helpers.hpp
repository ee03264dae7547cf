#pragma once

#include <unistd.h>

#include <limits.h>

#include <string>

#include "giw/lgp.hpp"
#include "giw/rng.hpp"

inline std::string fixture_path(const std::string& name) {
    return std::string(GIW_FIXTURE_DIR) + "/" + name;
}

// Project binaries land next to the test binaries (bin/ output dir).
inline std::string sibling_binary(const std::string& name) {
    char buf[PATH_MAX];
    ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    std::string self(buf, n > 0 ? static_cast<std::size_t>(n) : 0);
    std::size_t slash = self.rfind('/');
    return self.substr(0, slash + 1) + name;
}

inline giw::Program random_program(giw::Rng& rng, int length = 4) {
    giw::Program program;
    program.input_reg_x = static_cast<giw::byte>(rng.below(8));
    program.input_reg_y = static_cast<giw::byte>(rng.below(8));
    for (int i = 0; i < length; ++i) {
        giw::Instruction instr;
        instr.op = static_cast<giw::Opcode>(rng.below(4));
        instr.dst = static_cast<giw::byte>(rng.below(8));
        instr.src1 = static_cast<giw::byte>(rng.below(8));
        if (rng.chance(1, 2))
            instr.src2 = giw::Operand{true, static_cast<giw::byte>(rng.below(256))};
        else
            instr.src2 = giw::Operand{false, static_cast<giw::byte>(rng.below(8))};
        program.code.push_back(instr);
    }
    program.output_reg = program.code.back().dst;
    return program;
}
