#include "doctest.h"

#include "giw/lgp.hpp"
#include "helpers.hpp"

using namespace giw;

TEST_CASE("protected division") {
    CHECK(protected_div(221, 5) == 44);
    CHECK(protected_div(170, 0) == 0);
    CHECK(protected_div(255, 1) == 255);
    CHECK(protected_div(217, 8) == 27);

    for (int x = 0; x < 256; ++x) {
        CHECK(protected_div(static_cast<byte>(x), 0) == 0);
        CHECK(protected_div(static_cast<byte>(x), 1) == x);
    }
    for (int x = 0; x < 256; ++x)
        for (int y = 1; y < 256; ++y)
            REQUIRE(protected_div(static_cast<byte>(x), static_cast<byte>(y)) <= x);
}

TEST_CASE("division table matches protected_div exhaustively") {
    DivisionTable table = DivisionTable::build();
    for (int x = 0; x < 256; ++x)
        for (int y = 0; y < 256; ++y) {
            std::uint32_t entry = table.at(static_cast<byte>(x), static_cast<byte>(y));
            REQUIRE(entry == protected_div(static_cast<byte>(x), static_cast<byte>(y)));
            REQUIRE((entry & 0xffffff00u) == 0); // upper 24 bits clear
        }
    CHECK(table.at(243, 1) == 243);
    CHECK(table.at(248, 236) == 1);
    CHECK(DivisionTable::size_bytes == 262144);
    CHECK(DivisionTable::size_bytes == 64 * 4096);
}

TEST_CASE("apply_opcode semantics") {
    DivisionTable table = DivisionTable::build();
    for (int v = 0; v < 256; ++v)
        CHECK(apply_opcode(Opcode::sub, static_cast<byte>(v), static_cast<byte>(v), table) == 0);
    CHECK(apply_opcode(Opcode::mul, 16, 16, table) == 0);
    CHECK(apply_opcode(Opcode::add, 200, 100, table) == 44);
    CHECK(apply_opcode(Opcode::div, 96, 122, table) == 0);

    for (int a = 0; a < 256; ++a)
        for (int b = 0; b < 256; ++b) {
            byte x = static_cast<byte>(a), y = static_cast<byte>(b);
            REQUIRE(apply_opcode(Opcode::add, x, y, table) == ((a + b) & 0xff));
            REQUIRE(apply_opcode(Opcode::sub, x, y, table) == ((a - b + 256) & 0xff));
            REQUIRE(apply_opcode(Opcode::mul, x, y, table) == ((a * b) & 0xff));
        }
}

TEST_CASE("opcode encoding: equality and >= against div coincide") {
    int div_code = static_cast<int>(Opcode::div);
    for (int code = 0; code < opcode_count; ++code)
        CHECK((code == div_code) == (code >= div_code));
}

TEST_CASE("scalar interpreter") {
    DivisionTable table = DivisionTable::build();

    SUBCASE("self-subtraction zeroes the register") {
        // program 2 instruction 2 shape: R5 = R4 - R4
        Program program;
        program.input_reg_x = 2;
        program.input_reg_y = 5;
        program.code.push_back(parse_instruction("R4=R2/R5"));
        program.code.push_back(parse_instruction("R5=R5-101"));
        program.code.push_back(parse_instruction("R5=R4-R4"));
        for (int x : {0, 17, 255})
            for (int y : {0, 3, 200}) {
                RegisterState st =
                    interpret_scalar(program, static_cast<byte>(x), static_cast<byte>(y), table);
                CHECK(st.regs[5] == 0);
            }
    }

    SUBCASE("division by zero at instruction 0") {
        Program program;
        program.input_reg_x = 0;
        program.input_reg_y = 4;
        program.code.push_back(parse_instruction("R5=R0/R4"));
        RegisterState st = interpret_scalar(program, 170, 0, table);
        CHECK(st.regs[5] == 0);
        CHECK(st.was_written(5));
    }

    SUBCASE("program 3 on (105, 1), hand-executed") {
        Program program;
        program.input_reg_x = 1;
        program.input_reg_y = 5;
        program.output_reg = 7;
        program.code.push_back(parse_instruction("R6=R1/R5"));
        program.code.push_back(parse_instruction("R4=R1+119"));
        program.code.push_back(parse_instruction("R6=R5+60"));
        program.code.push_back(parse_instruction("R7=R5-61"));
        RegisterState st = interpret_scalar(program, 105, 1, table);
        CHECK(st.regs[0] == padding_byte);
        CHECK(st.regs[1] == 105);
        CHECK(st.regs[2] == padding_byte);
        CHECK(st.regs[3] == padding_byte);
        CHECK(st.regs[4] == 224); // 105 + 119
        CHECK(st.regs[5] == 1);
        CHECK(st.regs[6] == 61); // 1 + 60
        CHECK(st.regs[7] == 196); // 1 - 61 mod 256
        CHECK(st.written == ((1u << 6) | (1u << 4) | (1u << 7)));
    }

    SUBCASE("determinism") {
        Rng rng(99);
        for (int i = 0; i < 50; ++i) {
            Program program = random_program(rng);
            byte x = static_cast<byte>(rng.below(256));
            byte y = static_cast<byte>(rng.below(256));
            CHECK(interpret_scalar(program, x, y, table) ==
                  interpret_scalar(program, x, y, table));
        }
    }
}

TEST_CASE("expected_registers") {
    DivisionTable table = DivisionTable::build();

    SUBCASE("empty program leaves non-input registers padded") {
        Program program;
        program.input_reg_x = 0;
        program.input_reg_y = 4;
        std::vector<std::pair<byte, byte>> cases = {{7, 9}, {0, 0}};
        auto expected = expected_registers(program, cases, table);
        REQUIRE(expected.size() == 2);
        for (int r = 0; r < register_count; ++r)
            if (r != 0 && r != 4)
                CHECK(expected[0].regs[r] == padding_byte);
        CHECK(expected[0].regs[0] == 7);
        CHECK(expected[0].regs[4] == 9);
        CHECK(expected[0].written == 0);
    }

    SUBCASE("matches case-by-case scalar interpretation") {
        Rng rng(123);
        for (int trial = 0; trial < 20; ++trial) {
            Program program = random_program(rng);
            std::vector<std::pair<byte, byte>> cases;
            for (int c = 0; c < 64; ++c)
                cases.emplace_back(static_cast<byte>(rng.below(256)),
                                   static_cast<byte>(rng.below(256)));
            auto expected = expected_registers(program, cases, table);
            for (int c = 0; c < 64; ++c)
                REQUIRE(expected[c] ==
                        interpret_scalar(program, cases[c].first, cases[c].second, table));
        }
    }
}

TEST_CASE("instruction text round-trip") {
    CHECK(format_instruction(parse_instruction("R5=R0/R4")) == "R5=R0/R4");
    CHECK(format_instruction(parse_instruction("R6=R4/126")) == "R6=R4/126");
    CHECK(format_instruction(parse_instruction("R6=R0*128")) == "R6=R0*128");
    CHECK(format_instruction(parse_instruction("R1=R5-61")) == "R1=R5-61");
    CHECK(format_instruction(parse_instruction("R1=R4+R4")) == "R1=R4+R4");

    Instruction instr = parse_instruction("R6=R4/126");
    CHECK(instr.op == Opcode::div);
    CHECK(instr.dst == 6);
    CHECK(instr.src1 == 4);
    CHECK(instr.src2.is_const);
    CHECK(instr.src2.value == 126);

    CHECK_THROWS(parse_instruction("R9=R0/R4"));
    CHECK_THROWS(parse_instruction("R1=R0?R4"));
    CHECK_THROWS(parse_instruction("R1=R0/999"));
    CHECK_THROWS(parse_instruction("R1=R0/R4 junk"));

    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        Instruction a = random_program(rng, 1).code[0];
        Instruction b = parse_instruction(format_instruction(a));
        REQUIRE(a == b);
    }
}
