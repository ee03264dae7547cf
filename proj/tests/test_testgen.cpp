#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "giw/testgen.hpp"
#include "helpers.hpp"

using namespace giw;

TEST_CASE("gen_programs constraints") {
    SUBCASE("instruction 0 divides the two input registers") {
        for (std::uint64_t seed = 1; seed <= 200; ++seed) {
            Rng rng(seed);
            for (const Program& p : gen_programs(rng)) {
                REQUIRE(p.code.size() == 4);
                const Instruction& first = p.code[0];
                REQUIRE(first.op == Opcode::div);
                REQUIRE(first.src1 == p.input_reg_x);
                REQUIRE_FALSE(first.src2.is_const);
                REQUIRE(first.src2.value == p.input_reg_y);
                REQUIRE(p.code.back().dst == p.output_reg);
            }
        }
    }

    SUBCASE("all four opcodes appear across the suite") {
        for (std::uint64_t seed = 1; seed <= 500; ++seed) {
            Rng rng(seed);
            std::set<Opcode> seen;
            for (const Program& p : gen_programs(rng))
                for (const Instruction& instr : p.code)
                    seen.insert(instr.op);
            REQUIRE(seen.size() == 4);
        }
    }

    SUBCASE("constants stay in 0..127 and reads are write-before-read") {
        Rng rng(77);
        int reg_operands = 0, const_operands = 0;
        for (int trial = 0; trial < 2000; ++trial) {
            for (const Program& p : gen_programs(rng)) {
                std::set<int> known = {p.input_reg_x, p.input_reg_y};
                for (std::size_t i = 0; i < p.code.size(); ++i) {
                    const Instruction& instr = p.code[i];
                    REQUIRE(instruction_valid(instr));
                    if (i > 0) {
                        REQUIRE(known.count(instr.src1));
                        if (instr.src2.is_const) {
                            ++const_operands;
                            REQUIRE(instr.src2.value <= 127);
                        } else {
                            ++reg_operands;
                            REQUIRE(known.count(instr.src2.value));
                        }
                    }
                    known.insert(instr.dst);
                }
            }
        }
        // second operands are registers a fifth of the time
        double frac = static_cast<double>(reg_operands) / (reg_operands + const_operands);
        CHECK(frac > 0.17);
        CHECK(frac < 0.23);
    }
}

TEST_CASE("gen_division_inputs") {
    SUBCASE("every pair hits its category target") {
        Rng rng(42);
        for (const DivInput& input : gen_division_inputs(rng, 20000)) {
            REQUIRE(protected_div(input.x, input.y) == input.target);
            switch (input.category) {
            case DivCategory::div_zero: REQUIRE(input.y == 0); break;
            case DivCategory::quot_zero:
                REQUIRE(input.y != 0);
                REQUIRE(input.target == 0);
                break;
            case DivCategory::quot_one: REQUIRE(input.target == 1); break;
            case DivCategory::quot_max:
                REQUIRE(input.x == 255);
                REQUIRE(input.y == 1);
                break;
            case DivCategory::quot_random:
                REQUIRE(input.target >= 1);
                break;
            case DivCategory::quot_uniform:
                REQUIRE(input.target >= 2);
                REQUIRE(input.target <= 127);
                break;
            }
        }
    }

    SUBCASE("divisor-zero fraction near one half") {
        Rng rng(1234);
        auto inputs = gen_division_inputs(rng, 20000);
        int zeros = 0;
        for (const DivInput& input : inputs)
            zeros += input.y == 0;
        double frac = static_cast<double>(zeros) / static_cast<double>(inputs.size());
        CHECK(frac > 0.47);
        CHECK(frac < 0.53);
    }

    SUBCASE("n below 8 is rejected") {
        Rng rng(1);
        CHECK_THROWS(gen_division_inputs(rng, 4));
    }

    SUBCASE("(255, 1) is the only pair with quotient 255") {
        // exhaustive scan of all 65536 pairs backs the quot_max category
        int hits = 0;
        for (int x = 0; x < 256; ++x)
            for (int y = 0; y < 256; ++y)
                if (protected_div(static_cast<byte>(x), static_cast<byte>(y)) == 255) {
                    ++hits;
                    CHECK(x == 255);
                    CHECK(y == 1);
                }
        CHECK(hits == 1);
    }
}

TEST_CASE("value_entropy") {
    std::vector<std::uint32_t> uniform(256, 4);
    CHECK(value_entropy(uniform) == doctest::Approx(8.0).epsilon(1e-12));

    std::vector<std::uint32_t> single(256, 0);
    single[17] = 64;
    CHECK(value_entropy(single) == doctest::Approx(0.0));

    std::vector<std::uint32_t> two(256, 0);
    two[3] = 32;
    two[200] = 32;
    CHECK(value_entropy(two) == doctest::Approx(1.0));

    std::vector<std::uint32_t> empty(256, 0);
    CHECK_THROWS(value_entropy(empty));
}

TEST_CASE("trace_distributions") {
    DivisionTable table = DivisionTable::build();

    SUBCASE("constant and distinct extremes") {
        Program program;
        program.input_reg_x = 0;
        program.input_reg_y = 1;
        program.code.push_back(parse_instruction("R2=R0/R1"));
        std::vector<std::pair<byte, byte>> cases;
        for (int c = 0; c < 64; ++c)
            cases.emplace_back(static_cast<byte>(c), 1); // quotient = c, all distinct
        DistributionReport report = trace_distributions(program, cases, table);
        REQUIRE(report.steps.size() == 3); // x, y, instr0
        CHECK(report.steps[0].entropy == doctest::Approx(6.0)); // 64 distinct
        CHECK(report.steps[1].entropy == doctest::Approx(0.0)); // constant divisor
        CHECK(report.steps[2].entropy == doctest::Approx(6.0));
        for (const StepDistribution& step : report.steps) {
            std::uint64_t total = 0;
            for (std::uint32_t c : step.histogram)
                total += c;
            REQUIRE(total == 64);
        }
    }

    SUBCASE("entropy stays within 0..6 bits for 64-sample steps") {
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            TestSuite suite = gen_suite(seed);
            for (const SuiteProgram& sp : suite.programs) {
                DistributionReport report = trace_distributions(sp.program, sp.cases, table);
                for (const StepDistribution& step : report.steps) {
                    REQUIRE(step.entropy >= 0.0);
                    REQUIRE(step.entropy <= 6.0 + 1e-9);
                }
            }
        }
    }

    SUBCASE("self-subtraction step has zero entropy") {
        Program program;
        program.input_reg_x = 2;
        program.input_reg_y = 5;
        program.code.push_back(parse_instruction("R4=R2/R5"));
        program.code.push_back(parse_instruction("R5=R5-101"));
        program.code.push_back(parse_instruction("R5=R4-R4"));
        program.code.push_back(parse_instruction("R1=R4/R4"));
        Rng rng(8);
        std::vector<std::pair<byte, byte>> cases;
        for (int c = 0; c < 64; ++c)
            cases.emplace_back(static_cast<byte>(rng.below(256)),
                               static_cast<byte>(rng.below(256)));
        DistributionReport report = trace_distributions(program, cases, table);
        CHECK(report.steps[4].label == "instr2");
        CHECK(report.steps[4].entropy == doctest::Approx(0.0));
    }
}

TEST_CASE("suite file round-trip and fixture integrity") {
    SUBCASE("generated suite round-trips") {
        TestSuite suite = gen_suite(99);
        std::string text = suite_to_string(suite);
        std::istringstream in(text);
        TestSuite parsed = parse_suite(in);
        REQUIRE(parsed.programs.size() == suite.programs.size());
        for (std::size_t p = 0; p < suite.programs.size(); ++p) {
            REQUIRE(parsed.programs[p].program == suite.programs[p].program);
            REQUIRE(parsed.programs[p].cases == suite.programs[p].cases);
            REQUIRE(parsed.programs[p].expected_div == suite.programs[p].expected_div);
        }
        CHECK(parsed.seed == suite.seed);
    }

    SUBCASE("same seed, same bytes") {
        CHECK(suite_to_string(gen_suite(7)) == suite_to_string(gen_suite(7)));
        CHECK(suite_to_string(gen_suite(7)) != suite_to_string(gen_suite(8)));
    }

    SUBCASE("shipped fixture loads and matches the division rule") {
        TestSuite suite = load_suite(fixture_path("fig_suite.txt"));
        REQUIRE(suite.programs.size() == 4);
        std::size_t total = 0;
        for (const SuiteProgram& sp : suite.programs) {
            REQUIRE(sp.program.code.size() == 4);
            REQUIRE(sp.program.code[0].op == Opcode::div);
            REQUIRE(sp.cases.size() == 64);
            total += sp.cases.size();
            for (std::size_t c = 0; c < sp.cases.size(); ++c)
                REQUIRE(protected_div(sp.cases[c].first, sp.cases[c].second) ==
                        sp.expected_div[c]);
        }
        CHECK(total == 256);
        // spot-check the known program shapes
        CHECK(format_instruction(suite.programs[0].program.code[0]) == "R5=R0/R4");
        CHECK(format_instruction(suite.programs[1].program.code[2]) == "R5=R4-R4");
        CHECK(format_instruction(suite.programs[3].program.code[1]) == "R6=R3*R3");

        // the oracle's instruction-0 result equals the fixture's div column
        DivisionTable table = DivisionTable::build();
        for (const SuiteProgram& sp : suite.programs)
            for (std::size_t c = 0; c < sp.cases.size(); ++c) {
                auto states = interpret_scalar_steps(sp.program, sp.cases[c].first,
                                                     sp.cases[c].second, table);
                REQUIRE(states[1].regs[sp.program.code[0].dst] == sp.expected_div[c]);
            }
    }

    SUBCASE("corrupt div column is rejected") {
        TestSuite suite = gen_suite(5);
        std::string text = suite_to_string(suite);
        // find the first data row and break its third field
        std::size_t at = text.find("data 64\n");
        REQUIRE(at != std::string::npos);
        std::size_t row = at + 8;
        std::size_t end = text.find('\n', row);
        text.replace(row, end - row, "10 10 9");
        std::istringstream in(text);
        CHECK_THROWS(parse_suite(in));
    }
}

TEST_CASE("csv emission") {
    DivisionTable table = DivisionTable::build();
    TestSuite suite = gen_suite(3);
    std::vector<DistributionReport> reports;
    for (const SuiteProgram& sp : suite.programs)
        reports.push_back(trace_distributions(sp.program, sp.cases, table));

    std::ostringstream hist;
    write_histogram_csv(hist, reports);
    CHECK(hist.str().rfind("program,step,bin,count\n", 0) == 0);

    std::ostringstream entropy;
    write_entropy_csv(entropy, reports);
    std::string text = entropy.str();
    CHECK(text.rfind("program,step,entropy\n", 0) == 0);
    // 4 programs x (x, y, 4 instruction steps) + header
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 * 6);
}
