#pragma once

// Test-suite generation: the constrained random programs, the divisor/quotient
// controlled input pairs, plus output-distribution and entropy diagnostics.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "giw/lgp.hpp"
#include "giw/rng.hpp"

namespace giw {

// Why each input pair was generated. Half the pairs force division by zero;
// half of the rest force edge-case quotients (0, 1, 255 or a random target);
// the remainder target quotients uniform in 2..127.
enum class DivCategory : std::uint8_t {
    div_zero,
    quot_zero,
    quot_one,
    quot_max,
    quot_random,
    quot_uniform,
};

struct DivInput {
    byte x = 0;
    byte y = 0;
    byte target = 0; // quotient the pair was constructed to produce
    DivCategory category = DivCategory::div_zero;
};

struct SuiteProgram {
    Program program;
    std::vector<std::pair<byte, byte>> cases;
    std::vector<byte> expected_div; // instruction-0 result per case
};

struct TestSuite {
    std::uint64_t seed = 0;
    std::vector<SuiteProgram> programs;
};

struct GenConfig {
    int program_count = 4;
    int program_length = 4;
    int cases_per_program = 64;
};

// Constrained random programs: instruction 0 divides the two input registers;
// later instructions read only registers with known values; second operands
// are registers 20% of the time, else constants 0..127; the last instruction
// writes the program's output register. With three or more programs the third
// one guarantees all four opcodes appear somewhere in the set.
std::vector<Program> gen_programs(Rng& rng, const GenConfig& config = {});

// n input pairs with the controlled divisor/quotient distribution. Every pair
// satisfies protected_div(x, y) == target for its category.
std::vector<DivInput> gen_division_inputs(Rng& rng, int n = 64);

TestSuite gen_suite(std::uint64_t seed, const GenConfig& config = {});

// Shannon entropy in bits of a histogram of counts. Throws on an all-zero
// histogram.
double value_entropy(std::span<const std::uint32_t> histogram);

struct StepDistribution {
    std::string label; // "x", "y", "instr0", "instr1", ...
    std::array<std::uint32_t, 256> histogram{};
    double entropy = 0.0;
};

struct DistributionReport {
    std::vector<StepDistribution> steps;
};

// Histograms of the values written at each instruction step plus the two
// input columns, with per-step entropy.
DistributionReport trace_distributions(const Program& program,
                                       std::span<const std::pair<byte, byte>> cases,
                                       const DivisionTable& table);

// CSV emission: histogram rows are (program,step,bin,count), entropy rows are
// (program,step,entropy).
void write_histogram_csv(std::ostream& out, std::span<const DistributionReport> reports);
void write_entropy_csv(std::ostream& out, std::span<const DistributionReport> reports);

// Plain-text suite file: program lines in the R5=R0/R4 syntax followed by
// per-program blocks of "x y div" triples. The div column is the
// instruction-0 result and is re-checked against protected_div on load.
void write_suite(std::ostream& out, const TestSuite& suite);
std::string suite_to_string(const TestSuite& suite);
TestSuite parse_suite(std::istream& in);      // throws std::runtime_error
TestSuite load_suite(const std::string& path); // throws std::runtime_error
void save_suite(const std::string& path, const TestSuite& suite);

} // namespace giw
