#include "giw/testgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace giw {

namespace {

// Registers whose values a later instruction may read: anything written so
// far plus the two program inputs.
std::vector<byte> known_registers(const Program& program, std::size_t upto) {
    std::array<bool, register_count> known{};
    known[program.input_reg_x] = true;
    known[program.input_reg_y] = true;
    for (std::size_t i = 0; i < upto; ++i)
        known[program.code[i].dst] = true;
    std::vector<byte> regs;
    for (int r = 0; r < register_count; ++r)
        if (known[r])
            regs.push_back(static_cast<byte>(r));
    return regs;
}

Instruction random_instruction(Rng& rng, const Program& program, std::size_t index,
                               Opcode op) {
    Instruction instr;
    instr.op = op;
    instr.dst = static_cast<byte>(rng.below(register_count));
    std::vector<byte> known = known_registers(program, index);
    instr.src1 = known[rng.below(static_cast<std::uint32_t>(known.size()))];
    if (rng.chance(1, 5)) { // 20% registers with known values
        instr.src2 = Operand{false, known[rng.below(static_cast<std::uint32_t>(known.size()))]};
    } else {
        instr.src2 = Operand{true, static_cast<byte>(rng.below(128))};
    }
    return instr;
}

} // namespace

std::vector<Program> gen_programs(Rng& rng, const GenConfig& config) {
    if (config.program_count < 1 || config.program_length < 2)
        throw std::invalid_argument("gen_programs: need >=1 programs of length >=2");

    std::vector<Program> programs;
    std::array<bool, opcode_count> seen{};

    for (int p = 0; p < config.program_count; ++p) {
        Program program;
        program.input_reg_x = static_cast<byte>(rng.below(register_count));
        program.input_reg_y = static_cast<byte>(rng.below(register_count));
        program.output_reg = static_cast<byte>(rng.below(register_count));

        // instruction 0: protected division of the two inputs
        Instruction first;
        first.op = Opcode::div;
        first.dst = static_cast<byte>(rng.below(register_count));
        first.src1 = program.input_reg_x;
        first.src2 = Operand{false, program.input_reg_y};
        program.code.push_back(first);
        seen[static_cast<int>(Opcode::div)] = true;

        // the third program carries whichever opcodes are still missing
        const bool enforce = config.program_count >= 3
                                 ? p == 2
                                 : p == config.program_count - 1;
        std::vector<Opcode> forced;
        if (enforce)
            for (int o = 0; o < opcode_count; ++o)
                if (!seen[o])
                    forced.push_back(static_cast<Opcode>(o));
        const int slots = config.program_length - 1;
        if (static_cast<int>(forced.size()) > slots)
            throw std::invalid_argument("gen_programs: programs too short to cover opcodes");
        // scatter the forced opcodes over distinct random slots
        std::vector<int> slot_of(forced.size(), -1);
        for (std::size_t f = 0; f < forced.size(); ++f) {
            int s;
            bool taken;
            do {
                s = static_cast<int>(rng.below(static_cast<std::uint32_t>(slots)));
                taken = false;
                for (std::size_t g = 0; g < f; ++g)
                    taken = taken || slot_of[g] == s;
            } while (taken);
            slot_of[f] = s;
        }

        for (int s = 0; s < slots; ++s) {
            Opcode op = static_cast<Opcode>(rng.below(opcode_count));
            for (std::size_t f = 0; f < forced.size(); ++f)
                if (slot_of[f] == s)
                    op = forced[f];
            Instruction instr = random_instruction(rng, program, program.code.size(), op);
            if (s == slots - 1)
                instr.dst = program.output_reg;
            program.code.push_back(instr);
            seen[static_cast<int>(instr.op)] = true;
        }
        programs.push_back(std::move(program));
    }
    return programs;
}

namespace {

// Rejection sampling for a pair with protected_div(x, y) == target (target
// >= 1): draw y until the quotient is reachable, then x inside the quotient
// window.
DivInput pair_for_quotient(Rng& rng, byte target, DivCategory category) {
    for (int attempt = 0; attempt < 4096; ++attempt) {
        std::uint32_t y = rng.range(1, 255);
        if (y * target > 255)
            continue;
        std::uint32_t lo = y * target;
        std::uint32_t hi = std::min<std::uint32_t>(255, lo + y - 1);
        std::uint32_t x = rng.range(lo, hi);
        DivInput input{static_cast<byte>(x), static_cast<byte>(y), target, category};
        if (protected_div(input.x, input.y) != target)
            throw std::logic_error("gen_division_inputs: constructed pair misses target");
        return input;
    }
    throw std::runtime_error("gen_division_inputs: target quotient unreachable");
}

} // namespace

std::vector<DivInput> gen_division_inputs(Rng& rng, int n) {
    if (n < 8)
        throw std::invalid_argument("gen_division_inputs: need n >= 8");
    std::vector<DivInput> inputs;
    inputs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uint32_t bucket = rng.below(16);
        if (bucket < 8) {
            inputs.push_back({static_cast<byte>(rng.below(256)), 0, 0, DivCategory::div_zero});
        } else if (bucket == 8) {
            // quotient 0 with a nonzero divisor: x < y
            std::uint32_t y = rng.range(1, 255);
            std::uint32_t x = rng.below(y);
            inputs.push_back({static_cast<byte>(x), static_cast<byte>(y), 0,
                              DivCategory::quot_zero});
        } else if (bucket == 9) {
            inputs.push_back(pair_for_quotient(rng, 1, DivCategory::quot_one));
        } else if (bucket == 10) {
            // 255 is only reachable as 255/1
            inputs.push_back(pair_for_quotient(rng, 255, DivCategory::quot_max));
        } else if (bucket == 11) {
            byte target = static_cast<byte>(rng.range(1, 255));
            inputs.push_back(pair_for_quotient(rng, target, DivCategory::quot_random));
        } else {
            byte target = static_cast<byte>(rng.range(2, 127));
            inputs.push_back(pair_for_quotient(rng, target, DivCategory::quot_uniform));
        }
    }
    return inputs;
}

TestSuite gen_suite(std::uint64_t seed, const GenConfig& config) {
    Rng rng(seed);
    TestSuite suite;
    suite.seed = seed;
    std::vector<Program> programs = gen_programs(rng, config);
    for (Program& program : programs) {
        SuiteProgram sp;
        sp.program = std::move(program);
        for (const DivInput& input : gen_division_inputs(rng, config.cases_per_program)) {
            sp.cases.emplace_back(input.x, input.y);
            sp.expected_div.push_back(protected_div(input.x, input.y));
        }
        suite.programs.push_back(std::move(sp));
    }
    return suite;
}

double value_entropy(std::span<const std::uint32_t> histogram) {
    std::uint64_t total = 0;
    for (std::uint32_t c : histogram)
        total += c;
    if (total == 0)
        throw std::invalid_argument("value_entropy: empty histogram");
    double h = 0.0;
    for (std::uint32_t c : histogram) {
        if (c == 0)
            continue;
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

DistributionReport trace_distributions(const Program& program,
                                       std::span<const std::pair<byte, byte>> cases,
                                       const DivisionTable& table) {
    DistributionReport report;
    StepDistribution xs{"x", {}, 0.0};
    StepDistribution ys{"y", {}, 0.0};
    for (auto [x, y] : cases) {
        ++xs.histogram[x];
        ++ys.histogram[y];
    }

    std::vector<StepDistribution> instr_steps(program.code.size());
    for (std::size_t k = 0; k < program.code.size(); ++k)
        instr_steps[k].label = "instr" + std::to_string(k);

    for (auto [x, y] : cases) {
        std::vector<RegisterState> states = interpret_scalar_steps(program, x, y, table);
        for (std::size_t k = 0; k < program.code.size(); ++k) {
            byte value = states[k + 1].regs[program.code[k].dst];
            ++instr_steps[k].histogram[value];
        }
    }

    report.steps.push_back(std::move(xs));
    report.steps.push_back(std::move(ys));
    for (auto& step : instr_steps)
        report.steps.push_back(std::move(step));
    for (auto& step : report.steps)
        step.entropy = value_entropy(step.histogram);
    return report;
}

void write_histogram_csv(std::ostream& out, std::span<const DistributionReport> reports) {
    out << "program,step,bin,count\n";
    for (std::size_t p = 0; p < reports.size(); ++p)
        for (const StepDistribution& step : reports[p].steps)
            for (int bin = 0; bin < 256; ++bin)
                if (step.histogram[bin])
                    out << p << ',' << step.label << ',' << bin << ','
                        << step.histogram[bin] << '\n';
}

void write_entropy_csv(std::ostream& out, std::span<const DistributionReport> reports) {
    out << "program,step,entropy\n";
    char buf[32];
    for (std::size_t p = 0; p < reports.size(); ++p)
        for (const StepDistribution& step : reports[p].steps) {
            std::snprintf(buf, sizeof buf, "%.6f", step.entropy);
            out << p << ',' << step.label << ',' << buf << '\n';
        }
}

void write_suite(std::ostream& out, const TestSuite& suite) {
    out << "# giw test suite\n";
    out << "seed " << suite.seed << "\n";
    out << "programs " << suite.programs.size() << "\n";
    for (std::size_t p = 0; p < suite.programs.size(); ++p) {
        const SuiteProgram& sp = suite.programs[p];
        out << "program " << p << " len " << sp.program.code.size() << " in R"
            << static_cast<int>(sp.program.input_reg_x) << " R"
            << static_cast<int>(sp.program.input_reg_y) << " out R"
            << static_cast<int>(sp.program.output_reg) << "\n";
        for (const Instruction& instr : sp.program.code)
            out << format_instruction(instr) << "\n";
        out << "data " << sp.cases.size() << "\n";
        for (std::size_t c = 0; c < sp.cases.size(); ++c)
            out << static_cast<int>(sp.cases[c].first) << ' '
                << static_cast<int>(sp.cases[c].second) << ' '
                << static_cast<int>(sp.expected_div[c]) << "\n";
    }
}

std::string suite_to_string(const TestSuite& suite) {
    std::ostringstream out;
    write_suite(out, suite);
    return out.str();
}

namespace {

std::string next_content_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::size_t i = line.find_first_not_of(" \t");
        if (i == std::string::npos || line[i] == '#')
            continue;
        return line.substr(i);
    }
    throw std::runtime_error("suite: unexpected end of file");
}

byte parse_reg_token(const std::string& token) {
    if (token.size() < 2 || token[0] != 'R')
        throw std::runtime_error("suite: bad register token " + token);
    int reg = std::stoi(token.substr(1));
    if (reg < 0 || reg >= register_count)
        throw std::runtime_error("suite: register out of range " + token);
    return static_cast<byte>(reg);
}

} // namespace

TestSuite parse_suite(std::istream& in) {
    TestSuite suite;
    {
        std::istringstream hdr(next_content_line(in));
        std::string key;
        hdr >> key >> suite.seed;
        if (key != "seed")
            throw std::runtime_error("suite: expected seed line");
    }
    std::size_t program_count = 0;
    {
        std::istringstream hdr(next_content_line(in));
        std::string key;
        hdr >> key >> program_count;
        if (key != "programs" || program_count == 0)
            throw std::runtime_error("suite: expected programs line");
    }
    for (std::size_t p = 0; p < program_count; ++p) {
        std::istringstream hdr(next_content_line(in));
        std::string kw_program, kw_len, kw_in, kw_out, rx, ry, rout;
        std::size_t index = 0, length = 0;
        hdr >> kw_program >> index >> kw_len >> length >> kw_in >> rx >> ry >> kw_out >> rout;
        if (kw_program != "program" || kw_len != "len" || kw_in != "in" || kw_out != "out" ||
            index != p || length == 0)
            throw std::runtime_error("suite: bad program header");
        SuiteProgram sp;
        sp.program.input_reg_x = parse_reg_token(rx);
        sp.program.input_reg_y = parse_reg_token(ry);
        sp.program.output_reg = parse_reg_token(rout);
        for (std::size_t i = 0; i < length; ++i)
            sp.program.code.push_back(parse_instruction(next_content_line(in)));

        std::size_t case_count = 0;
        {
            std::istringstream data_hdr(next_content_line(in));
            std::string key;
            data_hdr >> key >> case_count;
            if (key != "data" || case_count == 0)
                throw std::runtime_error("suite: expected data line");
        }
        for (std::size_t c = 0; c < case_count; ++c) {
            std::istringstream row(next_content_line(in));
            int x = -1, y = -1, div = -1;
            row >> x >> y >> div;
            if (x < 0 || x > 255 || y < 0 || y > 255 || div < 0 || div > 255)
                throw std::runtime_error("suite: bad data row");
            if (protected_div(static_cast<byte>(x), static_cast<byte>(y)) != div)
                throw std::runtime_error("suite: div column disagrees with protected_div");
            sp.cases.emplace_back(static_cast<byte>(x), static_cast<byte>(y));
            sp.expected_div.push_back(static_cast<byte>(div));
        }
        suite.programs.push_back(std::move(sp));
    }
    return suite;
}

TestSuite load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open suite file: " + path);
    return parse_suite(in);
}

void save_suite(const std::string& path, const TestSuite& suite) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write suite file: " + path);
    write_suite(out, suite);
}

} // namespace giw
