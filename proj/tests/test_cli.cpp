#include "doctest.h"

#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "helpers.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    std::string cmd = sibling_binary("giw") + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
        result.output.append(buf, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string tmp_dir() {
    static int counter = 0;
    std::string dir = "/tmp/giw_cli_" + std::to_string(getpid()) + "_" + std::to_string(counter++);
    mkdir(dir.c_str(), 0755);
    return dir;
}

} // namespace

TEST_CASE("gen-suite determinism and shape") {
    std::string dir = tmp_dir();
    CliResult a = run_cli("gen-suite --seed 7 --out " + dir + "/a.txt");
    CliResult b = run_cli("gen-suite --seed 7 --out " + dir + "/b.txt");
    CliResult c = run_cli("gen-suite --seed 8 --out " + dir + "/c.txt");
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(slurp(dir + "/a.txt") == slurp(dir + "/b.txt"));
    CHECK(slurp(dir + "/a.txt") != slurp(dir + "/c.txt"));

    // 4 programs x 64 cases = 256 data rows
    std::istringstream in(slurp(dir + "/a.txt"));
    std::string line;
    int data_rows = 0;
    while (std::getline(in, line))
        data_rows += line.find("data 64") == std::string::npos &&
                             std::count(line.begin(), line.end(), ' ') == 2 &&
                             !line.empty() && std::isdigit(line[0])
                         ? 1
                         : 0;
    CHECK(data_rows >= 256);
}

TEST_CASE("interpret compares scalar and batch") {
    CliResult r = run_cli("interpret --suite " + fixture_path("fig_suite.txt") +
                          " --impl batch --compare");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("scalar and batch agree") != std::string::npos);

    CliResult wide = run_cli("interpret --suite " + fixture_path("fig_suite.txt") +
                             " --width 16 --impl batch --compare");
    CHECK(wide.exit_code == 0);

    std::string dir = tmp_dir();
    CliResult traced = run_cli("interpret --suite " + fixture_path("fig_suite.txt") +
                               " --trace " + dir + "/t");
    CHECK(traced.exit_code == 0);
    CHECK(slurp(dir + "/t_entropy.csv").rfind("program,step,entropy\n", 0) == 0);
    std::string hist = slurp(dir + "/t_hist.csv");
    CHECK(hist.rfind("program,step,bin,count\n", 0) == 0);

    // program 0's instr0 rows reproduce the fixture's division column
    std::map<int, int> expected;
    {
        std::istringstream fixture(slurp(fixture_path("fig_suite.txt")));
        std::string line;
        int rows = 0;
        bool in_data = false;
        while (std::getline(fixture, line) && rows < 64) {
            if (line.rfind("data 64", 0) == 0) {
                in_data = true;
                continue;
            }
            if (!in_data)
                continue;
            std::istringstream row(line);
            int x, y, div;
            if (row >> x >> y >> div) {
                ++expected[div];
                ++rows;
            }
        }
        REQUIRE(rows == 64);
    }
    std::map<int, int> traced_hist;
    {
        std::istringstream in(hist);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string program, step, bin, count;
            std::getline(row, program, ',');
            std::getline(row, step, ',');
            std::getline(row, bin, ',');
            std::getline(row, count, ',');
            if (program == "0" && step == "instr0")
                traced_hist[std::stoi(bin)] = std::stoi(count);
        }
    }
    CHECK(traced_hist == expected);
}

TEST_CASE("bench reports both throughput figures") {
    CliResult r = run_cli("bench --suite " + fixture_path("fig_suite.txt") +
                          " --reps 5 --width 8");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("provider=model") != std::string::npos);
    CHECK(r.output.find("wall_gp_per_s") != std::string::npos);
    CHECK(r.output.find("counter_gp_per_s") != std::string::npos);
}

TEST_CASE("search, verify, apply-patch, report") {
    std::string dir = tmp_dir();
    std::string scenario = fixture_path("benchmark.scenario");

    // tiny budget: 3 warmup evaluations only, so the best patch stays empty
    CliResult warmup_only = run_cli("search --scenario " + scenario + " --seed 4 --budget 3 --out " + dir + "/w");
    CHECK(warmup_only.exit_code == 0);
    CHECK(warmup_only.output.find("best patch: (empty)") != std::string::npos);

    CliResult searched = run_cli("search --scenario " + scenario + " --seed 4 --budget 203 --out " + dir + "/s");
    CHECK(searched.exit_code == 0);
    for (const char* f : {"best_patch.txt", "steps.csv", "outcomes.csv", "best_fitness.csv",
                          "lengths.csv", "status.csv", "provenance.csv"}) {
        struct stat st;
        REQUIRE(stat((dir + "/s/" + f).c_str(), &st) == 0);
    }

    // identical invocation gives identical primary outputs
    CliResult again = run_cli("search --scenario " + scenario + " --seed 4 --budget 203 --out " + dir + "/s2");
    CHECK(slurp(dir + "/s/steps.csv") == slurp(dir + "/s2/steps.csv"));
    CHECK(slurp(dir + "/s/best_patch.txt") == slurp(dir + "/s2/best_patch.txt"));

    // the empty patch verifies with delta 0
    {
        std::ofstream empty(dir + "/empty.patch");
        empty << "\n";
    }
    CliResult verify_empty = run_cli("verify --patch " + dir + "/empty.patch" + " --scenario " + scenario);
    CHECK(verify_empty.exit_code == 0);
    CHECK(verify_empty.output.find("delta 0") != std::string::npos);

    // the shipped improvement verifies with a negative delta
    CliResult verify_best =
        run_cli("verify --patch " + fixture_path("best_patch.txt") + " --scenario " + scenario);
    CHECK(verify_best.exit_code == 0);
    CHECK(verify_best.output.find("delta -") != std::string::npos);

    // a breaking patch fails verification with exit 1
    {
        std::ofstream bad(dir + "/bad.patch");
        bad << "StmtDeletion(('interp.toy', 'stmt', 16))\n";
    }
    CliResult verify_bad = run_cli("verify --patch " + dir + "/bad.patch" + " --scenario " + scenario);
    CHECK(verify_bad.exit_code == 1);

    // apply-patch renders the patched source
    CliResult applied = run_cli("apply-patch --patch " + fixture_path("best_patch.txt") +
                                " --scenario " + scenario + " --out " + dir + "/a");
    CHECK(applied.exit_code == 0);
    std::string rendered = slurp(dir + "/a/interp.toy");
    CHECK(rendered.find("hx = hx & 0;") != std::string::npos);
    CHECK(rendered.find("hy = hy & 0;") != std::string::npos);
    CHECK(rendered.find("op >= 3") != std::string::npos);

    // report rebuilds the bundle from the steps log
    CliResult reported = run_cli("report --log " + dir + "/s/steps.csv --out " + dir + "/r");
    CHECK(reported.exit_code == 0);
    CHECK(slurp(dir + "/r/outcomes.csv") == slurp(dir + "/s/outcomes.csv"));
    CHECK(slurp(dir + "/r/lengths.csv") == slurp(dir + "/s/lengths.csv"));
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("definitely-not-a-command").exit_code == 2);
    CHECK(run_cli("interpret").exit_code == 2); // missing --suite
    CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("environment errors exit 3") {
    CliResult r = run_cli("verify --patch /nonexistent.patch --scenario " +
                          fixture_path("benchmark.scenario"));
    CHECK(r.exit_code == 3);
}
