#pragma once

// Local search over patches: warmup fixes the baseline fitness, each step
// proposes a one-move neighbor (append / delete / replace an edit), ties are
// accepted so the search can drift, a one-edit tabu blocks re-adding the edit
// just removed, and every step lands in the log the report bundle is built
// from.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "giw/pipeline.hpp"
#include "giw/rng.hpp"

namespace giw {

struct SearchStep {
    std::uint64_t step = 0; // warmup steps first, then search steps
    std::size_t patch_len = 0;
    bool cache_hit = false;
    Outcome outcome = Outcome::compile_error;
    RunStatus status = RunStatus::measurement_failure;
    std::uint64_t fitness = 0;
    std::uint64_t best = 0;
    bool accepted = false;
    bool passed = false;
    std::string source_file; // provenance of the touched edit
};

struct SearchResult {
    Patch best_patch;
    std::uint64_t best_fitness = 0;
    std::uint64_t baseline_fitness = 0;
    std::vector<SearchStep> log;
};

struct SearchOptions {
    std::uint64_t budget = 100000; // steps after warmup
    int warmup = 3;
    int jobs = 1; // >1 evaluates proposals in parallel rounds; acceptance stays sequential
};

// Deterministic given (pipeline config, options, rng seed). Throws if the
// warmup baseline fails its own tests.
SearchResult local_search(Pipeline& pipeline, const SearchOptions& options, Rng& rng);

// Report bundle, one CSV per table/figure shape: outcome-class counts,
// best-fitness-per-step series, windowed mean patch length split by pass/fail,
// runtime-status breakdown, and edit provenance per source file.
void write_steps_csv(std::ostream& out, const std::vector<SearchStep>& log);
std::vector<SearchStep> parse_steps_csv(std::istream& in);

void write_outcomes_csv(std::ostream& out, const std::vector<SearchStep>& log);
void write_best_fitness_csv(std::ostream& out, const std::vector<SearchStep>& log);
void write_lengths_csv(std::ostream& out, const std::vector<SearchStep>& log,
                       std::uint64_t window = 5000);
void write_status_csv(std::ostream& out, const std::vector<SearchStep>& log);
void write_provenance_csv(std::ostream& out, const std::vector<SearchStep>& log);

// Writes the full bundle (steps, outcomes, best_fitness, lengths, status,
// provenance) into the directory.
void write_report_bundle(const std::string& dir, const std::vector<SearchStep>& log);

} // namespace giw
