#include "giw/search.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace giw {

namespace {

enum class Move : std::uint8_t { append, erase, replace };

struct Proposal {
    Patch patch;
    Move move = Move::append;
    std::string touched_source; // payload file of the new edit, or target file
    std::string removed;        // serialization of a removed edit, for the tabu
};

std::string edit_source(const Edit& edit) {
    return edit.payload ? edit.payload->file : edit.target.file;
}

Proposal propose(Rng& rng, const Patch& current, const TreeSet& trees,
                 const EditWeights& weights, const std::string& tabu) {
    Proposal prop;
    prop.patch = current;
    // deletes are proposed more often than appends: entangled edit lists
    // reject most single removals, and without this skew patches balloon
    Move move = Move::append;
    if (!current.edits.empty()) {
        std::uint32_t r = rng.below(16);
        move = r < 4 ? Move::append : r < 13 ? Move::erase : Move::replace;
    }
    prop.move = move;

    auto draw_new_edit = [&]() {
        for (int attempt = 0; attempt < 64; ++attempt) {
            Edit edit = random_edit(rng, trees, weights);
            if (tabu.empty() || edit_to_string(edit) != tabu)
                return edit;
        }
        return random_edit(rng, trees, weights); // tabu is best effort
    };

    switch (move) {
    case Move::append: {
        Edit edit = draw_new_edit();
        prop.touched_source = edit_source(edit);
        prop.patch.edits.push_back(std::move(edit));
        break;
    }
    case Move::erase: {
        std::size_t victim = rng.below(static_cast<std::uint32_t>(current.edits.size()));
        prop.removed = edit_to_string(current.edits[victim]);
        prop.touched_source = current.edits[victim].target.file;
        prop.patch.edits.erase(prop.patch.edits.begin() + static_cast<long>(victim));
        break;
    }
    case Move::replace: {
        std::size_t victim = rng.below(static_cast<std::uint32_t>(current.edits.size()));
        prop.removed = edit_to_string(current.edits[victim]);
        Edit edit = draw_new_edit();
        prop.touched_source = edit_source(edit);
        prop.patch.edits[victim] = std::move(edit);
        break;
    }
    }
    return prop;
}

SearchStep log_step(std::uint64_t step, const Patch& patch, const EvalOutcome& eval,
                    std::uint64_t best, bool accepted, std::string source) {
    SearchStep s;
    s.step = step;
    s.patch_len = patch.edits.size();
    s.cache_hit = eval.cache_hit;
    s.outcome = eval.outcome;
    s.status = eval.record.status;
    s.fitness = eval.fitness();
    s.best = best;
    s.accepted = accepted;
    s.passed = eval.passed();
    s.source_file = std::move(source);
    return s;
}

} // namespace

SearchResult local_search(Pipeline& pipeline, const SearchOptions& options, Rng& rng) {
    const ScenarioConfig& config = pipeline.config();
    SearchResult result;

    Patch empty;
    empty.params = config.params;

    // warmup: repeated fresh evaluations of the empty patch; the consensus
    // (median) fixes the baseline fitness
    std::vector<std::uint64_t> warmup_fitness;
    for (int w = 0; w < options.warmup; ++w) {
        EvalOutcome eval = pipeline.evaluate_fresh(empty);
        if (eval.outcome != Outcome::all_tests_passed)
            throw std::runtime_error(std::string("warmup: baseline failed: ") +
                                     outcome_name(eval.outcome) + " " + eval.record.detail);
        warmup_fitness.push_back(eval.fitness());
        result.log.push_back(log_step(result.log.size() + 1, empty, eval,
                                      warmup_fitness.front(), false,
                                      config.targets.front()));
    }
    std::sort(warmup_fitness.begin(), warmup_fitness.end());
    const std::uint64_t baseline = warmup_fitness[warmup_fitness.size() / 2];
    result.baseline_fitness = baseline;
    for (SearchStep& s : result.log)
        s.best = baseline;

    Patch current = empty;
    std::uint64_t current_fitness = baseline;
    result.best_patch = empty;
    result.best_fitness = baseline;
    std::string tabu; // serialization of the most recently removed edit

    const int jobs = std::max(1, options.jobs);
    std::uint64_t done = 0;
    while (done < options.budget) {
        // propose a round of neighbors (one when jobs == 1); evaluation may
        // run concurrently but acceptance scans them in proposal order
        const std::uint64_t round =
            std::min<std::uint64_t>(static_cast<std::uint64_t>(jobs), options.budget - done);
        std::vector<Proposal> proposals;
        std::vector<Patch> patches;
        for (std::uint64_t k = 0; k < round; ++k) {
            proposals.push_back(propose(rng, current, pipeline.trees(),
                                        config.edit_weights, tabu));
            patches.push_back(proposals.back().patch);
        }
        std::vector<EvalOutcome> evals = pipeline.evaluate_batch(patches, jobs);

        for (std::uint64_t k = 0; k < round; ++k) {
            const Proposal& prop = proposals[k];
            const EvalOutcome& eval = evals[k];
            ++done;

            // accept ties so the search can drift sideways; failures carry the
            // penalty and are never acceptable
            bool accepted = false;
            if (eval.fitness() <= current_fitness) {
                accepted = true;
                current = prop.patch;
                current_fitness = eval.fitness();
                if (!prop.removed.empty())
                    tabu = prop.removed;
                if (eval.fitness() < result.best_fitness) {
                    result.best_fitness = eval.fitness();
                    result.best_patch = prop.patch;
                }
            }
            result.log.push_back(log_step(static_cast<std::uint64_t>(result.log.size() + 1),
                                          prop.patch, eval, result.best_fitness, accepted,
                                          prop.touched_source));
            if (accepted && round > 1)
                break; // later proposals in the round were built on a stale current
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// report bundle
// ---------------------------------------------------------------------------

void write_steps_csv(std::ostream& out, const std::vector<SearchStep>& log) {
    out << "step,len,cache,outcome,status,fitness,best,accepted,passed,source\n";
    for (const SearchStep& s : log)
        out << s.step << ',' << s.patch_len << ',' << (s.cache_hit ? 1 : 0) << ','
            << outcome_name(s.outcome) << ',' << run_status_name(s.status) << ',' << s.fitness
            << ',' << s.best << ',' << (s.accepted ? 1 : 0) << ',' << (s.passed ? 1 : 0) << ','
            << s.source_file << '\n';
}

namespace {

Outcome outcome_from_name(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(Outcome::timeout); ++i)
        if (name == outcome_name(static_cast<Outcome>(i)))
            return static_cast<Outcome>(i);
    throw std::runtime_error("bad outcome name: " + name);
}

RunStatus status_from_name(const std::string& name) {
    static const RunStatus all[] = {
        RunStatus::ok,      RunStatus::wrong_output, RunStatus::padding_overwritten,
        RunStatus::registers_corrupted, RunStatus::sigsegv, RunStatus::sigfpe,
        RunStatus::sigabrt, RunStatus::timeout,      RunStatus::measurement_failure,
    };
    for (RunStatus status : all)
        if (name == run_status_name(status))
            return status;
    throw std::runtime_error("bad status name: " + name);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

} // namespace

std::vector<SearchStep> parse_steps_csv(std::istream& in) {
    std::vector<SearchStep> log;
    std::string line;
    if (!std::getline(in, line))
        return log;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 10)
            throw std::runtime_error("bad steps csv row: " + line);
        SearchStep s;
        s.step = std::stoull(f[0]);
        s.patch_len = std::stoull(f[1]);
        s.cache_hit = f[2] == "1";
        s.outcome = outcome_from_name(f[3]);
        s.status = status_from_name(f[4]);
        s.fitness = std::stoull(f[5]);
        s.best = std::stoull(f[6]);
        s.accepted = f[7] == "1";
        s.passed = f[8] == "1";
        s.source_file = f[9];
        log.push_back(std::move(s));
    }
    return log;
}

void write_outcomes_csv(std::ostream& out, const std::vector<SearchStep>& log) {
    std::map<std::string, std::uint64_t> counts;
    for (const SearchStep& s : log)
        ++counts[outcome_name(s.outcome)];
    out << "outcome,count\n";
    for (int i = 0; i <= static_cast<int>(Outcome::timeout); ++i) {
        const char* name = outcome_name(static_cast<Outcome>(i));
        out << name << ',' << counts[name] << '\n';
    }
}

void write_best_fitness_csv(std::ostream& out, const std::vector<SearchStep>& log) {
    out << "step,best\n";
    for (const SearchStep& s : log)
        out << s.step << ',' << s.best << '\n';
}

void write_lengths_csv(std::ostream& out, const std::vector<SearchStep>& log,
                       std::uint64_t window) {
    out << "window_start,window_end,mean_len_passed,mean_len_failed,fail_minus_pass\n";
    char buf[64];
    for (std::size_t begin = 0; begin < log.size(); begin += window) {
        std::size_t end = std::min(log.size(), begin + window);
        std::uint64_t pass_n = 0, fail_n = 0, pass_sum = 0, fail_sum = 0;
        for (std::size_t i = begin; i < end; ++i) {
            if (log[i].passed) {
                ++pass_n;
                pass_sum += log[i].patch_len;
            } else {
                ++fail_n;
                fail_sum += log[i].patch_len;
            }
        }
        double mean_pass = pass_n ? static_cast<double>(pass_sum) / pass_n : 0.0;
        double mean_fail = fail_n ? static_cast<double>(fail_sum) / fail_n : 0.0;
        std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f", mean_pass, mean_fail,
                      mean_fail - mean_pass);
        out << log[begin].step << ',' << log[end - 1].step << ',' << buf << '\n';
    }
}

void write_status_csv(std::ostream& out, const std::vector<SearchStep>& log) {
    std::map<std::string, std::uint64_t> counts;
    for (const SearchStep& s : log)
        if (s.outcome == Outcome::runtime_error || s.outcome == Outcome::all_tests_passed)
            ++counts[run_status_name(s.status)];
    out << "status,count\n";
    for (const auto& [name, count] : counts)
        out << name << ',' << count << '\n';
}

void write_provenance_csv(std::ostream& out, const std::vector<SearchStep>& log) {
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts; // file -> ok, err
    for (const SearchStep& s : log) {
        if (s.source_file.empty())
            continue;
        auto& [ok, err] = counts[s.source_file];
        if (s.passed)
            ++ok;
        else
            ++err;
    }
    out << "source,ok,err\n";
    for (const auto& [file, pair] : counts)
        out << file << ',' << pair.first << ',' << pair.second << '\n';
}

void write_report_bundle(const std::string& dir, const std::vector<SearchStep>& log) {
    mkdir(dir.c_str(), 0755);
    auto emit = [&](const std::string& name, auto writer) {
        std::ofstream out(dir + "/" + name);
        if (!out)
            throw std::runtime_error("cannot write report file: " + dir + "/" + name);
        writer(out);
    };
    emit("steps.csv", [&](std::ostream& o) { write_steps_csv(o, log); });
    emit("outcomes.csv", [&](std::ostream& o) { write_outcomes_csv(o, log); });
    emit("best_fitness.csv", [&](std::ostream& o) { write_best_fitness_csv(o, log); });
    emit("lengths.csv", [&](std::ostream& o) { write_lengths_csv(o, log); });
    emit("status.csv", [&](std::ostream& o) { write_status_csv(o, log); });
    emit("provenance.csv", [&](std::ostream& o) { write_provenance_csv(o, log); });
}

} // namespace giw
