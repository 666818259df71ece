#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ranklab/backend.hpp"
#include "ranklab/corpus.hpp"
#include "ranklab/defense.hpp"
#include "ranklab/embedding_opt.hpp"
#include "ranklab/engine.hpp"
#include "ranklab/metrics.hpp"
#include "ranklab/query_loop.hpp"

namespace ranklab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorpusSource {
    enum class Kind { File, Synth };
    Kind kind = Kind::Synth;
    std::string path;
    std::uint64_t seed = 7;
    std::size_t n_sets = 20;
    std::size_t n_items = 10;
};

struct DefenseOptions {
    bool enabled = false;
    std::set<DefenseKind> which = {DefenseKind::Perplexity, DefenseKind::Pattern,
                                   DefenseKind::Length};
    double ppl_threshold = 50.0;
    std::size_t max_words = 4000;
    std::size_t ngram_order = 2;
    double smoothing = 0.1;
};

struct TheoryGrid {
    std::vector<double> lambdas = {0.3};
    std::vector<std::size_t> k0s = {5, 10};
    std::vector<double> p_targets = {0.7, 0.8};
    std::vector<double> deltas = {0.0, 0.05, 0.1};
};

struct ExperimentConfig {
    CorpusSource corpus;
    EngineParams engine;
    std::vector<std::string> strategies = {"baseline", "string", "reasoning",
                                           "review"};
    double tau = 0.7;
    std::size_t max_rounds = 10;
    ShadowConfig shadow;
    BackendConfig backend;
    DefenseOptions defense;
    TheoryGrid theory;
    std::size_t trials = 2000;
    std::uint64_t master_seed = 1;
    std::string out_dir = "out";
    std::size_t workers = 2;
    bool dump_shadow_traces = false;  // per-set iteration/loss/probability CSVs
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const njson& j);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::vector<std::string> strategies;
    std::optional<std::string> backend_kind;
    std::optional<std::size_t> trials;
    std::optional<bool> defense;
};

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides);

struct RunResult {
    std::vector<SummaryRow> summary;
    std::size_t trial_rows = 0;
    std::string summary_csv_path;
    std::string summary_json_path;
    std::string trials_path;
    std::string defense_report_path;          // set when defenses ran
    std::vector<std::string> trace_paths;     // set when traces were dumped
    double mean_string_fidelity = 0.0;        // reconstruction fidelity average
};

// Full pipeline: corpus -> per-strategy optimization -> sampled + exact
// evaluation -> summary.csv / summary.json / trials.jsonl under out_dir.
RunResult run(const ExperimentConfig& cfg);

struct InsertionOutcome {
    std::size_t set_index = 0;
    std::size_t assignment_index = 0;   // which of the 3! orders
    std::string strategy;
    std::size_t position = 0;           // 0-based retrieval slot of the draft
    std::vector<double> rank_probability;  // P(rank 1), P(rank 2), P(rank 3)
};

struct InsertionStudyResult {
    std::vector<InsertionOutcome> outcomes;
    bool monotone = true;  // earlier slot never lowers a draft's top-1 chance
    std::string json_path;
    std::string csv_path;
};

// All 3! assignments of the three strategy drafts onto the top-3 retrieval
// slots, scored by the exact engine oracle.
InsertionStudyResult run_insertion_study(const ExperimentConfig& cfg);

struct TheoryCell {
    double lambda = 0.0;
    std::size_t k0 = 0;
    double p_target = 0.0;
    double delta = 0.0;
    ConvergenceReport report;
    bool passed = false;
};

struct TheoryReport {
    std::vector<TheoryCell> cells;
    bool all_passed = true;
    std::string json_path;
};

TheoryReport run_theory_suite(const ExperimentConfig& cfg);

// Loads (or synthesizes) a corpus and writes it back in normalized JSONL form.
std::size_t ingest(const ExperimentConfig& cfg, const std::string& out_path);

// Line-by-line validation report for a corpus file; true when every line and
// every record is acceptable.
bool validate_corpus_file(const std::string& path, std::ostream& out);

// Re-aggregates a trials.jsonl file into summary.csv / summary.json.
RunResult report_from_trials(const std::string& trials_path,
                             const std::string& out_dir);

// Identifier of the simulated engine used in result tables.
std::string engine_label(const EngineParams& p);

std::vector<CandidateSet> materialize_corpus(const CorpusSource& source);

// Zero-overlap instance used by the convergence checks: the target sits at
// retrieval position k0 of k0 items and no item text shares a token with the
// query.
CandidateSet theory_instance(std::size_t k0);

}  // namespace ranklab
