#include "ranklab/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "ranklab/text.hpp"

namespace fs = std::filesystem;

namespace ranklab {

namespace {

ScorerKind scorer_kind_from_name(const std::string& name) {
    if (name == "keyword-overlap") return ScorerKind::KeywordOverlap;
    if (name == "cosine-bag-of-words") return ScorerKind::CosineBagOfWords;
    if (name == "constant") return ScorerKind::Constant;
    throw ConfigError("unknown scorer kind: " + name);
}

std::string scorer_kind_name(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::KeywordOverlap: return "keyword-overlap";
        case ScorerKind::CosineBagOfWords: return "cosine-bag-of-words";
        case ScorerKind::Constant: return "constant";
    }
    return "unknown";
}

DefenseKind defense_kind_from_name(const std::string& name) {
    if (name == "perplexity") return DefenseKind::Perplexity;
    if (name == "pattern") return DefenseKind::Pattern;
    if (name == "length") return DefenseKind::Length;
    throw ConfigError("unknown defense filter: " + name);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << content;
}

}  // namespace

std::string engine_label(const EngineParams& p) {
    std::ostringstream s;
    s << "pl-bias(" << scorer_kind_name(p.scorer.kind) << " lambda=" << p.lambda
      << ")";
    return s.str();
}

std::vector<CandidateSet> materialize_corpus(const CorpusSource& source) {
    if (source.kind == CorpusSource::Kind::File) {
        if (source.path.empty()) throw ConfigError("corpus source has no path");
        return load_corpus(source.path);
    }
    return synth_corpus(source.seed, source.n_sets, source.n_items);
}

ExperimentConfig config_from_json(const njson& j) {
    ExperimentConfig cfg;
    if (j.contains("corpus")) {
        const auto& c = j.at("corpus");
        std::string source = c.value("source", "synth");
        if (source == "file") {
            cfg.corpus.kind = CorpusSource::Kind::File;
        } else if (source == "synth") {
            cfg.corpus.kind = CorpusSource::Kind::Synth;
        } else {
            throw ConfigError("corpus.source must be file or synth");
        }
        cfg.corpus.path = c.value("path", "");
        cfg.corpus.seed = c.value("seed", cfg.corpus.seed);
        cfg.corpus.n_sets = c.value("n_sets", cfg.corpus.n_sets);
        cfg.corpus.n_items = c.value("n_items", cfg.corpus.n_items);
    }
    if (j.contains("engine")) {
        const auto& e = j.at("engine");
        cfg.engine.lambda = e.value("lambda", cfg.engine.lambda);
        if (cfg.engine.lambda < 0.0) throw ConfigError("lambda must be >= 0");
        cfg.engine.scorer.kind =
            scorer_kind_from_name(e.value("scorer", "keyword-overlap"));
        cfg.engine.scorer.constant_value =
            e.value("constant_value", cfg.engine.scorer.constant_value);
        cfg.engine.seed = e.value("seed", cfg.engine.seed);
    }
    if (j.contains("strategies")) {
        cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
    }
    if (j.contains("loop")) {
        cfg.tau = j.at("loop").value("tau", cfg.tau);
        cfg.max_rounds = j.at("loop").value("max_rounds", cfg.max_rounds);
    }
    if (j.contains("shadow")) {
        const auto& s = j.at("shadow");
        if (s.contains("eta") && !s.at("eta").is_null()) {
            cfg.shadow.eta = s.at("eta").get<double>();
        }
        cfg.shadow.sigma = s.value("sigma", cfg.shadow.sigma);
        cfg.shadow.max_iters = s.value("max_iters", cfg.shadow.max_iters);
        cfg.shadow.token_budget = s.value("token_budget", cfg.shadow.token_budget);
        cfg.shadow.init = s.value("init", cfg.shadow.init);
        if (s.contains("stop_probability") && !s.at("stop_probability").is_null()) {
            cfg.shadow.stop_probability = s.at("stop_probability").get<double>();
        }
        cfg.dump_shadow_traces = s.value("dump_traces", cfg.dump_shadow_traces);
    }
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        cfg.backend.kind = b.value("backend", cfg.backend.kind);
        cfg.backend.base_url = b.value("base_url", cfg.backend.base_url);
        cfg.backend.model_name = b.value("model_name", cfg.backend.model_name);
        cfg.backend.credential_env =
            b.value("credential_env", cfg.backend.credential_env);
        cfg.backend.max_in_flight = b.value("max_in_flight", cfg.backend.max_in_flight);
        cfg.backend.timeout_seconds =
            b.value("timeout_seconds", cfg.backend.timeout_seconds);
        cfg.backend.retries = b.value("retries", cfg.backend.retries);
    }
    if (j.contains("defense")) {
        const auto& d = j.at("defense");
        cfg.defense.enabled = d.value("enabled", cfg.defense.enabled);
        if (d.contains("filters")) {
            cfg.defense.which.clear();
            for (const auto& f : d.at("filters")) {
                cfg.defense.which.insert(defense_kind_from_name(f.get<std::string>()));
            }
        }
        cfg.defense.ppl_threshold = d.value("ppl_threshold", cfg.defense.ppl_threshold);
        cfg.defense.max_words = d.value("max_words", cfg.defense.max_words);
        cfg.defense.ngram_order = d.value("ngram_order", cfg.defense.ngram_order);
        cfg.defense.smoothing = d.value("smoothing", cfg.defense.smoothing);
    }
    if (j.contains("theory")) {
        const auto& t = j.at("theory");
        if (t.contains("lambdas"))
            cfg.theory.lambdas = t.at("lambdas").get<std::vector<double>>();
        if (t.contains("k0s"))
            cfg.theory.k0s = t.at("k0s").get<std::vector<std::size_t>>();
        if (t.contains("p_targets"))
            cfg.theory.p_targets = t.at("p_targets").get<std::vector<double>>();
        if (t.contains("deltas"))
            cfg.theory.deltas = t.at("deltas").get<std::vector<double>>();
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.workers = j.value("workers", cfg.workers);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    njson j;
    try {
        in >> j;
    } catch (const njson::exception& e) {
        throw ConfigError("malformed config JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides) {
    if (overrides.seed) cfg.master_seed = *overrides.seed;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (!overrides.strategies.empty()) cfg.strategies = overrides.strategies;
    if (overrides.backend_kind) cfg.backend.kind = *overrides.backend_kind;
    if (overrides.trials) cfg.trials = *overrides.trials;
    if (overrides.defense) cfg.defense.enabled = *overrides.defense;
}

namespace {

struct PreparedVariant {
    std::string method;
    CandidateSet set;
    std::string scored_text;  // appended content, or whole text for baseline
    double fidelity = -1.0;   // reconstruction fidelity (string strategy only)
    std::vector<double> trace;  // per-iteration loss (string strategy only)
};

struct TaskResult {
    std::vector<TrialRecord> trials;
    std::vector<njson> trial_lines;
    njson defense_entries = njson::array();
    std::vector<double> trace;   // shadow loss trace for this task, if any
    double fidelity = -1.0;
};

// The n-gram fluency scorer is trained on the corpus itself: every item text
// plus the query strings.
NgramModel train_corpus_scorer(const std::vector<CandidateSet>& sets,
                               const DefenseOptions& d) {
    std::vector<std::string> texts;
    for (const auto& set : sets) {
        texts.push_back(set.query.text);
        for (const auto& item : set.items) texts.push_back(item_text(item));
    }
    return train_ngram(texts, d.ngram_order, d.smoothing);
}

EngineParams cosine_variant(const EngineParams& p) {
    EngineParams out = p;
    out.scorer.kind = ScorerKind::CosineBagOfWords;
    return out;
}

struct ShadowOutcome {
    std::string text;
    double fidelity = 0.0;
    std::vector<double> trace;
};

ShadowOutcome shadow_string_content(const CandidateSet& set, const EngineParams& p,
                                    const ShadowConfig& shadow_cfg,
                                    std::uint64_t seed) {
    // The string strategy optimizes against the differentiable cosine
    // surrogate regardless of the evaluation scorer; that mismatch is the
    // point of the shadow-vs-target framing.
    EngineParams surrogate = cosine_variant(p);
    ShadowConfig cfg = shadow_cfg;
    SplitMix64 rng(seed);
    OptimizeResult res = optimize(set, surrogate, cfg, rng);
    ShadowProblem problem = make_problem(set, surrogate);
    cfg.token_budget = std::min(cfg.token_budget, problem.vocab.size());
    Reconstruction rec = reconstruct(res.state, problem, cfg);
    return {rec.text, rec.fidelity, std::move(res.trace)};
}

PreparedVariant prepare_strategy(const CandidateSet& set, const std::string& name,
                                 const ExperimentConfig& cfg, TextBackend& backend,
                                 std::uint64_t seed) {
    PreparedVariant out;
    out.method = name;
    if (name == "baseline") {
        out.set = set;
        out.scored_text = item_text(set.items[set.target_index]);
        return out;
    }
    Strategy strategy = strategy_from_name(name);
    LoopConfig loop_cfg;
    loop_cfg.tau = cfg.tau;
    loop_cfg.max_rounds = cfg.max_rounds;
    loop_cfg.backend = &backend;
    std::string appended;
    if (strategy == Strategy::String) {
        ShadowOutcome shadow = shadow_string_content(set, cfg.engine, cfg.shadow, seed);
        appended = shadow.text;
        out.fidelity = shadow.fidelity;
        out.trace = std::move(shadow.trace);
    } else {
        loop_cfg.string_content.clear();
        LoopState state = run_loop(set, strategy, loop_cfg, cfg.engine);
        appended = state.draft.text;
    }
    out.set = set;
    out.set.items[set.target_index] =
        append_description(set.items[set.target_index], appended);
    out.scored_text = appended;
    return out;
}

void evaluate_variant(const PreparedVariant& variant, const ExperimentConfig& cfg,
                      const NgramModel& scorer, std::size_t set_index,
                      std::size_t strategy_index, std::size_t variant_index,
                      TaskResult& result) {
    const CandidateSet& set = variant.set;
    double ppl = 0.0;
    if (!tokenize(variant.scored_text).empty()) {
        ppl = perplexity(variant.scored_text, scorer);
    }
    std::optional<std::array<double, 3>> exact;  // psr@1, psr@3, psr@5
    if (set.items.size() <= kBruteForceLimit) {
        exact = std::array<double, 3>{
            psr_bruteforce(set, cfg.engine, 1),
            psr_bruteforce(set, cfg.engine, 3),
            psr_bruteforce(set, cfg.engine, 5)};
    }
    std::string label = engine_label(cfg.engine);
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        SplitMix64 rng(derive_seed(cfg.master_seed,
                                   {set_index, strategy_index, variant_index, trial}));
        RankedList ranked = rank_sample(set, cfg.engine, rng);
        std::size_t rank = 0;
        for (std::size_t r = 0; r < ranked.order.size(); ++r) {
            if (ranked.order[r] == set.target_index) {
                rank = r + 1;
                break;
            }
        }
        TrialRecord record;
        record.category = set.query.category;
        record.model = label;
        record.method = variant.method;
        record.set_index = set_index;
        record.trial_index = trial;
        record.observed_rank = rank;
        record.ppl = ppl;
        result.trials.push_back(record);

        njson line;
        line["set"] = set_index;
        line["category"] = set.query.category;
        line["model"] = label;
        line["method"] = variant.method;
        line["trial"] = trial;
        line["rank"] = rank;
        line["ppl"] = ppl;
        if (exact) {
            line["exact_top1"] = (*exact)[0];
            line["exact_top3"] = (*exact)[1];
            line["exact_top5"] = (*exact)[2];
        }
        if (variant.fidelity >= 0.0) line["fidelity"] = variant.fidelity;
        result.trial_lines.push_back(std::move(line));
    }
}

void run_pool(std::size_t tasks, std::size_t workers,
              const std::function<void(std::size_t)>& body) {
    workers = std::max<std::size_t>(1, workers);
    if (workers == 1 || tasks <= 1) {
        for (std::size_t t = 0; t < tasks; ++t) body(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < std::min(workers, tasks); ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t t = next.fetch_add(1); t < tasks;
                     t = next.fetch_add(1)) {
                    body(t);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
    if (cfg.strategies.empty()) throw ConfigError("strategy set is empty");
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    for (const auto& s : cfg.strategies) {
        if (s != "baseline") strategy_from_name(s);  // throws on unknown names
    }

    std::vector<CandidateSet> sets = materialize_corpus(cfg.corpus);
    if (sets.empty()) throw ConfigError("corpus is empty");
    NgramModel scorer = train_corpus_scorer(sets, cfg.defense);
    auto backend = make_backend(cfg.backend);

    FilterConfig filter_cfg;
    filter_cfg.ppl_threshold = cfg.defense.ppl_threshold;
    filter_cfg.max_words = cfg.defense.max_words;
    filter_cfg.ppl_scorer = &scorer;

    const std::size_t n_tasks = sets.size() * cfg.strategies.size();
    std::vector<TaskResult> results(n_tasks);
    // Results of tasks that finished before a failure are still written out,
    // so a backend outage partway through a run does not discard the rest.
    std::exception_ptr pool_error;
    auto run_task = [&](std::size_t task) {
        std::size_t set_index = task / cfg.strategies.size();
        std::size_t strategy_index = task % cfg.strategies.size();
        const CandidateSet& set = sets[set_index];
        std::uint64_t seed =
            derive_seed(cfg.master_seed, {set_index, strategy_index, 0x0B7ULL});
        PreparedVariant plain = prepare_strategy(
            set, cfg.strategies[strategy_index], cfg, *backend, seed);
        evaluate_variant(plain, cfg, scorer, set_index, strategy_index, 0,
                         results[task]);
        results[task].fidelity = plain.fidelity;
        results[task].trace = std::move(plain.trace);
        if (cfg.defense.enabled) {
            std::map<std::size_t, ItemProvenance> provenance;
            if (plain.method != "baseline") {
                provenance[set.target_index] = {set.items[set.target_index],
                                                plain.scored_text};
            }
            auto [defended, report] =
                apply_defenses(plain.set, filter_cfg, cfg.defense.which, provenance);
            njson entry = to_json(report);
            entry["set"] = set_index;
            entry["method"] = plain.method;
            results[task].defense_entries.push_back(std::move(entry));
            PreparedVariant dv;
            dv.method = plain.method + "+defended";
            dv.scored_text =
                defended.items[set.target_index] == plain.set.items[set.target_index]
                    ? plain.scored_text
                    : item_text(defended.items[set.target_index]);
            dv.set = std::move(defended);
            dv.fidelity = plain.fidelity;
            evaluate_variant(dv, cfg, scorer, set_index, strategy_index, 1,
                             results[task]);
        }
    };
    try {
        run_pool(n_tasks, cfg.workers, run_task);
    } catch (...) {
        pool_error = std::current_exception();
    }

    fs::create_directories(cfg.out_dir);
    RunResult out;
    out.trials_path = (fs::path(cfg.out_dir) / "trials.jsonl").string();
    out.summary_csv_path = (fs::path(cfg.out_dir) / "summary.csv").string();
    out.summary_json_path = (fs::path(cfg.out_dir) / "summary.json").string();

    std::vector<TrialRecord> all_trials;
    std::string trials_text;
    njson defense_report = njson::array();
    double fidelity_sum = 0.0;
    std::size_t fidelity_count = 0;
    for (std::size_t task = 0; task < results.size(); ++task) {
        const auto& r = results[task];
        for (const auto& t : r.trials) all_trials.push_back(t);
        for (const auto& line : r.trial_lines) {
            trials_text += line.dump();
            trials_text += '\n';
        }
        for (const auto& entry : r.defense_entries) defense_report.push_back(entry);
        if (r.fidelity >= 0.0) {
            fidelity_sum += r.fidelity;
            ++fidelity_count;
        }
        if (cfg.dump_shadow_traces && !r.trace.empty()) {
            std::size_t set_index = task / cfg.strategies.size();
            std::string path =
                (fs::path(cfg.out_dir) /
                 ("shadow_trace_set" + std::to_string(set_index) + ".csv"))
                    .string();
            std::string csv = "iteration,loss,top1_probability\n";
            for (std::size_t i = 0; i < r.trace.size(); ++i) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.9f\n", i + 1,
                              r.trace[i], std::exp(-r.trace[i]));
                csv += buf;
            }
            write_text_file(path, csv);
            out.trace_paths.push_back(path);
        }
    }
    write_text_file(out.trials_path, trials_text);
    if (cfg.defense.enabled) {
        out.defense_report_path =
            (fs::path(cfg.out_dir) / "defense_report.json").string();
        write_text_file(out.defense_report_path, defense_report.dump(2) + "\n");
    }
    if (fidelity_count > 0) {
        out.mean_string_fidelity =
            fidelity_sum / static_cast<double>(fidelity_count);
    }

    out.summary = summarize(all_trials);
    write_text_file(out.summary_csv_path, summary_csv(out.summary));
    write_text_file(out.summary_json_path, summary_json(out.summary).dump(2) + "\n");
    out.trial_rows = all_trials.size();
    if (pool_error) std::rethrow_exception(pool_error);
    return out;
}

namespace {

constexpr std::array<const char*, 3> kStudyStrategies = {"string", "reasoning",
                                                         "review"};

// Drafts with strictly ordered content scores: one, two and three of the
// query's distinct tokens.
std::array<std::string, 3> study_drafts(const Query& query) {
    auto tokens = distinct_tokens(query.text);
    if (tokens.size() < 3) throw ConfigError("study query needs >= 3 tokens");
    std::array<std::string, 3> drafts;
    drafts[0] = tokens[0];
    drafts[1] = tokens[0] + " " + tokens[1];
    drafts[2] = tokens[0] + " " + tokens[1] + " " + tokens[2];
    return drafts;
}

// Clears query-token overlap from the top-3 items so the appended drafts are
// the only content signal in those slots.
CandidateSet neutralize_top3(const CandidateSet& set) {
    CandidateSet out = set;
    for (std::size_t i = 0; i < 3; ++i) {
        out.items[i].short_description = "steady compact model with matte finish";
        out.items[i].long_description =
            "the padded build and sealed grip held up well with daily use.";
    }
    return out;
}

}  // namespace

InsertionStudyResult run_insertion_study(const ExperimentConfig& cfg) {
    std::vector<CandidateSet> sets = materialize_corpus(cfg.corpus);
    if (sets.empty()) throw ConfigError("corpus is empty");
    InsertionStudyResult result;

    for (std::size_t set_index = 0; set_index < sets.size(); ++set_index) {
        const CandidateSet& raw = sets[set_index];
        if (raw.items.size() < 3) {
            throw ConfigError("insertion study needs >= 3 items per set");
        }
        CandidateSet base = neutralize_top3(raw);
        auto drafts = study_drafts(base.query);

        std::array<std::size_t, 3> perm = {0, 1, 2};
        std::size_t assignment_index = 0;
        // position -> strategy -> P(rank 1), for the monotonicity check
        std::array<std::vector<std::pair<std::size_t, double>>, 3> top1_by_strategy;
        do {
            std::vector<std::pair<std::size_t, std::string>> assignment;
            for (std::size_t pos = 0; pos < 3; ++pos) {
                assignment.emplace_back(pos, drafts[perm[pos]]);
            }
            CandidateSet modified = permute_insertion(base, assignment);

            std::vector<std::vector<double>> marginals;
            if (modified.items.size() <= kBruteForceLimit) {
                marginals = rank_marginals_bruteforce(modified, cfg.engine);
            } else {
                // Monte-Carlo fallback for larger sets.
                std::size_t n = modified.items.size();
                marginals.assign(n, std::vector<double>(n, 0.0));
                std::size_t draws = std::max<std::size_t>(cfg.trials, 1);
                for (std::size_t t = 0; t < draws; ++t) {
                    SplitMix64 rng(derive_seed(cfg.master_seed,
                                               {set_index, assignment_index, t}));
                    RankedList ranked = rank_sample(modified, cfg.engine, rng);
                    for (std::size_t r = 0; r < n; ++r) {
                        marginals[ranked.order[r]][r] += 1.0 / static_cast<double>(draws);
                    }
                }
            }
            for (std::size_t pos = 0; pos < 3; ++pos) {
                InsertionOutcome outcome;
                outcome.set_index = set_index;
                outcome.assignment_index = assignment_index;
                outcome.strategy = kStudyStrategies[perm[pos]];
                outcome.position = pos;
                outcome.rank_probability = {marginals[pos][0], marginals[pos][1],
                                            marginals[pos][2]};
                top1_by_strategy[perm[pos]].emplace_back(pos, marginals[pos][0]);
                result.outcomes.push_back(std::move(outcome));
            }
            ++assignment_index;
        } while (std::next_permutation(perm.begin(), perm.end()));

        for (const auto& entries : top1_by_strategy) {
            for (const auto& [pos_a, p_a] : entries) {
                for (const auto& [pos_b, p_b] : entries) {
                    if (pos_a < pos_b && p_a + 1e-12 < p_b) result.monotone = false;
                }
            }
        }
    }

    fs::create_directories(cfg.out_dir);
    result.json_path = (fs::path(cfg.out_dir) / "insertion_study.json").string();
    result.csv_path = (fs::path(cfg.out_dir) / "insertion_study.csv").string();

    njson j;
    j["monotone"] = result.monotone;
    njson rows = njson::array();
    std::string csv = "set,assignment,strategy,position,p_rank1,p_rank2,p_rank3\n";
    for (const auto& o : result.outcomes) {
        rows.push_back({{"set", o.set_index},
                        {"assignment", o.assignment_index},
                        {"strategy", o.strategy},
                        {"position", o.position},
                        {"p_rank1", o.rank_probability[0]},
                        {"p_rank2", o.rank_probability[1]},
                        {"p_rank3", o.rank_probability[2]}});
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%s,%zu,%.9f,%.9f,%.9f\n",
                      o.set_index, o.assignment_index, o.strategy.c_str(),
                      o.position, o.rank_probability[0], o.rank_probability[1],
                      o.rank_probability[2]);
        csv += buf;
    }
    j["outcomes"] = std::move(rows);
    write_text_file(result.json_path, j.dump(2) + "\n");
    write_text_file(result.csv_path, csv);
    return result;
}

CandidateSet theory_instance(std::size_t k0) {
    if (k0 < 1) throw ConfigError("theory instance needs k0 >= 1");
    CandidateSet set;
    set.query.text = "camera zoom lens tripod";
    set.query.category = "Electronics";
    for (std::size_t k = 0; k < k0; ++k) {
        ProductRecord r;
        r.name = "Halcyon T" + std::to_string(k + 10);
        r.short_description = "steady compact model with matte finish";
        r.long_description =
            "the padded build and sealed grip held up well with daily use.";
        r.price = "$49.95";
        r.rating = "4.2 out of 5 stars";
        r.num_reviews = "120 ratings";
        set.items.push_back(std::move(r));
    }
    return select_target(set);
}

TheoryReport run_theory_suite(const ExperimentConfig& cfg) {
    TheoryReport report;
    EngineParams params = cfg.engine;
    params.scorer.kind = ScorerKind::CosineBagOfWords;

    for (double lambda : cfg.theory.lambdas) {
        for (std::size_t k0 : cfg.theory.k0s) {
            CandidateSet instance = theory_instance(k0);
            EngineParams cell_params = params;
            cell_params.lambda = lambda;
            ShadowProblem problem = make_problem(instance, cell_params);
            double L = analytic_smoothness_bound(problem);
            for (double p_target : cfg.theory.p_targets) {
                for (double delta : cfg.theory.deltas) {
                    TheoremInputs inputs;
                    inputs.smoothness_L = L;
                    inputs.beta = (1.0 - p_target);
                    inputs.lambda = lambda;
                    inputs.k0 = k0;
                    inputs.p_target = p_target;
                    inputs.p0 = std::min(std::exp(-lambda * static_cast<double>(k0)),
                                         p_target);
                    inputs.delta = delta;

                    TheoryCell cell;
                    cell.lambda = lambda;
                    cell.k0 = k0;
                    cell.p_target = p_target;
                    cell.delta = delta;
                    cell.report =
                        verify_convergence(instance, cell_params, cfg.shadow, inputs);
                    cell.passed = cell.report.converged && cell.report.mismatch_ok;
                    report.all_passed = report.all_passed && cell.passed;
                    report.cells.push_back(std::move(cell));
                }
            }
        }
    }

    fs::create_directories(cfg.out_dir);
    report.json_path = (fs::path(cfg.out_dir) / "theory_report.json").string();
    njson j;
    j["all_passed"] = report.all_passed;
    njson cells = njson::array();
    for (const auto& cell : report.cells) {
        cells.push_back({{"lambda", cell.lambda},
                         {"k0", cell.k0},
                         {"p_target", cell.p_target},
                         {"delta", cell.delta},
                         {"iteration_bound", cell.report.iteration_bound},
                         {"iterations_run", cell.report.iterations_run},
                         {"eta", cell.report.eta},
                         {"initial_probability", cell.report.initial_probability},
                         {"achieved_probability", cell.report.achieved_probability},
                         {"perturbed_probability", cell.report.perturbed_probability},
                         {"probability_floor", cell.report.probability_floor},
                         {"gap_bound", cell.report.gap_bound},
                         {"measured_gap", cell.report.measured_gap},
                         {"passed", cell.passed}});
    }
    j["cells"] = std::move(cells);
    write_text_file(report.json_path, j.dump(2) + "\n");
    return report;
}

std::size_t ingest(const ExperimentConfig& cfg, const std::string& out_path) {
    std::vector<CandidateSet> sets = materialize_corpus(cfg.corpus);
    save_corpus(out_path, sets);
    return sets.size();
}

bool validate_corpus_file(const std::string& path, std::ostream& out) {
    std::ifstream in(path);
    if (!in) {
        out << "cannot open " << path << "\n";
        return false;
    }
    bool ok = true;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        njson j;
        try {
            j = njson::parse(line);
        } catch (const njson::exception& e) {
            out << "line " << line_no << ": malformed JSON: " << e.what() << "\n";
            ok = false;
            continue;
        }
        if (!j.contains("items") || !j.at("items").is_array()) {
            out << "line " << line_no << ": missing items array\n";
            ok = false;
            continue;
        }
        std::size_t kept = 0;
        std::size_t index = 0;
        for (const auto& item : j.at("items")) {
            ProductRecord r;
            r.name = item.value("name", "");
            r.short_description = item.value("short_description", "");
            r.long_description = item.value("long_description", "");
            ValidationResult v = validate_record(r);
            if (v.accepted) {
                ++kept;
            } else {
                out << "line " << line_no << " item " << index << ": rejected ("
                    << v.reason << ")\n";
                ok = false;
            }
            ++index;
        }
        out << "line " << line_no << ": " << kept << "/" << index
            << " records valid\n";
        if (kept == 0) ok = false;
    }
    return ok;
}

RunResult report_from_trials(const std::string& trials_path,
                             const std::string& out_dir) {
    std::ifstream in(trials_path);
    if (!in) throw ConfigError("cannot open trials file: " + trials_path);
    std::vector<TrialRecord> trials;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        njson j;
        try {
            j = njson::parse(line);
        } catch (const njson::exception& e) {
            throw ConfigError(trials_path + ":" + std::to_string(line_no) +
                              ": malformed JSON: " + e.what());
        }
        TrialRecord t;
        t.category = j.value("category", "");
        t.model = j.value("model", "");
        t.method = j.value("method", "");
        t.set_index = j.value("set", 0u);
        t.trial_index = j.value("trial", 0u);
        t.observed_rank = j.value("rank", 1u);
        t.ppl = j.value("ppl", 0.0);
        trials.push_back(std::move(t));
    }

    fs::create_directories(out_dir);
    RunResult out;
    out.trials_path = trials_path;
    out.summary = summarize(trials);
    out.summary_csv_path = (fs::path(out_dir) / "summary.csv").string();
    out.summary_json_path = (fs::path(out_dir) / "summary.json").string();
    write_text_file(out.summary_csv_path, summary_csv(out.summary));
    write_text_file(out.summary_json_path, summary_json(out.summary).dump(2) + "\n");
    out.trial_rows = trials.size();
    return out;
}

}  // namespace ranklab
