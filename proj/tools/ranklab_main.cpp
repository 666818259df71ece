// ranklab command-line runner: corpus handling, simulated-engine experiments,
// content optimization, defenses and the convergence checks, all reproducible
// from a config file plus a master seed.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "ranklab/harness.hpp"

namespace {

using namespace ranklab;

struct CommonArgs {
    std::string config_path;
    CliOverrides overrides;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    std::string out_flag;
    std::vector<std::string> strategy_flags;
    std::string backend_flag;
    std::size_t trials_flag = 0;
    bool trials_set = false;
    bool defense_flag = false;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON configuration file");
    cmd->add_option("--seed", args.seed_flag, "master seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--out", args.out_flag, "output directory override");
    cmd->add_option("--strategy", args.strategy_flags,
                    "strategy subset (baseline, string, reasoning, review)");
    cmd->add_option("--backend", args.backend_flag, "text backend (mock or live)");
    cmd->add_option("--trials", args.trials_flag, "sampled trials per instance")
        ->each([&](const std::string&) { args.trials_set = true; });
    cmd->add_flag("--defense", args.defense_flag,
                  "also evaluate with the configured defenses applied");
}

ExperimentConfig resolve_config(CommonArgs& args) {
    ExperimentConfig cfg =
        args.config_path.empty() ? ExperimentConfig{} : load_config(args.config_path);
    if (args.seed_set) args.overrides.seed = args.seed_flag;
    if (!args.out_flag.empty()) args.overrides.out_dir = args.out_flag;
    args.overrides.strategies = args.strategy_flags;
    if (!args.backend_flag.empty()) args.overrides.backend_kind = args.backend_flag;
    if (args.trials_set) args.overrides.trials = args.trials_flag;
    if (args.defense_flag) args.overrides.defense = true;
    apply_overrides(cfg, args.overrides);
    return cfg;
}

void print_run_result(const RunResult& result) {
    std::cout << "wrote " << result.trials_path << " (" << result.trial_rows
              << " trial rows)\n";
    std::cout << "wrote " << result.summary_csv_path << "\n";
    std::cout << "wrote " << result.summary_json_path << "\n";
    if (!result.defense_report_path.empty()) {
        std::cout << "wrote " << result.defense_report_path << "\n";
    }
    if (!result.trace_paths.empty()) {
        std::cout << "wrote " << result.trace_paths.size()
                  << " shadow trace files\n";
    }
    if (result.mean_string_fidelity > 0.0) {
        std::printf("mean reconstruction fidelity: %.3f\n",
                    result.mean_string_fidelity);
    }
    for (const auto& row : result.summary) {
        std::printf("%-28s %-12s top5=%.3f top3=%.3f top1=%.3f ppl=%.1f\n",
                    row.category.c_str(), row.method.c_str(), row.top5, row.top3,
                    row.top1, row.mean_ppl);
    }
}

int run_with_strategies(CommonArgs& args,
                        const std::vector<std::string>& default_strategies) {
    ExperimentConfig cfg = resolve_config(args);
    if (args.strategy_flags.empty()) cfg.strategies = default_strategies;
    print_run_result(run(cfg));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"position-bias ranking laboratory"};
    app.require_subcommand(1);

    CommonArgs args;

    std::string ingest_in, ingest_out = "corpus.jsonl";
    bool ingest_synth = false;
    auto* ingest_cmd = app.add_subcommand("ingest", "load, validate and normalize a corpus");
    add_common_flags(ingest_cmd, args);
    ingest_cmd->add_option("--in", ingest_in, "corpus JSONL to ingest");
    ingest_cmd->add_option("--out-file", ingest_out, "normalized corpus destination");
    ingest_cmd->add_flag("--synth", ingest_synth, "generate the synthetic corpus");

    std::string validate_in;
    auto* validate_cmd = app.add_subcommand("validate", "report per-record validation verdicts");
    validate_cmd->add_option("--in", validate_in, "corpus JSONL to validate")->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "baseline ranking under the simulated engine");
    add_common_flags(simulate_cmd, args);

    bool dump_traces = false;
    auto* shadow_cmd = app.add_subcommand("optimize-shadow", "gradient-based content optimization runs");
    add_common_flags(shadow_cmd, args);
    shadow_cmd->add_flag("--trace", dump_traces,
                         "dump per-set iteration/loss/probability CSVs");

    auto* query_cmd = app.add_subcommand("optimize-query", "generator-optimizer loop runs");
    add_common_flags(query_cmd, args);

    auto* defend_cmd = app.add_subcommand("defend", "optimization runs evaluated with defenses applied");
    add_common_flags(defend_cmd, args);

    auto* insertion_cmd = app.add_subcommand("insertion-study", "permuted insertion-order study");
    add_common_flags(insertion_cmd, args);

    auto* theory_cmd = app.add_subcommand("theory-suite", "convergence and mismatch bound checks");
    add_common_flags(theory_cmd, args);

    std::string report_trials;
    std::string report_out = "out";
    auto* report_cmd = app.add_subcommand("report", "re-aggregate a trials.jsonl file");
    report_cmd->add_option("--trials-file", report_trials, "trials.jsonl to aggregate")->required();
    report_cmd->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(args);
            if (!ingest_in.empty()) {
                cfg.corpus.kind = CorpusSource::Kind::File;
                cfg.corpus.path = ingest_in;
            } else if (ingest_synth) {
                cfg.corpus.kind = CorpusSource::Kind::Synth;
            }
            std::size_t n = ingest(cfg, ingest_out);
            std::cout << "wrote " << n << " candidate sets to " << ingest_out << "\n";
            return 0;
        }
        if (validate_cmd->parsed()) {
            return validate_corpus_file(validate_in, std::cout) ? 0 : 1;
        }
        if (simulate_cmd->parsed()) {
            return run_with_strategies(args, {"baseline"});
        }
        if (shadow_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(args);
            if (args.strategy_flags.empty()) cfg.strategies = {"baseline", "string"};
            if (dump_traces) cfg.dump_shadow_traces = true;
            print_run_result(run(cfg));
            return 0;
        }
        if (query_cmd->parsed()) {
            return run_with_strategies(args, {"baseline", "reasoning", "review"});
        }
        if (defend_cmd->parsed()) {
            args.overrides.defense = true;
            ExperimentConfig cfg = resolve_config(args);
            cfg.defense.enabled = true;
            print_run_result(run(cfg));
            return 0;
        }
        if (insertion_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(args);
            InsertionStudyResult result = run_insertion_study(cfg);
            std::cout << "wrote " << result.json_path << "\n";
            std::cout << "wrote " << result.csv_path << "\n";
            std::cout << "monotone: " << (result.monotone ? "yes" : "no") << "\n";
            return 0;
        }
        if (theory_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(args);
            TheoryReport report = run_theory_suite(cfg);
            std::cout << "wrote " << report.json_path << "\n";
            for (const auto& cell : report.cells) {
                std::printf(
                    "lambda=%.2f k0=%-3zu p_target=%.2f delta=%.2f bound=%-4zu "
                    "achieved=%.4f %s\n",
                    cell.lambda, cell.k0, cell.p_target, cell.delta,
                    cell.report.iteration_bound, cell.report.achieved_probability,
                    cell.passed ? "pass" : "FAIL");
            }
            return report.all_passed ? 0 : 1;
        }
        if (report_cmd->parsed()) {
            print_run_result(report_from_trials(report_trials, report_out));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CorpusError& e) {
        std::cerr << "corpus error: " << e.what() << "\n";
        return 2;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const LoopError& e) {
        std::cerr << "backend error: " << e.what() << " ("
                  << e.partial.transcript.size() << " rounds preserved)\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
