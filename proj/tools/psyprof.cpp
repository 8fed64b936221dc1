#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

#include "psyprof/errors.hpp"
#include "psyprof/pipeline.hpp"

using namespace psyprof;

namespace {

// Exit codes: 0 ok, 1 internal, 2 config, 3 missing input, 4 bad data,
// 5 feature-layout mismatch. Errors print one line: `error: <class>: <what>`.
constexpr int kInternalExit = 1;
constexpr int kConfigExit = 2;
constexpr int kMissingInputExit = 3;
constexpr int kDataExit = 4;
constexpr int kLayoutExit = 5;

int fail(const char* cls, const char* what, int code) {
    std::fprintf(stderr, "error: %s: %s\n", cls, what);
    return code;
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;
};

config::PipelineConfig load_config(const GlobalArgs& args, bool seed_given) {
    if (args.config_path.empty()) {
        throw ConfigError("no config file given; use --config or set PSYPROF_CONFIG");
    }
    auto cfg = config::PipelineConfig::load(args.config_path);
    if (seed_given) cfg.master_seed = args.seed;
    if (!args.out_dir.empty()) cfg.paths.out_dir = args.out_dir;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    GlobalArgs args;
    CLI::App app{"psyprof: personality trait profiles from archived social feeds"};
    app.require_subcommand(1);

    auto* config_opt = app.add_option("-c,--config", args.config_path, "config file (TOML)");
    config_opt->envname("PSYPROF_CONFIG");
    auto* seed_opt = app.add_option("--seed", args.seed, "override [seeds] master");
    app.add_option("--out", args.out_dir, "override [paths] out_dir");
    app.add_flag("-q,--quiet", args.quiet, "suppress summaries, keep errors");

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic archive");
    auto* ingest = app.add_subcommand("ingest", "load the archive, drop spam, score labels");
    auto* train_emotion =
        app.add_subcommand("train-emotion", "fit the six-emotion text classifier");
    auto* featurize = app.add_subcommand("featurize", "build the user-by-feature matrix");
    auto* train = app.add_subcommand("train", "fit baseline, per-trait and chained models");
    auto* evaluate = app.add_subcommand("evaluate", "report rmse under the split protocol");
    bool baseline_only = false;
    evaluate->add_flag("--baseline-only", baseline_only,
                       "skip the models, report only the trait-mean baseline");
    auto* predict = app.add_subcommand("predict", "score an archive with the trained models");
    auto* analyze = app.add_subcommand("analyze", "trait stats and correlation reports");
    auto* embed = app.add_subcommand("embed", "2-d embedding of user trait profiles");
    auto* learning_curve =
        app.add_subcommand("learning-curve", "rmse as the training set grows");
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = load_config(args, seed_opt->count() > 0);
        const bool chatty = !args.quiet;

        if (app.got_subcommand(synth)) {
            const auto s = pipeline::run_synth(cfg);
            if (chatty) std::printf("synth: wrote %zu users to %s\n", s.n_users, s.path.c_str());
        } else if (app.got_subcommand(ingest)) {
            const auto s = pipeline::run_ingest(cfg);
            for (const auto& line : s.diagnostics) {
                std::fprintf(stderr, "warning: %s\n", line.c_str());
            }
            if (chatty) {
                std::printf("ingest: kept %zu of %zu users (%zu removal(s))\n", s.kept, s.loaded,
                            s.removals);
            }
        } else if (app.got_subcommand(train_emotion)) {
            const auto s = pipeline::run_train_emotion(cfg);
            if (chatty) {
                std::printf("train-emotion: heldout micro precision %s (%zu train, %zu heldout)\n",
                            fixed4(s.micro_precision).c_str(), s.train_count, s.heldout_count);
            }
        } else if (app.got_subcommand(featurize)) {
            const auto s = pipeline::run_featurize(cfg);
            if (chatty) {
                std::printf("featurize: %zu rows x %zu columns, layout %s\n", s.n_rows, s.n_cols,
                            s.layout_hash.c_str());
                std::printf("featurize: tagger heldout accuracy %s\n",
                            fixed4(s.tagger_heldout_accuracy).c_str());
            }
        } else if (app.got_subcommand(train)) {
            const auto s = pipeline::run_train(cfg);
            if (chatty) {
                std::printf("train: fit models on %zu labeled users; routed columns:", s.n_rows);
                for (int t = 0; t < kTraitCount; ++t) {
                    std::printf(" %s=%zu", kTraitNames[t], s.routed_counts[t]);
                }
                std::printf("\n");
            }
        } else if (app.got_subcommand(evaluate)) {
            const auto s = pipeline::run_evaluate(cfg, baseline_only);
            if (chatty) {
                std::printf("%-18s %9s", "trait", "baseline");
                if (!s.baseline_only) std::printf(" %12s %9s", "independent", "holistic");
                std::printf("\n");
                for (int t = 0; t < kTraitCount; ++t) {
                    std::printf("%-18s %9s", kTraitNames[t], fixed4(s.baseline[t]).c_str());
                    if (!s.baseline_only) {
                        std::printf(" %12s %9s", fixed4(s.independent[t]).c_str(),
                                    fixed4(s.holistic[t]).c_str());
                    }
                    std::printf("\n");
                }
                std::printf("%-18s %9s", "mean", fixed4(s.mean_baseline).c_str());
                if (!s.baseline_only) {
                    std::printf(" %12s %9s", fixed4(s.mean_independent).c_str(),
                                fixed4(s.mean_holistic).c_str());
                }
                std::printf("\nevaluate: %zu fold(s)\n", s.folds);
            }
        } else if (app.got_subcommand(predict)) {
            const auto s = pipeline::run_predict(cfg);
            if (chatty) std::printf("predict: scored %zu users\n", s.n_users);
        } else if (app.got_subcommand(analyze)) {
            const auto s = pipeline::run_analyze(cfg);
            if (chatty) {
                std::printf("analyze: %zu users, %zu features\n", s.n_users, s.n_features);
            }
        } else if (app.got_subcommand(embed)) {
            const auto s = pipeline::run_embed(cfg);
            if (chatty) {
                std::printf("embed: %zu points, final kl %s\n", s.n_points,
                            fixed4(s.final_kl).c_str());
            }
        } else if (app.got_subcommand(learning_curve)) {
            const auto s = pipeline::run_learning_curve(cfg);
            if (chatty) {
                for (const auto& p : s.points) {
                    std::printf("learning-curve: %3.0f%% (n=%zu) mean rmse %s\n",
                                p.fraction * 100.0, p.train_count, fixed4(p.mean_rmse).c_str());
                }
            }
        }
        return 0;
    } catch (const ConfigError& e) {
        return fail("config", e.what(), kConfigExit);
    } catch (const MissingInputError& e) {
        return fail("missing-input", e.what(), kMissingInputExit);
    } catch (const DataError& e) {
        return fail("data", e.what(), kDataExit);
    } catch (const LayoutError& e) {
        return fail("layout", e.what(), kLayoutExit);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), kInternalExit);
    }
}
