// Release gate: one check per shipping claim, each printed as a single
// [PASS]/[FAIL] line with its runtime. Exit code is the number of failures.
//
// The expensive checks share one pipeline run: criterion 5 executes the full
// bundled-config chain into run_a, criterion 6 draws the learning curve from
// those artifacts, criterion 8 runs the correlation report on them, and
// criterion 10 repeats the chain into run_b and byte-compares everything.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "psyprof/analysis.hpp"
#include "psyprof/config.hpp"
#include "psyprof/emotion.hpp"
#include "psyprof/features.hpp"
#include "psyprof/ml.hpp"
#include "psyprof/pipeline.hpp"
#include "psyprof/textprep.hpp"
#include "psyprof/types.hpp"

namespace fs = std::filesystem;
using namespace psyprof;
using nlohmann::json;

namespace {

std::string data_path(const std::string& name) {
    return std::string(PSYPROF_DATA_DIR) + "/" + name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int num, bool ok, const std::string& detail, double secs) {
    std::printf("[%s] %2d. %s (%.1fs)\n", ok ? "PASS" : "FAIL", num, detail.c_str(), secs);
    std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// portable uniform in [0,1) from raw 64-bit draws
double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// plain two-pass Pearson r, zero when either side is constant
double plain_r(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------- criterion 1

bool criterion_metrics() {
    auto t0 = std::chrono::steady_clock::now();
    struct Case {
        std::vector<double> y, p;
        double mse, mae;
    };
    // mse/mae worked out by hand; errors are dyadic so the doubles are exact
    const std::vector<Case> cases = {
        {{0, 0}, {0, 0}, 0.0, 0.0},
        {{0, 1}, {1, 0}, 1.0, 1.0},
        {{0}, {0.5}, 0.25, 0.5},
        {{1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5}, 0.25, 0.5},
        {{0, 0, 0, 3}, {0, 0, 0, 0}, 2.25, 0.75},
        {{3, 4}, {0, 0}, 12.5, 3.5},
        {{1, 2, 3}, {2, 3, 4}, 1.0, 1.0},
        {{0.5, 0.25}, {0.25, 0.5}, 0.0625, 0.25},
        {{2}, {2}, 0.0, 0.0},
        {{-1, 1}, {1, -1}, 4.0, 2.0},
        {{0, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, 0.2, 0.2},
        {{10, 10, 10}, {9, 11, 10}, 2.0 / 3.0, 2.0 / 3.0},
        {{0.125, 0.25}, {0.375, 0.5}, 0.0625, 0.25},
        {{1, 3, 5, 7}, {2, 2, 6, 6}, 1.0, 1.0},
        {{0, 0}, {1.5, 0.5}, 1.25, 1.0},
        {{4, 0, 0, 0}, {0, 0, 0, 0}, 4.0, 1.0},
        {{0.75}, {0.5}, 0.0625, 0.25},
        {{1, 2, 3, 4, 5}, {1, 2, 3, 4, 0}, 5.0, 1.0},
        {{2, 2, 2, 2}, {0, 4, 0, 4}, 4.0, 2.0},
        {{0.5, 1.5, 2.5, 3.5}, {1, 1, 3, 3}, 0.25, 0.5},
    };
    int exact = 0;
    for (const auto& c : cases) {
        bool ok = std::fabs(ml::rmse(c.y, c.p) - std::sqrt(c.mse)) <= 1e-12 &&
                  std::fabs(ml::mae(c.y, c.p) - c.mae) <= 1e-12;
        if (ok) ++exact;
    }
    std::mt19937_64 rng(123456);
    int ordered = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        std::size_t n = 1 + rng() % 50;
        std::vector<double> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = 4.0 * unit(rng) - 2.0;
            p[i] = 4.0 * unit(rng) - 2.0;
        }
        if (ml::mae(y, p) <= ml::rmse(y, p) + 1e-15) ++ordered;
    }
    double secs = seconds_since(t0);
    bool pass = exact == 20 && ordered == trials && secs < 1.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "rmse/mae oracle: %d/20 hand cases within 1e-12, mae<=rmse in %d/%d trials",
                  exact, ordered, trials);
    report(1, pass, buf, secs);
    return pass;
}

// ---------------------------------------------------------------- criterion 2

bool criterion_baseline() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(77001);
    int agree = 0;
    const int sets = 100;
    double worst = 0.0;
    for (int s = 0; s < sets; ++s) {
        std::size_t n = 2 + rng() % 199;
        double scale = 1.0 + static_cast<double>(s % 5);
        std::vector<double> y(n);
        for (auto& v : y) v = scale * unit(rng);
        auto base = ml::fit_baseline(y);
        std::vector<double> yhat(n, base.predict());
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        double pop_std = std::sqrt(var / static_cast<double>(n));
        double diff = std::fabs(ml::rmse(y, yhat) - pop_std);
        worst = std::max(worst, diff);
        if (diff <= 1e-12) ++agree;
    }
    bool pass = agree == sets;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "baseline rmse == population std on %d/%d label sets (worst |diff| %.2e)",
                  agree, sets, worst);
    report(2, pass, buf, seconds_since(t0));
    return pass;
}

// ---------------------------------------------------------------- criterion 3

struct BruteSplit {
    bool found = false;
    double score = 0.0;
};

// exhaustive scan over every feature and every midpoint between distinct
// sorted values, scored with prefix sums
BruteSplit brute_best_split(const ml::Matrix& X, const std::vector<double>& y, int leaf) {
    std::size_t n = X.size(), p = X.front().size();
    BruteSplit best;
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<std::pair<double, double>> xy(n);
        for (std::size_t i = 0; i < n; ++i) xy[i] = {X[i][j], y[i]};
        std::sort(xy.begin(), xy.end());
        std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            s1[i + 1] = s1[i] + xy[i].second;
            s2[i + 1] = s2[i] + xy[i].second * xy[i].second;
        }
        for (std::size_t k = 1; k < n; ++k) {
            if (xy[k].first == xy[k - 1].first) continue;
            auto nl = static_cast<double>(k), nr = static_cast<double>(n - k);
            if (k < static_cast<std::size_t>(leaf) || n - k < static_cast<std::size_t>(leaf))
                continue;
            double sse = (s2[k] - s1[k] * s1[k] / nl) +
                         ((s2[n] - s2[k]) - (s1[n] - s1[k]) * (s1[n] - s1[k]) / nr);
            if (!best.found || sse < best.score) {
                best.found = true;
                best.score = sse;
            }
        }
    }
    return best;
}

double partition_sse(const ml::Matrix& X, const std::vector<double>& y, int feature,
                     double threshold) {
    std::vector<double> left, right;
    for (std::size_t i = 0; i < X.size(); ++i)
        (X[i][static_cast<std::size_t>(feature)] <= threshold ? left : right).push_back(y[i]);
    auto sse = [](const std::vector<double>& g) {
        if (g.empty()) return 0.0;
        double m = 0.0;
        for (double v : g) m += v;
        m /= static_cast<double>(g.size());
        double s = 0.0;
        for (double v : g) s += (v - m) * (v - m);
        return s;
    };
    return sse(left) + sse(right);
}

bool criterion_tree_split() {
    auto t0 = std::chrono::steady_clock::now();
    int agree = 0;
    const int instances = 50;
    double worst = 0.0;
    for (int t = 0; t < instances; ++t) {
        std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(t));
        int leaf = std::array<int, 3>{1, 2, 5}[static_cast<std::size_t>(t % 3)];
        std::size_t p = 2 + static_cast<std::size_t>(t % 9);
        std::size_t n = std::max<std::size_t>(static_cast<std::size_t>(4 * leaf + 2),
                                              20 + (static_cast<std::size_t>(t) * 13) % 181);
        ml::Matrix X(n, std::vector<double>(p));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                double v = unit(rng);
                if (t % 4 == 0) v = std::round(v * 10.0) / 10.0; // force tied values
                X[i][j] = v;
            }
            y[i] = (t % 5 != 0) ? 2.0 * X[i][0] - X[i][1 % p] + 0.2 * unit(rng)
                                : unit(rng);
        }
        ml::TreeParams params;
        params.max_depth = 1;
        params.min_samples_leaf = leaf;
        params.max_features = 1.0;
        auto root = ml::fit_tree(X, y, params, 900 + static_cast<std::uint64_t>(t));
        auto brute = brute_best_split(X, y, leaf);
        bool ok;
        if (root->is_leaf()) {
            ok = !brute.found;
        } else {
            double impl = partition_sse(X, y, root->feature, root->threshold);
            double diff = std::fabs(impl - brute.score);
            worst = std::max(worst, diff);
            ok = brute.found && diff <= 1e-9;
        }
        if (ok) ++agree;
    }
    double secs = seconds_since(t0);
    bool pass = agree == instances && secs < 30.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "root split matches brute force on %d/%d instances (worst sse diff %.2e)",
                  agree, instances, worst);
    report(3, pass, buf, secs);
    return pass;
}

// ---------------------------------------------------------------- criterion 4

bool criterion_selection() {
    auto t0 = std::chrono::steady_clock::now();
    int agree = 0;
    const int sets = 100;
    for (int s = 0; s < sets; ++s) {
        std::mt19937_64 rng(31000 + static_cast<std::uint64_t>(s));
        std::size_t n_rows = 8 + rng() % 53;
        std::size_t n_cols = 5 + rng() % 36;
        std::vector<double> target(n_rows);
        for (auto& v : target) v = unit(rng);
        std::vector<features::FeatureColumn> cols(n_cols);
        for (std::size_t j = 0; j < n_cols; ++j) {
            auto& c = cols[j];
            char name[32];
            std::snprintf(name, sizeof name, "f%c%c_%02zu",
                          static_cast<char>('a' + rng() % 26),
                          static_cast<char>('a' + rng() % 26), j);
            c.name = name;
            c.family = "tfidf";
            c.values.resize(n_rows);
            if (s % 10 == 0 || (s % 3 == 0 && j % 5 < 2)) {
                std::fill(c.values.begin(), c.values.end(), 1.0 + static_cast<double>(j));
            } else if (s % 4 == 0 && j > 0 && j % 5 == 4) {
                c.values = cols[j - 1].values; // exact duplicate: a forced tie
            } else {
                for (auto& v : c.values) v = unit(rng);
            }
        }
        std::vector<std::size_t> rows(n_rows);
        for (std::size_t i = 0; i < n_rows; ++i) rows[i] = i;
        if (s % 2 == 1) { // row subset, shuffled then trimmed
            for (std::size_t i = n_rows - 1; i > 0; --i)
                std::swap(rows[i], rows[rng() % (i + 1)]);
            rows.resize(std::max<std::size_t>(3, 2 * n_rows / 3));
        }
        std::size_t k = 1 + rng() % (n_cols + 3);

        struct Scored {
            double score;
            std::string name;
        };
        std::vector<Scored> scored;
        scored.reserve(n_cols);
        for (const auto& c : cols) {
            std::vector<double> x, yv;
            for (std::size_t r : rows) {
                x.push_back(c.values[r]);
                yv.push_back(target[r]);
            }
            scored.push_back({std::fabs(plain_r(x, yv)), c.name});
        }
        std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.name < b.name;
        });
        std::vector<std::string> expect;
        for (std::size_t i = 0; i < std::min(k, n_cols); ++i) expect.push_back(scored[i].name);

        auto got = features::select_top_k(cols, target, k, rows);
        if (got == expect) ++agree;
    }
    double secs = seconds_since(t0);
    bool pass = agree == sets && secs < 10.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "select_top_k matches full-sort brute force on %d/%d column sets", agree, sets);
    report(4, pass, buf, secs);
    return pass;
}

// ------------------------------------------------------- criteria 5, 6, 8, 10

// bundled demo config rebased onto an absolute output directory
config::PipelineConfig bundled_config(const fs::path& dir) {
    auto cfg = config::PipelineConfig::load(data_path("config.toml"));
    cfg.paths.corpus = (dir / "users.jsonl").string();
    cfg.paths.stopwords = data_path("stopwords.txt");
    cfg.paths.emotion_lexicon = data_path("emotion_lexicon.tsv");
    cfg.paths.emoji_map = data_path("emoji_map.tsv");
    cfg.paths.tagger_corpus = data_path("tagger_corpus.tsv");
    cfg.paths.emotion_corpus = data_path("emotion_corpus.tsv");
    cfg.paths.questionnaire_key = data_path("questionnaire_key.csv");
    cfg.paths.synth_spec = data_path("synth_spec.json");
    cfg.paths.out_dir = dir.string();
    cfg.model.n_threads = 4; // exercise the threaded path regardless of core count
    return cfg;
}

void run_chain(const config::PipelineConfig& cfg) {
    pipeline::run_synth(cfg);
    pipeline::run_ingest(cfg);
    pipeline::run_train_emotion(cfg);
    pipeline::run_featurize(cfg);
    pipeline::run_train(cfg);
}

bool criterion_chain_benefit(const config::PipelineConfig& cfg, pipeline::EvaluateSummary* out) {
    auto t0 = std::chrono::steady_clock::now();
    run_chain(cfg);
    *out = pipeline::run_evaluate(cfg);
    double secs = seconds_since(t0);
    double margin = out->mean_independent - out->mean_holistic;
    bool beats_baseline = out->mean_independent <= 0.8 * out->mean_baseline &&
                          out->mean_holistic <= 0.8 * out->mean_baseline;
    bool pass = margin >= 0.005 && beats_baseline && secs < 300.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "chained model beats independent by %.4f (need 0.005): rmse base %.4f, "
                  "independent %.4f, chained %.4f",
                  margin, out->mean_baseline, out->mean_independent, out->mean_holistic);
    report(5, pass, buf, secs);
    return pass;
}

bool criterion_learning_curve(const config::PipelineConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    auto curve = pipeline::run_learning_curve(cfg);
    double secs = seconds_since(t0);
    bool shaped = !curve.points.empty() &&
                  curve.points.back().mean_rmse <= curve.points.front().mean_rmse;
    bool pass = shaped && secs < 600.0;
    char buf[200];
    if (curve.points.empty()) {
        std::snprintf(buf, sizeof buf, "learning curve came back empty");
    } else {
        std::snprintf(buf, sizeof buf,
                      "learning curve rmse %.4f at %.0f%% -> %.4f at %.0f%% of training data",
                      curve.points.front().mean_rmse, 100.0 * curve.points.front().fraction,
                      curve.points.back().mean_rmse, 100.0 * curve.points.back().fraction);
    }
    report(6, pass, buf, secs);
    return pass;
}

// ---------------------------------------------------------------- criterion 7

bool criterion_emotion() {
    auto t0 = std::chrono::steady_clock::now();
    auto corpus = emotion::load_emotion_corpus(data_path("emotion_corpus.tsv"));
    auto lex = emotion::expand_lexicon(emotion::load_lexicon(data_path("emotion_lexicon.tsv")));
    auto emoji = emotion::load_emoji_map(data_path("emoji_map.tsv"));
    emotion::EmotionTrainConfig tc;
    tc.train_fraction = 0.8;
    tc.lambda = 1e-4;
    tc.epochs = 10;
    tc.min_df = 2;
    tc.seed = 777;
    emotion::EmotionTrainReport rep1, rep2;
    auto clf1 = emotion::train_emotion_classifier(corpus, lex, emoji, tc, &rep1);
    auto clf2 = emotion::train_emotion_classifier(corpus, lex, emoji, tc, &rep2);
    bool identical = clf1.to_json() == clf2.to_json();
    bool pass = rep1.micro_precision == 1.0 && identical;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "emotion heldout precision %.4f on %zu examples; repeated runs %s",
                  rep1.micro_precision, rep1.heldout_count,
                  identical ? "bit-identical" : "DIVERGED");
    report(7, pass, buf, seconds_since(t0));

    // optional external benchmark, informative only
    if (const char* semeval = std::getenv("PSYPROF_SEMEVAL")) {
        try {
            auto external = emotion::load_emotion_corpus(semeval);
            emotion::EmotionTrainReport rep;
            emotion::train_emotion_classifier(external, lex, emoji, tc, &rep);
            std::printf("[info]  7. external corpus precision %.4f (target 0.80, not gating)\n",
                        rep.micro_precision);
        } catch (const std::exception& e) {
            std::printf("[info]  7. external corpus skipped: %s\n", e.what());
        }
    } else {
        std::printf("[info]  7. external corpus check skipped (PSYPROF_SEMEVAL not set)\n");
    }
    return pass;
}

// ---------------------------------------------------------------- criterion 8

bool criterion_correlations(const config::PipelineConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();

    // (a) analytic p-values against a 10k permutation test
    int close = 0;
    const int samples = 20;
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        std::mt19937_64 rng(9100 + static_cast<std::uint64_t>(s));
        std::size_t n = 10 + static_cast<std::size_t>(s % 11);
        double alpha = (s % 4 == 0) ? 0.0 : 0.25 + 0.05 * static_cast<double>(s);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = unit(rng);
            y[i] = alpha * x[i] + (1.0 - alpha) * unit(rng);
        }
        double obs = std::fabs(plain_r(x, y));
        int hits = 0;
        const int perms = 10000;
        std::vector<double> yp = y;
        for (int t = 0; t < perms; ++t) {
            for (std::size_t i = n - 1; i > 0; --i)
                std::swap(yp[i], yp[rng() % (i + 1)]);
            if (std::fabs(plain_r(x, yp)) >= obs - 1e-12) ++hits;
        }
        double p_perm = static_cast<double>(hits) / static_cast<double>(perms);
        double diff = std::fabs(analysis::pearson(x, y).p - p_perm);
        worst = std::max(worst, diff);
        if (diff <= 0.02) ++close;
    }

    // (b) every planted generator signal tops its trait's report column
    pipeline::run_analyze(cfg);
    json spec = json::parse(slurp(data_path("synth_spec.json")));
    auto stem_set = [](const json& words) {
        std::set<std::string> out;
        for (const auto& w : words) out.insert(textprep::stem(w.get<std::string>()));
        return out;
    };
    auto worry = stem_set(spec["banks"]["words"]["worry_pairs"]);
    auto plan = stem_set(spec["banks"]["words"]["plan_words"]);
    auto kind = stem_set(spec["banks"]["words"]["kind_words"]);
    auto sad = stem_set(spec["banks"]["emotion_words"]["sadness"]);

    std::map<std::string, std::pair<double, std::string>> best; // trait -> (|rho|, key)
    std::ifstream in(fs::path(cfg.paths.out_dir) / "feature_trait.csv");
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key, trait, rho_s, p_s;
        std::getline(ls, key, ',');
        std::getline(ls, trait, ',');
        std::getline(ls, rho_s, ',');
        std::getline(ls, p_s, ',');
        double score = std::fabs(std::strtod(rho_s.c_str(), nullptr));
        auto& slot = best[trait];
        if (score > slot.first) slot = {score, key};
    }

    auto from_bank = [](const std::string& key, const std::set<std::string>& stems) {
        auto colon = key.find(':');
        std::string fam = key.substr(0, colon), name = key.substr(colon + 1);
        if (fam != "tfidf" && fam != "ngram") return false;
        std::istringstream parts(name);
        std::string part;
        int seen = 0;
        while (std::getline(parts, part, '_')) {
            if (!stems.count(part)) return false;
            ++seen;
        }
        return seen > 0;
    };
    struct Check {
        const char* trait;
        bool ok;
    };
    const auto& [anx_r, anx_key] = best["anxiety"];
    const auto& [opn_r, opn_key] = best["openness"];
    const auto& [con_r, con_key] = best["conscientiousness"];
    const auto& [ext_r, ext_key] = best["extraversion"];
    const auto& [agr_r, agr_key] = best["agreeableness"];
    const auto& [neu_r, neu_key] = best["neuroticism"];
    (void)anx_r;
    (void)opn_r;
    (void)con_r;
    (void)ext_r;
    (void)agr_r;
    (void)neu_r;
    // avoidance has no signal of its own in the generator (it is a noisy copy
    // of anxiety), so it carries no planted-winner expectation
    const std::array<Check, 6> checks = {{
        {"anxiety", from_bank(anx_key, worry)},
        {"openness", opn_key.rfind("pos:", 0) == 0},
        {"conscientiousness", from_bank(con_key, plan)},
        {"extraversion", ext_key.rfind("behavioral:", 0) == 0 &&
                             ext_key.find("follow") != std::string::npos},
        {"agreeableness", from_bank(agr_key, kind)},
        {"neuroticism", neu_key == "emotion:sadness" || from_bank(neu_key, sad)},
    }};
    int ranked = 0;
    for (const auto& c : checks) {
        if (c.ok) ++ranked;
        else std::printf("[info]  8. %s topped by unexpected column %s\n", c.trait,
                         best[c.trait].second.c_str());
    }

    bool pass = close == samples && ranked == 6;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "p-values within 0.02 of permutation test on %d/%d samples (worst %.4f); "
                  "planted signals rank first for %d/6 traits",
                  close, samples, worst, ranked);
    report(8, pass, buf, seconds_since(t0));
    return pass;
}

// ---------------------------------------------------------------- criterion 9

bool criterion_embedding() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(424242);
    const std::size_t n = 600;
    ml::Matrix X(n, std::vector<double>(static_cast<std::size_t>(kTraitCount)));
    std::vector<double> label(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool high = (i % 2) == 1;
        label[i] = high ? 1.0 : 0.0;
        for (auto& v : X[i]) v = (high ? 0.65 : 0.05) + 0.3 * unit(rng);
    }
    analysis::TsneParams params;
    params.perplexity = 30.0;
    params.iterations = 500;
    params.seed = 7;
    params.n_threads = 1;
    auto emb = analysis::tsne(X, params);

    // standardized 2-D coordinates, then a full-batch logistic probe
    std::array<double, 2> mean{}, sd{};
    for (const auto& pt : emb.points)
        for (int d = 0; d < 2; ++d) mean[static_cast<std::size_t>(d)] += pt[static_cast<std::size_t>(d)];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& pt : emb.points)
        for (std::size_t d = 0; d < 2; ++d) sd[d] += (pt[d] - mean[d]) * (pt[d] - mean[d]);
    for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n)) + 1e-12;

    double w0 = 0.0, w1 = 0.0, b = 0.0;
    for (int epoch = 0; epoch < 500; ++epoch) {
        double g0 = 0.0, g1 = 0.0, gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z0 = (emb.points[i][0] - mean[0]) / sd[0];
            double z1 = (emb.points[i][1] - mean[1]) / sd[1];
            double pr = 1.0 / (1.0 + std::exp(-(w0 * z0 + w1 * z1 + b)));
            double err = pr - label[i];
            g0 += err * z0;
            g1 += err * z1;
            gb += err;
        }
        w0 -= 0.5 * g0 / static_cast<double>(n);
        w1 -= 0.5 * g1 / static_cast<double>(n);
        b -= 0.5 * gb / static_cast<double>(n);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double z0 = (emb.points[i][0] - mean[0]) / sd[0];
        double z1 = (emb.points[i][1] - mean[1]) / sd[1];
        double pr = 1.0 / (1.0 + std::exp(-(w0 * z0 + w1 * z1 + b)));
        if ((pr >= 0.5) == (label[i] == 1.0)) ++correct;
    }
    double acc = static_cast<double>(correct) / static_cast<double>(n);
    double secs = seconds_since(t0);
    bool pass = acc >= 0.99 && secs < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "linear probe on the 2-D embedding separates the groups at %.2f%% (kl %.3f)",
                  100.0 * acc, emb.final_kl);
    report(9, pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------- criterion 10

bool criterion_determinism(const fs::path& dir_a, const fs::path& dir_b) {
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = bundled_config(dir_b);
    run_chain(cfg);
    pipeline::run_evaluate(cfg);
    const std::array<const char*, 9> artifacts = {
        "users.jsonl",  "users_clean.jsonl",  "removals.csv",
        "emotion.json", "emotion_report.csv", "features.csv",
        "pipeline.json", "model.json",        "evaluate.csv",
    };
    int same = 0;
    for (const char* name : artifacts) {
        if (slurp(dir_a / name) == slurp(dir_b / name)) ++same;
        else std::printf("[info] 10. %s differs between runs\n", name);
    }
    bool pass = same == static_cast<int>(artifacts.size());
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "repeated pipeline run byte-identical on %d/%zu artifacts at 4 threads", same,
                  artifacts.size());
    report(10, pass, buf, seconds_since(t0));
    return pass;
}

} // namespace

int main() {
    fs::path base = fs::absolute("acceptance_out");
    fs::remove_all(base);
    fs::path dir_a = base / "run_a", dir_b = base / "run_b";
    fs::create_directories(dir_a);
    fs::create_directories(dir_b);

    int failures = 0;
    auto gate = [&](bool ok) { failures += ok ? 0 : 1; };

    gate(criterion_metrics());
    gate(criterion_baseline());
    gate(criterion_tree_split());
    gate(criterion_selection());

    auto cfg_a = bundled_config(dir_a);
    pipeline::EvaluateSummary eval{};
    gate(criterion_chain_benefit(cfg_a, &eval));
    gate(criterion_learning_curve(cfg_a));
    gate(criterion_emotion());
    gate(criterion_correlations(cfg_a));
    gate(criterion_embedding());
    gate(criterion_determinism(dir_a, dir_b));

    std::printf("acceptance: %d/10 criteria passed\n", 10 - failures);
    return failures;
}
