#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "psyprof/emotion.hpp"
#include "psyprof/errors.hpp"
#include "psyprof/mathutil.hpp"
#include "psyprof/rng.hpp"
#include "psyprof/textprep.hpp"

using namespace psyprof;
using namespace psyprof::emotion;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

double strength_of(const AffectLexicon& lex, const std::string& word, Emotion e) {
    const auto it = lex.emotions.find(textprep::stem(word));
    if (it == lex.emotions.end()) return 0.0;
    return it->second[static_cast<int>(e)];
}

} // namespace

TEST_CASE("lexicon parses emotion, sentiment and synset rows") {
    TempFile f("test_lex_tmp.tsv",
               "# affect sample\n"
               "grief\tsadness\t0.8\n"
               "grief\tsadness\t0.5\n"
               "cheer\tjoy\t0.6\n"
               "good\t0.7\t0\n"
               "bad\t0\t0.6\n"
               "syn.01\tsad,sorrowful\n"
               "yawn\tboredom\t0.9\n");
    std::vector<std::string> diags;
    const auto lex = load_lexicon(f.path, &diags);
    CHECK(strength_of(lex, "grief", Emotion::sadness) == 0.8); // max of duplicates
    CHECK(strength_of(lex, "cheer", Emotion::joy) == 0.6);
    CHECK(lex.sentiment.at("good") == std::pair<double, double>{0.7, 0.0});
    CHECK(lex.sentiment.at("bad") == std::pair<double, double>{0.0, 0.6});
    REQUIRE(lex.synsets.count("syn.01") == 1);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("boredom") != std::string::npos);
    CHECK(lex.emotions.count("yawn") == 0);
}

TEST_CASE("lexicon rejects out-of-range strengths") {
    TempFile f("test_lex_bad_tmp.tsv",
               "calm\tjoy\t0\n"
               "tense\tfear\t1.5\n"
               "fine\tjoy\t1.0\n");
    std::vector<std::string> diags;
    const auto lex = load_lexicon(f.path, &diags);
    CHECK(diags.size() == 2);
    CHECK(lex.emotions.size() == 1);
    CHECK(strength_of(lex, "fine", Emotion::joy) == 1.0);
}

TEST_CASE("lexicon keys are stemmed so pipeline tokens match") {
    TempFile f("test_lex_stem_tmp.tsv", "joy\tjoy\t0.9\n");
    const auto lex = load_lexicon(f.path);
    // the pipeline turns both "joy" and "joyful" into the stem "joi"
    CHECK(lex.emotions.count("joi") == 1);
    const auto freq = text_emotion_freq({textprep::prepare("so joyful today")}, lex);
    CHECK(freq[static_cast<int>(Emotion::joy)] > 0.0);
}

TEST_CASE("synset expansion spreads labels and is idempotent") {
    TempFile f("test_lex_syn_tmp.tsv",
               "sad\tsadness\t0.7\n"
               "syn.01\tsad,sorrowful\n"
               "syn.02\tcalm,quiet\n");
    const auto lex = load_lexicon(f.path);
    CHECK_FALSE(lex.has_emotion_entry(textprep::stem("sorrowful")));
    const auto once = expand_lexicon(lex);
    CHECK(strength_of(once, "sorrowful", Emotion::sadness) == 0.7);
    CHECK(strength_of(once, "sad", Emotion::sadness) == 0.7); // never weakened
    CHECK_FALSE(once.has_emotion_entry("calm")); // unlabeled group stays unlabeled
    const auto twice = expand_lexicon(once);
    CHECK(twice.emotions == once.emotions);
    CHECK(once.emotions.size() >= lex.emotions.size());
}

TEST_CASE("expansion without synsets is the identity") {
    TempFile f("test_lex_nosyn_tmp.tsv", "grief\tsadness\t0.8\n");
    const auto lex = load_lexicon(f.path);
    const auto expanded = expand_lexicon(lex);
    CHECK(expanded.emotions == lex.emotions);
}

TEST_CASE("text emotion frequencies divide by total tokens") {
    TempFile f("test_lex_freq_tmp.tsv", "grief\tsadness\t0.8\n");
    const auto lex = load_lexicon(f.path);
    const auto freq = text_emotion_freq({{"grief", "cat"}}, lex);
    CHECK(freq[static_cast<int>(Emotion::sadness)] == doctest::Approx(0.4).epsilon(1e-12));
    for (int e = 0; e < kEmotionCount; ++e) {
        if (e != static_cast<int>(Emotion::sadness)) CHECK(freq[e] == 0.0);
    }

    const auto none = text_emotion_freq({{"cat", "dog"}}, lex);
    for (const double v : none) CHECK(v == 0.0);

    // doubling the corpus leaves the ratios unchanged
    const auto doubled = text_emotion_freq({{"grief", "cat"}, {"grief", "cat"}}, lex);
    CHECK(doubled == freq);

    const auto empty = text_emotion_freq({}, lex);
    for (const double v : empty) CHECK(v == 0.0);
}

TEST_CASE("emoji frequencies count mapped emojis only") {
    TempFile f("test_emoji_tmp.tsv",
               "\xF0\x9F\x98\x80\tjoy\n"
               "\xF0\x9F\x98\xA2\tsadness\n"
               "\xF0\x9F\x98\x90\tboredom\n");
    std::vector<std::string> diags;
    const auto map = load_emoji_map(f.path, &diags);
    CHECK(map.entries.size() == 2);
    CHECK(diags.size() == 1);

    const auto freq = emoji_emotion_freq({"\xF0\x9F\x98\x80\xF0\x9F\x98\x80\xF0\x9F\x98\xA2"}, map);
    CHECK(freq[static_cast<int>(Emotion::joy)] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(freq[static_cast<int>(Emotion::sadness)] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto none = emoji_emotion_freq({"plain words only"}, map);
    for (const double v : none) CHECK(v == 0.0);

    // unmapped emoji appears in neither numerator nor denominator
    const auto mixed = emoji_emotion_freq({"\xF0\x9F\x98\x80 \xF0\x9F\x99\x83"}, map);
    CHECK(mixed[static_cast<int>(Emotion::joy)] == 1.0);
}

TEST_CASE("emoji matching prefers the longest sequence") {
    EmojiMap map;
    map.entries["ab"] = Emotion::joy;
    map.entries["abc"] = Emotion::sadness;
    const auto freq = emoji_emotion_freq({"abcab"}, map);
    CHECK(freq[static_cast<int>(Emotion::sadness)] == 0.5);
    CHECK(freq[static_cast<int>(Emotion::joy)] == 0.5);
}

TEST_CASE("emoji and text frequencies ignore tweet order") {
    TempFile f("test_lex_order_tmp.tsv", "grief\tsadness\t0.8\ncheer\tjoy\t0.5\n");
    const auto lex = load_lexicon(f.path);
    EmojiMap map;
    map.entries["\xF0\x9F\x98\x80"] = Emotion::joy;
    const std::vector<std::string> forward = {"a \xF0\x9F\x98\x80", "b"};
    const std::vector<std::string> backward = {"b", "a \xF0\x9F\x98\x80"};
    CHECK(emoji_emotion_freq(forward, map) == emoji_emotion_freq(backward, map));
    CHECK(text_emotion_freq({{"grief"}, {"cheer"}}, lex) ==
          text_emotion_freq({{"cheer"}, {"grief"}}, lex));
}

TEST_CASE("sentiment sums per tweet then averages per user") {
    TempFile f("test_lex_senti_tmp.tsv",
               "good\t0.7\t0\n"
               "bad\t0\t0.6\n");
    const auto lex = load_lexicon(f.path);
    const auto one = sentiment_scores({{"good", "good", "bad"}}, lex);
    CHECK(one.first == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(one.second == doctest::Approx(0.6).epsilon(1e-12));

    const auto two = sentiment_scores({{"good", "good"}, {"cat"}}, lex); // sums 1.4 and 0
    CHECK(two.first == doctest::Approx(0.7).epsilon(1e-12));

    CHECK(sentiment_scores({}, lex) == std::pair<double, double>{0.0, 0.0});
    AffectLexicon empty;
    CHECK(sentiment_scores({{"good"}}, empty) == std::pair<double, double>{0.0, 0.0});
}

TEST_CASE("emotion corpus parsing validates the flag block") {
    TempFile f("test_ecorpus_tmp.tsv",
               "# id text labels\n"
               "1\tso happy today\t1,0,0,0,0,0\n"
               "2\tawful loss\t0,1,0,0,0,0\n");
    const auto rows = load_emotion_corpus(f.path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == "1");
    CHECK(rows[0].labels == std::array<int, 6>{1, 0, 0, 0, 0, 0});
    CHECK(rows[1].labels == std::array<int, 6>{0, 1, 0, 0, 0, 0});

    TempFile bad("test_ecorpus_bad_tmp.tsv", "1\ttext\t1,0,0\n");
    CHECK_THROWS_AS((void)load_emotion_corpus(bad.path), DataError);
    TempFile bad2("test_ecorpus_bad2_tmp.tsv", "1\ttext\t1,0,0,0,0,2\n");
    CHECK_THROWS_AS((void)load_emotion_corpus(bad2.path), DataError);
    CHECK_THROWS_AS((void)load_emotion_corpus("no_such_file.tsv"), MissingInputError);
}

namespace {

// two linearly separable classes: joy texts and sadness texts built from
// disjoint word pools plus shared filler
std::vector<EmotionExample> separable_corpus(std::size_t n, std::uint64_t seed) {
    const std::vector<std::string> joy_pool = {"delight", "sunshine", "wonderful", "cheer",
                                               "bliss"};
    const std::vector<std::string> sad_pool = {"grief", "sorrow", "mourning", "tears", "gloom"};
    const std::vector<std::string> filler = {"today", "weather", "coffee", "train", "window"};
    Rng rng(seed);
    std::vector<EmotionExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool joyful = (i % 2 == 0);
        const auto& pool = joyful ? joy_pool : sad_pool;
        std::string text;
        for (int k = 0; k < 3; ++k) {
            text += pool[rng.below(pool.size())] + " ";
        }
        for (int k = 0; k < 2; ++k) {
            text += filler[rng.below(filler.size())] + " ";
        }
        EmotionExample ex;
        ex.id = std::to_string(i);
        ex.text = text;
        ex.labels[static_cast<int>(joyful ? Emotion::joy : Emotion::sadness)] = 1;
        out.push_back(std::move(ex));
    }
    return out;
}

AffectLexicon tiny_lexicon() {
    TempFile f("test_lex_train_tmp.tsv",
               "cheer\tjoy\t0.8\n"
               "bliss\tjoy\t0.9\n"
               "grief\tsadness\t0.9\n"
               "sorrow\tsadness\t0.8\n"
               "wonderful\t0.8\t0\n"
               "gloom\t0\t0.7\n");
    return load_lexicon(f.path);
}

} // namespace

TEST_CASE("separable corpus trains to perfect held-out precision") {
    const auto corpus = separable_corpus(150, 7);
    const auto lex = tiny_lexicon();
    EmojiMap emoji;
    EmotionTrainConfig cfg;
    cfg.seed = 11;
    cfg.min_df = 1;
    EmotionTrainReport report;
    const auto clf = train_emotion_classifier(corpus, lex, emoji, cfg, &report);

    CHECK(report.heldout_count == 30);
    CHECK(report.train_count == 120);
    CHECK(report.micro_precision == 1.0);

    // four emotions have no examples at all
    int constant = 0;
    for (const auto& h : clf.heads) constant += h.constant_negative ? 1 : 0;
    CHECK(constant == 4);
    CHECK(report.warnings.size() >= 4);

    // the averaged iterate's objective settles monotonically
    for (int e = 0; e < kEmotionCount; ++e) {
        const auto& obj = report.epoch_objectives[e];
        if (obj.empty()) continue; // constant-negative heads never train
        REQUIRE(obj.size() == 10);
        for (std::size_t k = 1; k < obj.size(); ++k) {
            CHECK(obj[k] <= obj[k - 1] + 1e-9);
        }
    }
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    const auto corpus = separable_corpus(60, 3);
    const auto lex = tiny_lexicon();
    EmojiMap emoji;
    EmotionTrainConfig cfg;
    cfg.seed = 5;
    cfg.min_df = 1;
    const auto a = train_emotion_classifier(corpus, lex, emoji, cfg);
    const auto b = train_emotion_classifier(corpus, lex, emoji, cfg);
    CHECK(a.to_json() == b.to_json());

    cfg.seed = 6;
    const auto c = train_emotion_classifier(corpus, lex, emoji, cfg);
    CHECK(a.to_json() != c.to_json());
}

TEST_CASE("training rejects bad inputs") {
    const auto lex = tiny_lexicon();
    EmojiMap emoji;
    EmotionTrainConfig cfg;
    CHECK_THROWS_AS((void)train_emotion_classifier({}, lex, emoji, cfg), DataError);
    const auto corpus = separable_corpus(10, 1);
    cfg.epochs = 0;
    CHECK_THROWS_AS((void)train_emotion_classifier(corpus, lex, emoji, cfg), ConfigError);
    cfg.epochs = 10;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS((void)train_emotion_classifier(corpus, lex, emoji, cfg), ConfigError);
    cfg.lambda = 1e-4;
    cfg.train_fraction = 1.5;
    CHECK_THROWS_AS((void)train_emotion_classifier(corpus, lex, emoji, cfg), ConfigError);
}

TEST_CASE("prediction squashes margins through the logistic") {
    EmotionClassifier clf;
    // no vocabulary: layout is the 14 fixed attributes
    clf.bounds.assign(14, {0.0, 1.0});
    for (auto& h : clf.heads) h.weights.assign(14, 0.0);
    clf.heads[0].bias = 0.0;   // margin 0 -> 0.5
    clf.heads[1].bias = 30.0;  // margin huge -> ~1
    clf.heads[2].bias = -30.0; // margin very negative -> ~0
    clf.heads[3].bias = 1.0;
    clf.heads[4].constant_negative = true;
    clf.heads[5].bias = -1.0;

    const std::vector<double> zeros(14, 0.0);
    const auto vec = predict_emotion_vector(zeros, clf);
    CHECK(vec.values[0] == 0.5);
    CHECK(vec.values[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(vec.values[2] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(vec.values[3] == doctest::Approx(logistic(1.0)).epsilon(1e-12));
    CHECK(vec.values[4] == 0.0);
    CHECK(vec.values[5] == doctest::Approx(logistic(-1.0)).epsilon(1e-12));
    for (const double v : vec.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    const std::vector<double> wrong(15, 0.0);
    CHECK_THROWS_AS((void)predict_emotion_vector(wrong, clf), LayoutError);
}

TEST_CASE("trained classifier separates fresh texts of both classes") {
    const auto corpus = separable_corpus(150, 7);
    const auto lex = tiny_lexicon();
    EmojiMap emoji;
    EmotionTrainConfig cfg;
    cfg.seed = 11;
    cfg.min_df = 1;
    const auto clf = train_emotion_classifier(corpus, lex, emoji, cfg);

    const auto joy_attrs = emotion_attributes({"bliss cheer delight today"}, lex, emoji, clf.vocab);
    const auto sad_attrs = emotion_attributes({"grief sorrow gloom today"}, lex, emoji, clf.vocab);
    const auto joy_vec = predict_emotion_vector(joy_attrs, clf);
    const auto sad_vec = predict_emotion_vector(sad_attrs, clf);
    CHECK(joy_vec.get(Emotion::joy) > 0.5);
    CHECK(joy_vec.get(Emotion::sadness) < 0.5);
    CHECK(sad_vec.get(Emotion::sadness) > 0.5);
    CHECK(sad_vec.get(Emotion::joy) < 0.5);
}

TEST_CASE("classifier json round trip") {
    const auto corpus = separable_corpus(60, 3);
    const auto lex = tiny_lexicon();
    EmojiMap emoji;
    EmotionTrainConfig cfg;
    cfg.seed = 5;
    cfg.min_df = 1;
    const auto clf = train_emotion_classifier(corpus, lex, emoji, cfg);
    const std::string path = "test_emotion_clf_tmp.json";
    clf.save(path);
    const auto back = EmotionClassifier::load(path);
    CHECK(back.to_json() == clf.to_json());
    std::remove(path.c_str());

    CHECK_THROWS_AS((void)EmotionClassifier::from_json("{}"), DataError);
    CHECK_THROWS_AS((void)EmotionClassifier::from_json("not json"), DataError);
    CHECK_THROWS_AS((void)EmotionClassifier::load("no_such.json"), MissingInputError);
}
