#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "psyprof/config.hpp"
#include "psyprof/errors.hpp"

using namespace psyprof;
using config::PipelineConfig;

namespace {

const char* kFullConfig = R"(# pipeline settings
[paths]
corpus = "data/users.jsonl"
stopwords = "data/stopwords.txt"
emotion_lexicon = "data/lexicon.tsv"
emoji_map = "data/emoji.tsv"
tagger_corpus = "data/pos.tsv"
emotion_corpus = "data/emotions.tsv"
questionnaire_key = "data/key.csv"
synth_spec = "data/spec.json"
out_dir = "results"

[spam]
hashtag_threshold = 4
repetition_count = 2
jaccard_threshold = 0.75
ghost_min_followers = 3

[features]
min_df = 3
top_k = 50

[emotion]
lambda = 0.001   # heavier regularization
epochs = 5
train_fraction = 0.7
min_df = 1

[tagger]
epochs = 3
heldout_fraction = 0.25

[model]
n_trees = 20
max_depth = 8
min_samples_leaf = 2
max_features = 0.5
n_chains = 4
teacher_forcing = false
n_threads = 2

[split]
protocol = "holdout"
k = 3
test_fraction = 0.3

[routes]
anxiety = ["tfidf", "emotion"]
neuroticism = ["behavioral"]

[seeds]
master = 12345

[embed]
method = "pca"
perplexity = 15.0
iterations = 400
group_trait = "openness"
group_threshold = 0.6

[curve]
fractions = [0.5, 1.0]
)";

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("cfg_tmp_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("defaults cover every knob") {
    const PipelineConfig c = PipelineConfig::from_string("");
    CHECK(c.paths.out_dir == "out");
    CHECK(c.spam.hashtag_threshold == 5);
    CHECK(c.spam.repetition_count == 3);
    CHECK(c.spam.jaccard_threshold == doctest::Approx(0.8));
    CHECK(c.spam.ghost_min_followers == 2);
    CHECK(c.features.min_df == 2);
    CHECK(c.features.top_k == 100);
    CHECK(c.emotion.lambda == doctest::Approx(1e-4));
    CHECK(c.emotion.epochs == 10);
    CHECK(c.tagger.epochs == 10);
    CHECK(c.model.n_trees == 100);
    CHECK(c.model.max_depth == -1);
    CHECK(c.model.min_samples_leaf == 5);
    CHECK(c.model.max_features == doctest::Approx(1.0 / 3.0));
    CHECK(c.model.n_chains == 10);
    CHECK(c.model.teacher_forcing);
    CHECK(c.model.n_threads == 0);
    CHECK(c.split.protocol == "cv");
    CHECK(c.split.k == 5);
    CHECK(c.split.test_fraction == doctest::Approx(0.2));
    CHECK(c.master_seed == 0);
    CHECK(c.embed.method == "tsne");
    CHECK(c.embed.perplexity == doctest::Approx(30.0));
    CHECK(c.embed.iterations == 1000);
    CHECK(c.embed.group_trait == "anxiety");
    CHECK(c.curve.fractions == std::vector<double>{0.4, 0.6, 0.8, 1.0});
}

TEST_CASE("default routes follow the per-trait table") {
    const PipelineConfig c = PipelineConfig::from_string("");
    CHECK(c.routes[static_cast<int>(Trait::anxiety)] == std::vector<std::string>{"ngram"});
    CHECK(c.routes[static_cast<int>(Trait::avoidance)] == std::vector<std::string>{"pos"});
    CHECK(c.routes[static_cast<int>(Trait::openness)] == std::vector<std::string>{"pos"});
    CHECK(c.routes[static_cast<int>(Trait::agreeableness)] == std::vector<std::string>{"tfidf"});
    CHECK(c.routes[static_cast<int>(Trait::neuroticism)] == std::vector<std::string>{"emotion"});
    const std::vector<std::string> all = {"behavioral", "tfidf", "ngram", "pos", "emotion"};
    CHECK(c.routes[static_cast<int>(Trait::conscientiousness)] == all);
    CHECK(c.routes[static_cast<int>(Trait::extraversion)] == all);
}

TEST_CASE("a full config file overrides everything it names") {
    const PipelineConfig c = PipelineConfig::from_string(kFullConfig);
    CHECK(c.paths.corpus == "data/users.jsonl");
    CHECK(c.paths.out_dir == "results");
    CHECK(c.spam.hashtag_threshold == 4);
    CHECK(c.spam.repetition_count == 2);
    CHECK(c.spam.jaccard_threshold == doctest::Approx(0.75));
    CHECK(c.spam.ghost_min_followers == 3);
    CHECK(c.features.min_df == 3);
    CHECK(c.features.top_k == 50);
    CHECK(c.emotion.lambda == doctest::Approx(0.001));
    CHECK(c.emotion.epochs == 5);
    CHECK(c.emotion.train_fraction == doctest::Approx(0.7));
    CHECK(c.emotion.min_df == 1);
    CHECK(c.tagger.epochs == 3);
    CHECK(c.tagger.heldout_fraction == doctest::Approx(0.25));
    CHECK(c.model.n_trees == 20);
    CHECK(c.model.max_depth == 8);
    CHECK(c.model.min_samples_leaf == 2);
    CHECK(c.model.max_features == doctest::Approx(0.5));
    CHECK(c.model.n_chains == 4);
    CHECK_FALSE(c.model.teacher_forcing);
    CHECK(c.model.n_threads == 2);
    CHECK(c.split.protocol == "holdout");
    CHECK(c.split.k == 3);
    CHECK(c.split.test_fraction == doctest::Approx(0.3));
    CHECK(c.master_seed == 12345);
    CHECK(c.embed.method == "pca");
    CHECK(c.embed.group_trait == "openness");
    CHECK(c.curve.fractions == std::vector<double>{0.5, 1.0});
}

TEST_CASE("route overrides are per trait and leave the rest alone") {
    const PipelineConfig c = PipelineConfig::from_string(kFullConfig);
    const std::vector<std::string> anx = {"tfidf", "emotion"};
    CHECK(c.routes[static_cast<int>(Trait::anxiety)] == anx);
    CHECK(c.routes[static_cast<int>(Trait::neuroticism)] ==
          std::vector<std::string>{"behavioral"});
    CHECK(c.routes[static_cast<int>(Trait::avoidance)] == std::vector<std::string>{"pos"});
}

TEST_CASE("unknown sections and keys are rejected") {
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[nonsense]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nn_tress = 5\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[routes]\nanixety = [\"pos\"]\n"),
                    ConfigError);
}

TEST_CASE("syntax errors name the offending line") {
    try {
        (void)PipelineConfig::from_string("[model]\nn_trees 5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS((void)PipelineConfig::from_string("x = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model\nn_trees = 5\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nn_trees = \n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[paths]\ncorpus = \"a\nb\"\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[curve]\nfractions = [0.5\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nn_trees = 5\nn_trees = 6\n"),
                    ConfigError);
    CHECK_THROWS_AS(
        (void)PipelineConfig::from_string("[model]\nn_trees = 5\n[model]\nmax_depth = 2\n"),
        ConfigError);
}

TEST_CASE("type mismatches are rejected with context") {
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nn_trees = \"many\"\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nn_trees = 2.5\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nteacher_forcing = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[paths]\nout_dir = 7\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[seeds]\nmaster = -4\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[curve]\nfractions = [\"a\"]\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[routes]\nanxiety = \"pos\"\n"),
                    ConfigError);
}

TEST_CASE("semantic validation catches out-of-range knobs") {
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nn_trees = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nmax_depth = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[model]\nmax_features = 1.5\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[split]\ntest_fraction = 1.0\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[split]\nprotocol = \"loocv\"\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[split]\nk = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[routes]\nanxiety = [\"liwc\"]\n"),
                    ConfigError);
    CHECK_THROWS_AS(
        (void)PipelineConfig::from_string("[routes]\nanxiety = [\"pos\", \"pos\"]\n"),
        ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[embed]\nmethod = \"umap\"\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[embed]\ngroup_trait = \"charisma\"\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[curve]\nfractions = [0.4, 1.2]\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[emotion]\nlambda = 0.0\n"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_string("[tagger]\nheldout_fraction = 1.0\n"),
                    ConfigError);
}

TEST_CASE("strings support escapes and inline comments stay out of them") {
    const PipelineConfig c = PipelineConfig::from_string(
        "[paths]\ncorpus = \"dir with space/users #1.jsonl\" # trailing note\n");
    CHECK(c.paths.corpus == "dir with space/users #1.jsonl");
    const PipelineConfig e =
        PipelineConfig::from_string("[paths]\nout_dir = \"a\\\\b\\\"c\\\"\"\n");
    CHECK(e.paths.out_dir == "a\\b\"c\"");
}

TEST_CASE("load reads a file and missing files are a distinct error") {
    const TempFile f("ok.toml", "[seeds]\nmaster = 99\n");
    const PipelineConfig c = PipelineConfig::load(f.path);
    CHECK(c.master_seed == 99);
    CHECK_THROWS_AS((void)PipelineConfig::load("no_such_config.toml"), MissingInputError);
}

TEST_CASE("seeds accept the full 64-bit range") {
    const PipelineConfig c =
        PipelineConfig::from_string("[seeds]\nmaster = 18446744073709551615\n");
    CHECK(c.master_seed == 18446744073709551615ULL);
}
