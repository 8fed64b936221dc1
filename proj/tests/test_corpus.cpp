#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "psyprof/corpus.hpp"
#include "psyprof/errors.hpp"
#include "psyprof/rng.hpp"

using namespace psyprof;
using namespace psyprof::corpus;

namespace {

QuestionnaireKey demo_key() {
    QuestionnaireKey key;
    key.items.push_back({"bf_1", Trait::openness, false, 5});
    key.items.push_back({"bf_2", Trait::openness, false, 5});
    key.items.push_back({"bf_3", Trait::openness, true, 5});
    key.items.push_back({"bf_4", Trait::openness, true, 5});
    key.items.push_back({"ao_1", Trait::anxiety, true, 7});
    key.items.push_back({"ao_2", Trait::avoidance, false, 7});
    key.items.push_back({"bf_5", Trait::conscientiousness, false, 5});
    key.items.push_back({"bf_6", Trait::extraversion, false, 5});
    key.items.push_back({"bf_7", Trait::agreeableness, false, 5});
    key.items.push_back({"bf_8", Trait::neuroticism, false, 5});
    return key;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("questionnaire scoring averages with reversal") {
    const auto key = demo_key();
    const auto scores = score_questionnaire(
        {{"bf_1", 4}, {"bf_2", 4}, {"bf_3", 2}, {"bf_4", 1}}, key);
    CHECK(scores.at(Trait::openness) == doctest::Approx(4.25).epsilon(1e-15));

    const auto low = score_questionnaire({{"bf_1", 1}, {"bf_2", 1}}, key);
    CHECK(low.at(Trait::openness) == doctest::Approx(1.0).epsilon(1e-15));

    const auto rev7 = score_questionnaire({{"ao_1", 7}}, key);
    CHECK(rev7.at(Trait::anxiety) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("questionnaire scoring rejects bad input") {
    const auto key = demo_key();
    CHECK_THROWS_AS(score_questionnaire({{"bf_1", 6}}, key), DataError);
    CHECK_THROWS_AS(score_questionnaire({{"bf_1", 0}}, key), DataError);
    CHECK_THROWS_AS(score_questionnaire({{"nope", 3}}, key), DataError);
    CHECK_THROWS_AS(score_questionnaire({{"ao_1", 8}}, key), DataError);
}

TEST_CASE("questionnaire scoring is monotone in each response") {
    const auto key = demo_key();
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, long long> resp;
        for (const auto& item : key.items) {
            resp[item.item_id] = rng.range_int(1, item.scale_max);
        }
        const auto base = score_questionnaire(resp, key);
        for (const auto& item : key.items) {
            if (resp[item.item_id] == item.scale_max) continue;
            auto bumped = resp;
            bumped[item.item_id] += 1;
            const auto after = score_questionnaire(bumped, key);
            if (item.reversed) {
                CHECK(after.at(item.trait) <= base.at(item.trait));
            } else {
                CHECK(after.at(item.trait) >= base.at(item.trait));
            }
        }
    }
}

TEST_CASE("trait normalization maps each scale onto the unit interval") {
    std::map<Trait, double> raw = {
        {Trait::anxiety, 1.0},       {Trait::avoidance, 7.0},
        {Trait::openness, 5.0},      {Trait::conscientiousness, 3.69},
        {Trait::extraversion, 3.0},  {Trait::agreeableness, 1.0},
        {Trait::neuroticism, 5.0},
    };
    const auto profile = normalize_traits(raw);
    CHECK(profile.get(Trait::anxiety) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(profile.get(Trait::avoidance) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(profile.get(Trait::openness) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(profile.get(Trait::conscientiousness) == doctest::Approx(0.6725).epsilon(1e-12));
    CHECK(profile.get(Trait::extraversion) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(profile.in_unit_range());

    raw[Trait::anxiety] = 7.5;
    CHECK_THROWS_AS(normalize_traits(raw), DataError);
    raw[Trait::anxiety] = 3.0;
    raw.erase(Trait::neuroticism);
    CHECK_THROWS_AS(normalize_traits(raw), DataError);
}

TEST_CASE("iso8601 parsing") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("1970-01-02") == 86400);
    CHECK(parse_iso8601("2020-03-01T12:34:56Z") == 1583066096);
    CHECK(parse_iso8601("2020-03-01T12:34:56.250Z") == 1583066096);
    CHECK_THROWS_AS(parse_iso8601("not a date"), DataError);
    CHECK_THROWS_AS(parse_iso8601("2020-13-01"), DataError);
    CHECK_THROWS_AS(parse_iso8601("2020-01-01T25:00:00Z"), DataError);
    CHECK_THROWS_AS(parse_iso8601("2020-01-01T10:00:00+03:00"), DataError);
}

TEST_CASE("tweet construction counts hashtags and mentions on raw text") {
    const Tweet t = Tweet::make("1", "I am #happy with @bob and #life today", "", 0, false);
    CHECK(t.hashtag_count == 2);
    CHECK(t.mention_count == 1);
    const Tweet plain = Tweet::make("2", "no tags here", "", 0, false);
    CHECK(plain.hashtag_count == 0);
    CHECK(plain.mention_count == 0);
}

namespace {

std::string user_line(const std::string& handle, int followers, int statuses,
                      const std::string& tweets_json, const std::string& extra = "") {
    return "{\"handle\":\"" + handle + "\",\"statuses_count\":" + std::to_string(statuses) +
           ",\"followers_count\":" + std::to_string(followers) +
           ",\"listed_count\":1,\"favourites_count\":3,\"bio\":\"a bio\"," +
           "\"account_created\":\"2019-01-01T00:00:00Z\",\"tweets\":[" + tweets_json + "]" +
           extra + "}";
}

std::string tweet_json(const std::string& id, const std::string& text,
                       const std::string& when = "2019-06-01T00:00:00Z") {
    return "{\"id\":\"" + id + "\",\"text\":\"" + text + "\",\"created_at\":\"" + when +
           "\",\"is_retweet\":false}";
}

} // namespace

TEST_CASE("load_users keeps order, reports bad lines and derives account age") {
    const std::string good1 = user_line("alice", 10, 5, tweet_json("t1", "hello world"));
    const std::string good2 = user_line(
        "bob", 20, 9, tweet_json("t2", "more text", "2019-01-31T00:00:00Z"),
        ",\"raw_traits\":{\"anxiety\":4.0,\"avoidance\":4.0,\"openness\":3.0,"
        "\"conscientiousness\":3.0,\"extraversion\":3.0,\"agreeableness\":3.0,"
        "\"neuroticism\":3.0}");
    TempFile f("test_users_tmp.jsonl",
               good1 + "\n" + "{this is not json\n" + good2 + "\n" +
                   "{\"handle\":\"carol\"}\n");
    const auto result = load_users(f.path);
    REQUIRE(result.users.size() == 2);
    CHECK(result.diagnostics.size() == 2);
    CHECK(result.users[0].profile.handle == "alice");
    CHECK(result.users[1].profile.handle == "bob");
    CHECK(!result.users[0].label.has_value());
    REQUIRE(result.users[1].label.has_value());
    CHECK(result.users[1].label->get(Trait::anxiety) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(result.users[1].label->get(Trait::openness) == doctest::Approx(0.5).epsilon(1e-15));
    // age runs from account creation to the newest tweet
    CHECK(result.users[0].profile.account_age_days == 151);
    CHECK(result.users[1].profile.account_age_days == 30);
}

TEST_CASE("load_users handles the empty file and questionnaire responses") {
    TempFile empty("test_users_empty_tmp.jsonl", "");
    CHECK(load_users(empty.path).users.empty());

    const auto key = demo_key();
    TempFile f("test_users_resp_tmp.jsonl",
               user_line("dora", 5, 5, tweet_json("t", "hi"),
                         ",\"responses\":{\"bf_1\":4,\"bf_2\":4,\"bf_3\":2,\"bf_4\":1,"
                         "\"ao_1\":7,\"ao_2\":4,\"bf_5\":3,\"bf_6\":3,\"bf_7\":3,"
                         "\"bf_8\":3}") +
                   "\n");
    const auto result = load_users(f.path, &key);
    REQUIRE(result.users.size() == 1);
    REQUIRE(result.users[0].label.has_value());
    // openness 4.25 -> 0.8125, anxiety reversed 7 -> raw 1 -> 0
    CHECK(result.users[0].label->get(Trait::openness) ==
          doctest::Approx(0.8125).epsilon(1e-15));
    CHECK(result.users[0].label->get(Trait::anxiety) == doctest::Approx(0.0).epsilon(1e-15));

    // same file without a key: loads, but unlabeled with a diagnostic
    const auto nokey = load_users(f.path);
    REQUIRE(nokey.users.size() == 1);
    CHECK(!nokey.users[0].label.has_value());
    CHECK(nokey.diagnostics.size() == 1);
}

TEST_CASE("load_users rejects labels outside their scale") {
    TempFile f("test_users_badlabel_tmp.jsonl",
               user_line("eve", 5, 5, tweet_json("t", "hi"),
                         ",\"raw_traits\":{\"anxiety\":9.0,\"avoidance\":4.0,\"openness\":3.0,"
                         "\"conscientiousness\":3.0,\"extraversion\":3.0,"
                         "\"agreeableness\":3.0,\"neuroticism\":3.0}") +
                   "\n");
    const auto result = load_users(f.path);
    CHECK(result.users.empty());
    CHECK(result.diagnostics.size() == 1);
}

namespace {

UserRecord make_user(const std::string& handle, int statuses, int followers,
                     const std::vector<std::string>& texts) {
    UserRecord u;
    u.profile.handle = handle;
    u.profile.statuses_count = statuses;
    u.profile.followers_count = followers;
    u.profile.bio = "bio";
    u.profile.account_age_days = 100;
    int i = 0;
    for (const auto& t : texts) {
        u.tweets.push_back(Tweet::make(handle + "_" + std::to_string(i++), t, "", 0, false));
    }
    return u;
}

} // namespace

TEST_CASE("filter_spam removes ghosts") {
    std::vector<UserRecord> users;
    users.push_back(make_user("zero_statuses", 0, 50, {"hello"}));
    users.push_back(make_user("one_follower", 10, 1, {"hello"}));
    users.push_back(make_user("no_tweets", 10, 50, {}));
    users.push_back(make_user("fine", 10, 50, {"hello world"}));
    const auto result = filter_spam(users);
    REQUIRE(result.kept.size() == 1);
    CHECK(result.kept[0].profile.handle == "fine");
    REQUIRE(result.removals.size() == 3);
    for (const auto& r : result.removals) CHECK(r.rule == "ghost");
}

TEST_CASE("filter_spam removes repetitive high-hashtag users entirely") {
    const std::string spam = "WIN now #a #b #c #d #e enter the contest";
    std::vector<UserRecord> users;
    users.push_back(make_user("spammer", 10, 50, {spam, spam + " again", spam, "normal one"}));
    const auto result = filter_spam(users);
    CHECK(result.kept.empty());
    REQUIRE(result.removals.size() == 1);
    CHECK(result.removals[0].rule == "repetitive");
}

TEST_CASE("filter_spam drops isolated spam tweets but keeps the user") {
    std::vector<UserRecord> users;
    users.push_back(make_user("casual", 10, 50,
                              {"morning coffee", "busy day at work", "#a #b #c #d #e wow",
                               "evening run"}));
    const auto result = filter_spam(users);
    REQUIRE(result.kept.size() == 1);
    CHECK(result.kept[0].tweets.size() == 3);
    REQUIRE(result.removals.size() == 1);
    CHECK(result.removals[0].rule == "spam_tweet");
    CHECK(result.removals[0].handle == "casual");
}

TEST_CASE("filter_spam drops users left with no tweets") {
    std::vector<UserRecord> users;
    // two distinct spam tweets: not a repetitive cluster, but both are dropped
    users.push_back(make_user("hollow", 10, 50,
                              {"#a #b #c #d #e first thing", "#p #q #r #s #t other topic"}));
    const auto result = filter_spam(users);
    CHECK(result.kept.empty());
    bool emptied = false;
    for (const auto& r : result.removals) emptied |= r.rule == "emptied";
    CHECK(emptied);
}

TEST_CASE("filter_spam is idempotent and never grows") {
    Rng rng(404);
    std::vector<std::string> texts = {
        "hello world",  "#a #b #c #d #e spam spam",  "nice weather today",
        "#a #b #c #d #e spam spam",  "lunch break", "#x #y #z #w #v other spam",
    };
    std::vector<UserRecord> users;
    for (int i = 0; i < 25; ++i) {
        std::vector<std::string> mine;
        const int count = rng.range_int(0, 5);
        for (int j = 0; j < count; ++j) {
            mine.push_back(texts[static_cast<std::size_t>(rng.below(texts.size()))]);
        }
        users.push_back(make_user("u" + std::to_string(i), rng.range_int(0, 20),
                                  rng.range_int(0, 40), mine));
    }
    const auto once = filter_spam(users);
    CHECK(once.kept.size() <= users.size());
    const auto twice = filter_spam(once.kept);
    CHECK(twice.removals.empty());
    REQUIRE(twice.kept.size() == once.kept.size());
    for (std::size_t i = 0; i < once.kept.size(); ++i) {
        CHECK(twice.kept[i].profile.handle == once.kept[i].profile.handle);
        CHECK(twice.kept[i].tweets.size() == once.kept[i].tweets.size());
    }
}

TEST_CASE("token jaccard") {
    CHECK(token_jaccard("the quick fox", "the quick fox") == doctest::Approx(1.0));
    CHECK(token_jaccard("alpha beta", "gamma delta") == doctest::Approx(0.0));
    CHECK(token_jaccard("", "") == doctest::Approx(1.0));
    CHECK(token_jaccard("a b c d", "a b c") == doctest::Approx(0.75));
}

TEST_CASE("questionnaire key round trip from csv") {
    TempFile f("test_key_tmp.csv",
               "item_id,trait,reversed,scale_max\n"
               "bf_1,openness,false,5\n"
               "ao_1,anxiety,true,7\n");
    const auto key = QuestionnaireKey::load(f.path);
    REQUIRE(key.items.size() == 2);
    CHECK(key.items[0].trait == Trait::openness);
    CHECK(key.items[1].reversed);
    CHECK(key.items[1].scale_max == 7);
    CHECK(key.find("ao_1") != nullptr);
    CHECK(key.find("missing") == nullptr);

    TempFile bad("test_key_bad_tmp.csv",
                 "item_id,trait,reversed,scale_max\nbf_1,sparkle,false,5\n");
    CHECK_THROWS_AS(QuestionnaireKey::load(bad.path), DataError);
}
