#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "psyprof/types.hpp"

namespace psyprof::corpus {

struct QuestionnaireItem {
    std::string item_id;
    Trait trait = Trait::anxiety;
    bool reversed = false;
    int scale_max = 5; // 5 for Big Five items, 7 for attachment items
};

struct QuestionnaireKey {
    std::vector<QuestionnaireItem> items; // file order

    const QuestionnaireItem* find(const std::string& item_id) const;

    // CSV with header item_id,trait,reversed,scale_max
    static QuestionnaireKey load(const std::string& path);
};

// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS[.fff]Z" to unix seconds.
std::int64_t parse_iso8601(const std::string& text);

struct LoadResult {
    std::vector<UserRecord> users;       // input order
    std::vector<std::string> diagnostics; // one line per rejected record
};

// Reads a users archive, one JSON object per line. Records with missing
// fields or malformed JSON are skipped and reported; loading continues.
// Labels come from "raw_traits" (scores on the original 1..scale_max scales)
// or, when a key is given, from "responses".
LoadResult load_users(const std::string& path, const QuestionnaireKey* key = nullptr);

// Mean response per trait after flipping reversed items (r -> scale_max+1-r).
// Result for each trait lies in [1, scale_max of that trait's items].
std::map<Trait, double> score_questionnaire(const std::map<std::string, long long>& responses,
                                            const QuestionnaireKey& key);

// Min-max mapping x -> (x-1)/(scale_max-1) onto [0,1]. All seven traits must
// be present and inside their declared scale.
TraitProfile normalize_traits(const std::map<Trait, double>& raw);

struct SpamPolicy {
    int hashtag_threshold = 5;      // tweets with >= this many hashtags are spam
    int repetition_count = 3;       // this many near-duplicates flag the whole user
    double jaccard_threshold = 0.8; // near-duplicate means token Jaccard >= this
    std::int64_t ghost_min_followers = 2;
};

struct Removal {
    std::string handle;
    std::string rule;   // ghost | repetitive | spam_tweet | emptied
    std::string detail;
};

struct FilterResult {
    std::vector<UserRecord> kept;
    std::vector<Removal> removals;
};

// Drops ghost users, users whose high-hashtag tweets form a near-duplicate
// cluster, and individual high-hashtag tweets from everyone else. Idempotent.
FilterResult filter_spam(std::vector<UserRecord> users, const SpamPolicy& policy = {});

void write_removal_report(const std::string& path, const std::vector<Removal>& removals);

// Jaccard similarity of the cleaned token sets of two texts; 1 if both empty.
double token_jaccard(const std::string& text_a, const std::string& text_b);

} // namespace psyprof::corpus
