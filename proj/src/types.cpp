#include "psyprof/types.hpp"

namespace psyprof {

std::optional<Trait> trait_from_name(const std::string& name) {
    for (int i = 0; i < kTraitCount; ++i) {
        if (name == kTraitNames[i]) return static_cast<Trait>(i);
    }
    return std::nullopt;
}

std::optional<Emotion> emotion_from_name(const std::string& name) {
    for (int i = 0; i < kEmotionCount; ++i) {
        if (name == kEmotionNames[i]) return static_cast<Emotion>(i);
    }
    return std::nullopt;
}

bool TraitProfile::in_unit_range() const {
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

Tweet Tweet::make(std::string id, std::string text, std::string created_at_iso,
                  std::int64_t created_at, bool is_retweet) {
    Tweet t;
    t.id = std::move(id);
    t.text = std::move(text);
    t.created_at_iso = std::move(created_at_iso);
    t.created_at = created_at;
    t.is_retweet = is_retweet;
    bool at_start = true;
    for (std::size_t i = 0; i < t.text.size(); ++i) {
        const char c = t.text[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            at_start = true;
            continue;
        }
        if (at_start) {
            if (c == '#') ++t.hashtag_count;
            if (c == '@') ++t.mention_count;
        }
        at_start = false;
    }
    return t;
}

} // namespace psyprof
