#pragma once

#include <string>
#include <vector>

namespace psyprof::textprep {

// Normalizes raw tweet text: drops a leading retweet marker, URL tokens and
// @-mentions, keeps hashtag words without '#', strips punctuation, digits and
// non-ASCII bytes, lowercases, and collapses whitespace. Idempotent.
std::string clean(const std::string& raw);

// Whitespace tokenizer; expects clean() output but tolerates any text.
std::vector<std::string> tokenize(const std::string& text);

// True for tokens clean() treats as URLs (http://, https://, www., t.co/).
bool is_url_token(const std::string& token);

// Builtin English stopword list, alphabetical.
const std::vector<std::string>& stopword_list();
bool is_stopword(const std::string& word);
std::vector<std::string> drop_stopwords(const std::vector<std::string>& tokens);
std::vector<std::string> drop_stopwords(const std::vector<std::string>& tokens,
                                        const std::vector<std::string>& stoplist);

// One word per line; '#' starts a comment.
std::vector<std::string> load_stopword_file(const std::string& path);

// Porter-style suffix stripper run to a fixpoint, so stem(stem(w)) == stem(w).
// Words of length <= 2 are returned unchanged.
std::string stem(const std::string& word);
std::vector<std::string> stem_all(const std::vector<std::string>& tokens);

// clean + tokenize + stopword removal + stemming, in that order.
std::vector<std::string> prepare(const std::string& raw);

} // namespace psyprof::textprep
