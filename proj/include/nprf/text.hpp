#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace nprf {

using StopwordSet = std::unordered_set<std::string>;

// Lowercases and splits on every non-alphanumeric byte; empty tokens dropped.
std::vector<std::string> tokenize(std::string_view raw);

// Built-in English stopword list (33 common function words).
const StopwordSet& default_stopwords();

// One stopword per line; blank lines and lines starting with '#' ignored.
// Entries are lowercased so the set matches tokenizer output.
StopwordSet load_stopwords(const std::string& path);

// tokenize -> stopword removal -> Porter stemming, in that order.
// Stopwords are matched against the unstemmed token.
std::vector<std::string> preprocess(std::string_view raw, const StopwordSet& stopwords);

}  // namespace nprf
