#include "nprf/text.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "nprf/porter.hpp"

namespace nprf {

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : raw) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const StopwordSet& default_stopwords() {
  static const StopwordSet words = {
      "a",    "an",   "and",  "are",   "as",    "at",   "be",   "but",
      "by",   "for",  "if",   "in",    "into",  "is",   "it",   "no",
      "not",  "of",   "on",   "or",    "such",  "that", "the",  "their",
      "then", "there", "these", "they", "this",  "to",   "was",  "will",
      "with"};
  return words;
}

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file: " + path);
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    auto begin = line.find_first_not_of(" \t\r");
    auto end = line.find_last_not_of(" \t\r");
    line = begin == std::string::npos ? std::string() : line.substr(begin, end - begin + 1);
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.insert(line);
  }
  return out;
}

std::vector<std::string> preprocess(std::string_view raw, const StopwordSet& stopwords) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(raw)) {
    if (stopwords.count(tok)) continue;
    out.push_back(porter_stem(tok));
  }
  return out;
}

}  // namespace nprf
