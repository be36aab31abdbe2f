#include "sqlova/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sqlova/error.hpp"
#include "sqlova/sql.hpp"

namespace sqlova {

namespace {

constexpr std::size_t kMaxWordChars = 100;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

bool is_continuation_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* t : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) add(t);
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) {
    check(!t.empty(), ErrorKind::Parse, "empty vocabulary token");
    check(!ids_.contains(t), ErrorKind::Parse, "duplicate vocabulary token '" + t + "'");
    add(t);
  }
}

void Vocabulary::add(std::string token) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty())
      fail(ErrorKind::Parse, "vocabulary line " + std::to_string(lineno) + " is empty");
    tokens.emplace_back(line);
  }
  try {
    return Vocabulary(tokens);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("vocabulary: ") + e.what());
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open vocabulary " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write vocabulary " + path);
  for (std::size_t i = kNumReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

int Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

std::vector<int> TokenizedText::ids() const {
  std::vector<int> out;
  out.reserve(subtokens.size());
  for (const auto& s : subtokens) out.push_back(s.id);
  return out;
}

std::vector<Word> basic_tokenize(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (is_punct(text[i])) {
      words.push_back({std::string(1, text[i]), i, i + 1});
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i]) && !is_punct(text[i])) ++i;
    words.push_back({std::string(text.substr(start, i - start)), start, i});
  }
  return words;
}

std::vector<int> wordpiece(std::string_view word, const Vocabulary& vocab) {
  const std::string lower = to_lower(word);
  if (lower.empty() || lower.size() > kMaxWordChars) return {kUnkId};
  std::vector<int> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < lower.size()) {
    std::size_t end = lower.size();
    int found = -1;
    while (start < end) {
      // Never cut a multi-byte UTF-8 sequence.
      if (end < lower.size() && is_continuation_byte(lower[end])) {
        --end;
        continue;
      }
      candidate.assign(start > 0 ? "##" : "");
      candidate.append(lower, start, end - start);
      found = vocab.find(candidate);
      if (found >= 0) break;
      --end;
    }
    if (found < 0) return {kUnkId};
    pieces.push_back(found);
    start = end;
  }
  return pieces;
}

TokenizedText tokenize_question(std::string_view text, const Vocabulary& vocab) {
  TokenizedText out;
  out.words = basic_tokenize(text);
  for (std::size_t w = 0; w < out.words.size(); ++w)
    for (int id : wordpiece(out.words[w].text, vocab)) out.subtokens.push_back({id, w});
  return out;
}

std::vector<int> tokenize_header(std::string_view header, const Vocabulary& vocab) {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < header.size()) {
    if (is_space(header[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < header.size() && !is_space(header[i])) ++i;
    for (int id : wordpiece(header.substr(start, i - start), vocab)) ids.push_back(id);
  }
  if (ids.empty()) ids.push_back(kUnkId);
  return ids;
}

std::string span_to_text(std::string_view question, const TokenizedText& tok,
                         std::size_t start_sub, std::size_t end_sub) {
  const std::size_t n = tok.subtokens.size();
  if (start_sub > end_sub || end_sub >= n)
    fail(ErrorKind::Bounds, "subtoken span [" + std::to_string(start_sub) + ", " +
                                std::to_string(end_sub) + "] invalid for " +
                                std::to_string(n) + " subtokens");
  const Word& first = tok.words.at(tok.subtokens[start_sub].word_index);
  const Word& last = tok.words.at(tok.subtokens[end_sub].word_index);
  check(last.char_end <= question.size(), ErrorKind::Bounds,
        "tokenization does not belong to this question");
  return std::string(question.substr(first.char_start, last.char_end - first.char_start));
}

}  // namespace sqlova

namespace sqlova {

namespace {

bool all_digits(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Splits into UTF-8 code point sequences.
std::vector<std::string> code_points(std::string_view w) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < w.size()) {
    std::size_t len = 1;
    const auto c = static_cast<unsigned char>(w[i]);
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, w.size() - i);
    out.emplace_back(w.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace

std::vector<std::string> header_words(std::string_view header) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < header.size()) {
    while (i < header.size() && std::isspace(static_cast<unsigned char>(header[i]))) ++i;
    const std::size_t start = i;
    while (i < header.size() && !std::isspace(static_cast<unsigned char>(header[i]))) ++i;
    if (i > start) out.emplace_back(header.substr(start, i - start));
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& words, const VocabOptions& opts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& w : words) {
    std::string lower = to_lower(w);
    if (!lower.empty()) ++counts[lower];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [w, n] : counts)
    if (n >= opts.min_count && !all_digits(w) && w.size() <= kMaxWordChars) ranked.emplace_back(w, n);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > opts.max_words) ranked.resize(opts.max_words);

  std::set<std::string> whole;
  std::vector<std::string> tokens;
  for (const auto& [w, n] : ranked) {
    whole.insert(w);
    tokens.push_back(w);
  }
  std::set<std::string> pieces;
  for (const auto& [w, n] : counts) {
    if (whole.contains(w)) continue;
    const auto cps = code_points(w);
    for (std::size_t i = 0; i < cps.size(); ++i) pieces.insert(i == 0 ? cps[i] : "##" + cps[i]);
  }
  for (const auto& p : pieces)
    if (!whole.contains(p)) tokens.push_back(p);
  return Vocabulary(tokens);
}

}  // namespace sqlova
