#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sqlova {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kNumReserved = 4;

/// WordPiece vocabulary. Ids 0..3 are [PAD], [UNK], [CLS], [SEP]; loaded
/// tokens follow in file order. Continuation pieces carry a "##" prefix.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  /// One token per line; line i (0-based) gets id kNumReserved + i.
  static Vocabulary load(const std::string& path);
  static Vocabulary parse(std::string_view text);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  /// -1 when absent.
  int find(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct Word {
  std::string text;
  std::size_t char_start = 0;  // byte offsets into the source text
  std::size_t char_end = 0;
};

struct Subtoken {
  int id = kUnkId;
  std::size_t word_index = 0;
};

struct TokenizedText {
  std::vector<Word> words;
  std::vector<Subtoken> subtokens;

  std::vector<int> ids() const;
};

/// Splits on whitespace, then splits every ASCII punctuation character off as
/// a word of its own.
std::vector<Word> basic_tokenize(std::string_view text);

/// Greedy longest-match-first segmentation of one lowercased word; a single
/// [UNK] when no segmentation exists.
std::vector<int> wordpiece(std::string_view word, const Vocabulary& vocab);

/// Question pipeline: basic_tokenize then wordpiece per word.
TokenizedText tokenize_question(std::string_view text, const Vocabulary& vocab);

/// Header pipeline: whitespace split only, then wordpiece. An empty header
/// yields a single [UNK] so that every header owns at least one subtoken.
std::vector<int> tokenize_header(std::string_view header, const Vocabulary& vocab);

/// Question substring spanning the words that contain subtokens
/// start_sub..end_sub (inclusive). Bounds error on bad indices.
std::string span_to_text(std::string_view question, const TokenizedText& tok,
                         std::size_t start_sub, std::size_t end_sub);

struct VocabOptions {
  std::size_t max_words = 30000;
  std::size_t min_count = 1;
};

/// Frequent words become whole tokens (all-digit words never do); every
/// other word contributes its characters, the first bare and the rest with
/// "##", so that it still segments without [UNK]. Words are lowercased.
/// Order: whole words by descending count then text, then pieces sorted.
Vocabulary build_vocabulary(const std::vector<std::string>& words, const VocabOptions& opts = {});

/// Words of a header as the header pipeline sees them (whitespace split).
std::vector<std::string> header_words(std::string_view header);

}  // namespace sqlova
