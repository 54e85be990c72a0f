#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jmlsr {

using Letter = std::uint16_t;

/// Ordered set of letter names. Letter i is the i-th name.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  /// Letters "a", "b", ... (or "s0", "s1", ... beyond 26).
  static Alphabet first(std::size_t d);

  std::size_t size() const { return names_.size(); }
  const std::string& name(Letter l) const { return names_.at(l); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<Letter> find(const std::string& name) const;
  Letter at(const std::string& name) const;

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<std::string> names_;
};

/// Finite sequence of letters. Ordered by length first, then lexicographically.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Letter> letters) : s_(std::move(letters)) {}
  Word(std::initializer_list<Letter> letters) : s_(letters) {}

  static Word letter(Letter l) { return Word{l}; }

  std::size_t size() const { return s_.size(); }
  bool empty() const { return s_.empty(); }
  Letter operator[](std::size_t i) const { return s_[i]; }
  Letter front() const { return s_.front(); }
  Letter back() const { return s_.back(); }
  const std::vector<Letter>& letters() const { return s_; }

  Word operator+(const Word& other) const;
  Word operator+(Letter l) const;
  /// Word without its last `k` letters.
  Word drop_back(std::size_t k = 1) const;
  /// Word without its first `k` letters.
  Word drop_front(std::size_t k = 1) const;

  friend bool operator==(const Word&, const Word&) = default;
  friend std::strong_ordering operator<=>(const Word& a, const Word& b);

 private:
  std::vector<Letter> s_;
};

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept;
};

/// Letter names joined by "."; the empty word renders as "".
std::string to_string(const Word& w, const Alphabet& alphabet);
Word parse_word(const std::string& text, const Alphabet& alphabet);

/// 1 + d + d^2 + ... + d^N.
std::uint64_t word_count(std::size_t d, std::size_t n);

/// Successor of `w` in the enumeration order over `d` letters.
void advance(Word& w, std::size_t d);

/// All words of length <= n in enumeration order, starting with the empty word.
std::vector<Word> enumerate_words(std::size_t d, std::size_t n);
std::vector<Word> enumerate_words(const Alphabet& alphabet, std::size_t n);

/// Language induced by a set of allowed consecutive letter pairs.
class AdmissibleLanguage {
 public:
  AdmissibleLanguage() = default;
  static AdmissibleLanguage full(std::size_t d);
  static AdmissibleLanguage from_pairs(std::size_t d, const std::vector<std::pair<Letter, Letter>>& pairs);

  std::size_t alphabet_size() const { return d_; }
  bool allows(Letter a, Letter b) const { return allowed_[a * d_ + b] != 0; }
  bool is_full() const;
  std::vector<std::pair<Letter, Letter>> pairs() const;

  friend bool operator==(const AdmissibleLanguage&, const AdmissibleLanguage&) = default;

 private:
  std::size_t d_ = 0;
  std::vector<char> allowed_;
};

bool is_admissible(const Word& w, const AdmissibleLanguage& language);

/// Admissible words with min_len <= |w| <= max_len in enumeration order.
std::vector<Word> enumerate_admissible(const AdmissibleLanguage& language, std::size_t min_len, std::size_t max_len);

/// Strictly positive per-letter weights.
class LetterWeights {
 public:
  LetterWeights() = default;
  explicit LetterWeights(std::vector<double> p);
  static LetterWeights ones(std::size_t d) { return LetterWeights(std::vector<double>(d, 1.0)); }

  std::size_t size() const { return p_.size(); }
  double operator[](Letter l) const { return p_[l]; }
  const std::vector<double>& values() const { return p_; }

 private:
  std::vector<double> p_;
};

/// Product of letter weights along `w`, 1 for the empty word, 0 if inadmissible.
double path_weight(const Word& w, const LetterWeights& weights, const AdmissibleLanguage& language);

}  // namespace jmlsr
