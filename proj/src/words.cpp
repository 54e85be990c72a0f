#include "jmlsr/words.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "jmlsr/error.hpp"

namespace jmlsr {

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) fail(ErrorCode::InvalidArgument, "alphabet must be nonempty");
  if (names_.size() > 0xFFFF) fail(ErrorCode::InvalidArgument, "alphabet too large");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty() || n.find_first_of(".| \t\n") != std::string::npos)
      fail(ErrorCode::InvalidArgument, "invalid letter name '" + n + "'");
    if (!seen.insert(n).second) fail(ErrorCode::InvalidArgument, "duplicate letter '" + n + "'");
  }
}

Alphabet Alphabet::first(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < d; ++i)
    names.push_back(d <= 26 ? std::string(1, static_cast<char>('a' + i)) : "s" + std::to_string(i));
  return Alphabet(std::move(names));
}

std::optional<Letter> Alphabet::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Letter>(it - names_.begin());
}

Letter Alphabet::at(const std::string& name) const {
  auto l = find(name);
  if (!l) fail(ErrorCode::InconsistentAlphabet, "unknown letter '" + name + "'");
  return *l;
}

Word Word::operator+(const Word& other) const {
  std::vector<Letter> s = s_;
  s.insert(s.end(), other.s_.begin(), other.s_.end());
  return Word(std::move(s));
}

Word Word::operator+(Letter l) const {
  std::vector<Letter> s = s_;
  s.push_back(l);
  return Word(std::move(s));
}

Word Word::drop_back(std::size_t k) const {
  return Word(std::vector<Letter>(s_.begin(), s_.end() - static_cast<std::ptrdiff_t>(std::min(k, s_.size()))));
}

Word Word::drop_front(std::size_t k) const {
  return Word(std::vector<Letter>(s_.begin() + static_cast<std::ptrdiff_t>(std::min(k, s_.size())), s_.end()));
}

std::strong_ordering operator<=>(const Word& a, const Word& b) {
  if (auto c = a.s_.size() <=> b.s_.size(); c != 0) return c;
  return a.s_ <=> b.s_;
}

std::size_t WordHash::operator()(const Word& w) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL ^ w.size();
  for (Letter l : w.letters()) h = (h ^ l) * 0x100000001b3ULL;
  return h;
}

std::string to_string(const Word& w, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += '.';
    out += alphabet.name(w[i]);
  }
  return out;
}

Word parse_word(const std::string& text, const Alphabet& alphabet) {
  std::vector<Letter> letters;
  if (text.empty()) return Word();
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = text.find('.', start);
    letters.push_back(alphabet.at(text.substr(start, dot - start)));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return Word(std::move(letters));
}

std::uint64_t word_count(std::size_t d, std::size_t n) {
  std::uint64_t total = 1, power = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    power *= d;
    total += power;
  }
  return total;
}

void advance(Word& w, std::size_t d) {
  std::vector<Letter> s = w.letters();
  std::size_t i = s.size();
  while (i > 0) {
    --i;
    if (s[i] + 1u < d) {
      ++s[i];
      w = Word(std::move(s));
      return;
    }
    s[i] = 0;
  }
  s.assign(s.size() + 1, 0);
  w = Word(std::move(s));
}

std::vector<Word> enumerate_words(std::size_t d, std::size_t n) {
  std::vector<Word> out;
  out.reserve(word_count(d, n));
  Word w;
  while (w.size() <= n) {
    out.push_back(w);
    advance(w, d);
  }
  return out;
}

std::vector<Word> enumerate_words(const Alphabet& alphabet, std::size_t n) {
  return enumerate_words(alphabet.size(), n);
}

AdmissibleLanguage AdmissibleLanguage::full(std::size_t d) {
  AdmissibleLanguage l;
  l.d_ = d;
  l.allowed_.assign(d * d, 1);
  return l;
}

AdmissibleLanguage AdmissibleLanguage::from_pairs(std::size_t d, const std::vector<std::pair<Letter, Letter>>& pairs) {
  AdmissibleLanguage l;
  l.d_ = d;
  l.allowed_.assign(d * d, 0);
  for (auto [a, b] : pairs) {
    if (a >= d || b >= d) fail(ErrorCode::InvalidArgument, "language pair outside alphabet");
    l.allowed_[a * d + b] = 1;
  }
  return l;
}

bool AdmissibleLanguage::is_full() const {
  return std::all_of(allowed_.begin(), allowed_.end(), [](char c) { return c != 0; });
}

std::vector<std::pair<Letter, Letter>> AdmissibleLanguage::pairs() const {
  std::vector<std::pair<Letter, Letter>> out;
  for (std::size_t a = 0; a < d_; ++a)
    for (std::size_t b = 0; b < d_; ++b)
      if (allowed_[a * d_ + b]) out.emplace_back(static_cast<Letter>(a), static_cast<Letter>(b));
  return out;
}

bool is_admissible(const Word& w, const AdmissibleLanguage& language) {
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    if (!language.allows(w[i], w[i + 1])) return false;
  return true;
}

std::vector<Word> enumerate_admissible(const AdmissibleLanguage& language, std::size_t min_len, std::size_t max_len) {
  const std::size_t d = language.alphabet_size();
  std::vector<Word> out;
  std::vector<Word> level{Word()};
  if (min_len == 0) out.push_back(Word());
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<Word> next;
    for (const Word& w : level)
      for (std::size_t l = 0; l < d; ++l)
        if (w.empty() || language.allows(w.back(), static_cast<Letter>(l))) next.push_back(w + static_cast<Letter>(l));
    level = std::move(next);
    if (len >= min_len) out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

LetterWeights::LetterWeights(std::vector<double> p) : p_(std::move(p)) {
  for (double v : p_)
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "letter weights must be positive and finite");
}

double path_weight(const Word& w, const LetterWeights& weights, const AdmissibleLanguage& language) {
  if (!is_admissible(w, language)) return 0.0;
  double p = 1.0;
  for (Letter l : w.letters()) p *= weights[l];
  return p;
}

}  // namespace jmlsr
