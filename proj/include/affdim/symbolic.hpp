#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace affdim {

using Letter = std::uint32_t;
using Word = std::vector<Letter>;

// Parses a digit string such as "0110" (alphabets of size <= 10 only).
Word parse_word(std::string_view digits);
std::string format_word(std::span<const Letter> w);

/// Finite description of a subshift of finite type: the sequences over
/// {0,...,alphabet_size-1} that avoid every forbidden factor. An empty
/// forbidden list is the full shift.
struct SubshiftSpec {
  std::size_t alphabet_size = 2;
  std::vector<Word> forbidden_words;

  static SubshiftSpec full_shift(std::size_t alphabet_size);

  /// Validated copy with duplicates and redundant words removed (a forbidden
  /// word containing another forbidden word as a factor adds nothing), sorted.
  /// Throws BadSubshift.
  SubshiftSpec normalized() const;
};

class WordStream;

/// Deterministic automaton whose paths of length n from the root spell out
/// exactly K_n, the length-n prefixes of infinite allowed sequences.
///
/// Nodes below depth `memory()` are prefixes of live states; the remaining
/// nodes are the allowed memory-words that still have an infinite future.
/// Every node has at least one outgoing edge. Immutable after compile.
class SubshiftAutomaton {
 public:
  static constexpr std::int32_t kNone = -1;

  /// Throws BadSubshift for invalid specs and EmptySubshift when no infinite
  /// sequence avoids the forbidden words.
  static SubshiftAutomaton compile(const SubshiftSpec& spec);
  static SubshiftAutomaton full_shift(std::size_t alphabet_size);

  std::size_t alphabet_size() const noexcept { return alphabet_size_; }
  std::size_t memory() const noexcept { return memory_; }
  std::size_t num_nodes() const noexcept { return transitions_.size() / alphabet_size_; }
  bool is_full_shift() const noexcept { return spec_.forbidden_words.empty(); }
  const SubshiftSpec& spec() const noexcept { return spec_; }

  std::int32_t root() const noexcept { return 0; }
  std::int32_t next(std::int32_t node, Letter a) const noexcept {
    return transitions_[static_cast<std::size_t>(node) * alphabet_size_ + a];
  }

  /// #K_n via dynamic programming. Throws CountOverflow past 2^64 - 1.
  std::uint64_t count(std::size_t n) const;
  /// log #K_n, valid for any depth.
  double log_count(std::size_t n) const;

  /// True iff w is in K_{|w|}. Throws LetterOutOfRange.
  bool is_allowed(std::span<const Letter> w) const;

  std::vector<Word> words(std::size_t n) const;
  WordStream stream(std::size_t n) const;

  /// Calls visit(std::span<const Letter>) for each word of K_n in
  /// lexicographic order.
  template <class Visit>
  void for_each_word(std::size_t n, Visit&& visit) const;

  /// The first `length` letters of the lexicographically least infinite
  /// continuation of w. Requires w in K_{|w|}.
  Word least_continuation(std::span<const Letter> w, std::size_t length) const;

 private:
  SubshiftSpec spec_;
  std::size_t alphabet_size_ = 0;
  std::size_t memory_ = 0;
  std::vector<std::int32_t> transitions_;
};

/// Lexicographic enumerator over K_n. Independent per caller.
class WordStream {
 public:
  WordStream(const SubshiftAutomaton& automaton, std::size_t n);

  /// Writes the next word into `out`; returns false when exhausted.
  bool next(Word& out);

 private:
  bool advance();

  const SubshiftAutomaton* automaton_;
  std::size_t n_;
  Word word_;
  std::vector<std::int32_t> nodes_;  // nodes_[k] = node after word_[0..k)
  bool started_ = false;
  bool done_ = false;
};

template <class Visit>
void SubshiftAutomaton::for_each_word(std::size_t n, Visit&& visit) const {
  WordStream s(*this, n);
  Word w;
  while (s.next(w)) visit(std::span<const Letter>(w));
}

}  // namespace affdim
