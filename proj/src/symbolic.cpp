#include "affdim/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "affdim/error.hpp"

namespace affdim {

Word parse_word(std::string_view digits) {
  Word w;
  w.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '9') throw Error(ErrorCode::Malformed, "word must be a digit string");
    w.push_back(static_cast<Letter>(c - '0'));
  }
  return w;
}

std::string format_word(std::span<const Letter> w) {
  std::string out;
  for (Letter a : w) {
    if (a < 10) {
      out.push_back(static_cast<char>('0' + a));
    } else {
      out += '(' + std::to_string(a) + ')';
    }
  }
  return out;
}

SubshiftSpec SubshiftSpec::full_shift(std::size_t alphabet_size) {
  return SubshiftSpec{alphabet_size, {}};
}

namespace {

bool contains_factor(std::span<const Letter> hay, std::span<const Letter> needle) {
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

SubshiftSpec SubshiftSpec::normalized() const {
  if (alphabet_size < 1) throw Error(ErrorCode::BadSubshift, "alphabet_size must be >= 1");
  std::vector<Word> words = forbidden_words;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].size() < 2) {
      throw Error(ErrorCode::BadSubshift,
                  "subshift.forbidden_words[" + std::to_string(i) + "] must have length >= 2");
    }
    for (Letter a : words[i]) {
      if (a >= alphabet_size) {
        throw Error(ErrorCode::BadSubshift, "subshift.forbidden_words[" + std::to_string(i) +
                                                "] uses letter " + std::to_string(a) +
                                                " outside the alphabet");
      }
    }
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());

  std::vector<Word> kept;
  for (std::size_t i = 0; i < words.size(); ++i) {
    bool redundant = false;
    for (std::size_t j = 0; j < words.size() && !redundant; ++j) {
      if (i != j && words[j].size() < words[i].size() && contains_factor(words[i], words[j])) {
        redundant = true;
      }
    }
    if (!redundant) kept.push_back(words[i]);
  }
  return SubshiftSpec{alphabet_size, std::move(kept)};
}

SubshiftAutomaton SubshiftAutomaton::full_shift(std::size_t alphabet_size) {
  return compile(SubshiftSpec::full_shift(alphabet_size));
}

SubshiftAutomaton SubshiftAutomaton::compile(const SubshiftSpec& raw) {
  SubshiftAutomaton out;
  out.spec_ = raw.normalized();
  const std::size_t k = out.spec_.alphabet_size;
  out.alphabet_size_ = k;

  std::size_t m = 0;
  for (const Word& w : out.spec_.forbidden_words) m = std::max(m, w.size() - 1);
  out.memory_ = m;

  if (m == 0) {
    out.transitions_.assign(k, 0);
    return out;
  }

  // States are memory-words encoded in base k, most significant letter first.
  double n_states_d = std::pow(static_cast<double>(k), static_cast<double>(m));
  if (n_states_d > static_cast<double>(1u << 22)) {
    throw Error(ErrorCode::BadSubshift, "forbidden words too long for the alphabet size");
  }
  const std::size_t n_states = static_cast<std::size_t>(n_states_d);

  auto decode = [&](std::size_t code, std::size_t len) {
    Word w(len);
    for (std::size_t i = len; i-- > 0;) {
      w[i] = static_cast<Letter>(code % k);
      code /= k;
    }
    return w;
  };
  auto has_forbidden_suffix = [&](const Word& w) {
    for (const Word& f : out.spec_.forbidden_words) {
      if (f.size() <= w.size() && std::equal(f.begin(), f.end(), w.end() - f.size())) return true;
    }
    return false;
  };
  auto has_forbidden_factor = [&](const Word& w) {
    for (const Word& f : out.spec_.forbidden_words) {
      if (contains_factor(w, f)) return true;
    }
    return false;
  };

  std::vector<char> alive(n_states, 0);
  for (std::size_t c = 0; c < n_states; ++c) alive[c] = has_forbidden_factor(decode(c, m)) ? 0 : 1;

  // edge[c*k + a] = successor state code or n_states when the step is forbidden
  std::vector<std::size_t> edge(n_states * k, n_states);
  for (std::size_t c = 0; c < n_states; ++c) {
    if (!alive[c]) continue;
    Word w = decode(c, m);
    w.push_back(0);
    for (std::size_t a = 0; a < k; ++a) {
      w.back() = static_cast<Letter>(a);
      if (!has_forbidden_suffix(w)) edge[c * k + a] = (c * k + a) % n_states;
    }
  }

  // Prune states without an infinite future.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t c = 0; c < n_states; ++c) {
      if (!alive[c]) continue;
      bool has_out = false;
      for (std::size_t a = 0; a < k && !has_out; ++a) {
        std::size_t d = edge[c * k + a];
        has_out = d < n_states && alive[d];
      }
      if (!has_out) {
        alive[c] = 0;
        changed = true;
      }
    }
  }
  if (std::none_of(alive.begin(), alive.end(), [](char x) { return x != 0; })) {
    throw Error(ErrorCode::EmptySubshift, "no infinite sequence avoids the forbidden words");
  }

  // Node numbering: prefixes of live states by length (root = empty prefix),
  // then the live states themselves.
  std::vector<std::size_t> kpow(m + 1, 1);
  for (std::size_t i = 1; i <= m; ++i) kpow[i] = kpow[i - 1] * k;
  std::vector<std::map<std::size_t, std::int32_t>> prefix_ids(m);
  std::int32_t next_id = 0;
  for (std::size_t len = 0; len < m; ++len) {
    for (std::size_t c = 0; c < n_states; ++c) {
      if (alive[c]) prefix_ids[len].emplace(c / kpow[m - len], 0);
    }
    for (auto& [code, id] : prefix_ids[len]) id = next_id++;
  }
  std::unordered_map<std::size_t, std::int32_t> state_ids;
  for (std::size_t c = 0; c < n_states; ++c) {
    if (alive[c]) state_ids.emplace(c, next_id++);
  }

  out.transitions_.assign(static_cast<std::size_t>(next_id) * k, kNone);
  for (std::size_t len = 0; len < m; ++len) {
    for (const auto& [code, id] : prefix_ids[len]) {
      for (std::size_t a = 0; a < k; ++a) {
        std::size_t child = code * k + a;
        std::int32_t target = kNone;
        if (len + 1 < m) {
          auto it = prefix_ids[len + 1].find(child);
          if (it != prefix_ids[len + 1].end()) target = it->second;
        } else {
          auto it = state_ids.find(child);
          if (it != state_ids.end()) target = it->second;
        }
        out.transitions_[static_cast<std::size_t>(id) * k + a] = target;
      }
    }
  }
  for (const auto& [code, id] : state_ids) {
    for (std::size_t a = 0; a < k; ++a) {
      std::size_t d = edge[code * k + a];
      if (d < n_states && alive[d]) {
        out.transitions_[static_cast<std::size_t>(id) * k + a] = state_ids.at(d);
      }
    }
  }
  return out;
}

std::uint64_t SubshiftAutomaton::count(std::size_t n) const {
  const std::size_t nodes = num_nodes();
  std::vector<std::uint64_t> cur(nodes, 1), nxt(nodes);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t v = 0; v < nodes; ++v) {
      std::uint64_t acc = 0;
      for (std::size_t a = 0; a < alphabet_size_; ++a) {
        std::int32_t d = transitions_[v * alphabet_size_ + a];
        if (d == kNone) continue;
        if (__builtin_add_overflow(acc, cur[static_cast<std::size_t>(d)], &acc)) {
          throw Error(ErrorCode::CountOverflow,
                      "#K_" + std::to_string(n) + " does not fit in 64 bits");
        }
      }
      nxt[v] = acc;
    }
    cur.swap(nxt);
  }
  return cur[static_cast<std::size_t>(root())];
}

double SubshiftAutomaton::log_count(std::size_t n) const {
  const std::size_t nodes = num_nodes();
  std::vector<double> cur(nodes, 1.0), nxt(nodes);
  double log_scale = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double peak = 0.0;
    for (std::size_t v = 0; v < nodes; ++v) {
      double acc = 0.0;
      for (std::size_t a = 0; a < alphabet_size_; ++a) {
        std::int32_t d = transitions_[v * alphabet_size_ + a];
        if (d != kNone) acc += cur[static_cast<std::size_t>(d)];
      }
      nxt[v] = acc;
      peak = std::max(peak, acc);
    }
    for (double& x : nxt) x /= peak;
    log_scale += std::log(peak);
    cur.swap(nxt);
  }
  return log_scale + std::log(cur[static_cast<std::size_t>(root())]);
}

bool SubshiftAutomaton::is_allowed(std::span<const Letter> w) const {
  std::int32_t node = root();
  bool allowed = true;
  for (Letter a : w) {
    if (a >= alphabet_size_) {
      throw Error(ErrorCode::LetterOutOfRange,
                  "letter " + std::to_string(a) + " outside alphabet of size " +
                      std::to_string(alphabet_size_));
    }
    if (allowed) {
      node = next(node, a);
      allowed = node != kNone;
    }
  }
  return allowed;
}

std::vector<Word> SubshiftAutomaton::words(std::size_t n) const {
  std::vector<Word> out;
  for_each_word(n, [&](std::span<const Letter> w) { out.emplace_back(w.begin(), w.end()); });
  return out;
}

WordStream SubshiftAutomaton::stream(std::size_t n) const { return WordStream(*this, n); }

Word SubshiftAutomaton::least_continuation(std::span<const Letter> w, std::size_t length) const {
  std::int32_t node = root();
  for (Letter a : w) {
    if (a >= alphabet_size_) throw Error(ErrorCode::LetterOutOfRange, "letter outside alphabet");
    node = next(node, a);
    if (node == kNone) throw Error(ErrorCode::InvalidArgument, "word is not in the subshift");
  }
  Word tail;
  tail.reserve(length);
  while (tail.size() < length) {
    for (Letter a = 0; a < alphabet_size_; ++a) {
      std::int32_t d = next(node, a);
      if (d != kNone) {
        tail.push_back(a);
        node = d;
        break;
      }
    }
  }
  return tail;
}

WordStream::WordStream(const SubshiftAutomaton& automaton, std::size_t n)
    : automaton_(&automaton), n_(n), word_(n), nodes_(n + 1) {}

bool WordStream::next(Word& out) {
  if (done_) return false;
  if (!started_) {
    started_ = true;
    nodes_[0] = automaton_->root();
    for (std::size_t depth = 0; depth < n_; ++depth) {
      for (Letter a = 0; a < automaton_->alphabet_size(); ++a) {
        std::int32_t d = automaton_->next(nodes_[depth], a);
        if (d != SubshiftAutomaton::kNone) {
          word_[depth] = a;
          nodes_[depth + 1] = d;
          break;
        }
      }
    }
  } else if (!advance()) {
    done_ = true;
    return false;
  }
  out = word_;
  return true;
}

bool WordStream::advance() {
  const std::size_t k = automaton_->alphabet_size();
  for (std::size_t depth = n_; depth-- > 0;) {
    for (Letter a = word_[depth] + 1; a < k; ++a) {
      std::int32_t d = automaton_->next(nodes_[depth], a);
      if (d == SubshiftAutomaton::kNone) continue;
      word_[depth] = a;
      nodes_[depth + 1] = d;
      for (std::size_t rest = depth + 1; rest < n_; ++rest) {
        for (Letter b = 0; b < k; ++b) {
          std::int32_t e = automaton_->next(nodes_[rest], b);
          if (e != SubshiftAutomaton::kNone) {
            word_[rest] = b;
            nodes_[rest + 1] = e;
            break;
          }
        }
      }
      return true;
    }
  }
  return false;
}

}  // namespace affdim
