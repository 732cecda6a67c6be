#pragma once

// Event-tree objects over a finite state space X: situations (finite state
// sequences), n-measurable gambles on paths, real processes, selections and
// the capital process they generate.
//
// Sequences of a fixed length n are stored densely in row-major
// lexicographic order: w = w_1...w_n has index sum_i w_i * |X|^(n-i). The
// children s·x of a situation with index i therefore sit at i*|X| + x.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icek/credal.hpp"
#include "icek/errors.hpp"

namespace icek {

using State = std::size_t;
// A finite path prefix. Infinite paths never exist in this library; a path
// is represented by a prefix at least as long as the depth that matters.
using Path = std::vector<State>;

// Upper bound on the number of entries of any dense level.
inline constexpr std::size_t kMaxDenseEntries = std::size_t{1} << 26;

inline std::size_t checked_power(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && out > kMaxDenseEntries / base)
      throw InputError("dense representation of " + std::to_string(base) + "^" +
                       std::to_string(exp) + " entries is too large");
    out *= base;
  }
  return out;
}

inline std::size_t sequence_index(std::span<const State> seq, std::size_t n_states) {
  std::size_t idx = 0;
  for (State x : seq) idx = idx * n_states + x;
  return idx;
}

inline Path sequence_at(std::size_t index, std::size_t length, std::size_t n_states) {
  Path out(length);
  for (std::size_t i = length; i-- > 0;) {
    out[i] = index % n_states;
    index /= n_states;
  }
  return out;
}

// Calls fn(const Path&) for every sequence of the given length, in index order.
template <typename Fn>
void for_each_sequence(std::size_t n_states, std::size_t length, Fn&& fn) {
  const std::size_t count = checked_power(n_states, length);
  Path w(length, 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    fn(static_cast<const Path&>(w));
    for (std::size_t i = length; i-- > 0;) {
      if (++w[i] < n_states) break;
      w[i] = 0;
    }
  }
}

class Situation {
 public:
  Situation() = default;
  explicit Situation(std::vector<State> states) : states_(std::move(states)) {}
  Situation(std::initializer_list<State> states) : states_(states) {}

  std::size_t length() const { return states_.size(); }
  bool is_initial() const { return states_.empty(); }
  const std::vector<State>& states() const { return states_; }
  State operator[](std::size_t i) const { return states_[i]; }
  State back() const { return states_.back(); }

  Situation child(State x) const {
    Situation out = *this;
    out.states_.push_back(x);
    return out;
  }

  Situation prefix(std::size_t n) const {
    if (n > states_.size()) throw InputError("situation prefix longer than situation");
    return Situation(std::vector<State>(states_.begin(), states_.begin() + n));
  }

  // s·t
  Situation concat(const Situation& t) const {
    Situation out = *this;
    out.states_.insert(out.states_.end(), t.states_.begin(), t.states_.end());
    return out;
  }

  // True when this situation is an initial segment of `path`, i.e. the path
  // lies in the cylinder of this situation.
  bool is_prefix_of(std::span<const State> path) const {
    if (path.size() < states_.size()) return false;
    for (std::size_t i = 0; i < states_.size(); ++i)
      if (path[i] != states_[i]) return false;
    return true;
  }

  void validate(std::size_t n_states) const {
    for (State x : states_)
      if (x >= n_states) throw InputError("situation refers to state " + std::to_string(x));
  }

  auto operator<=>(const Situation&) const = default;
  bool operator==(const Situation&) const = default;

 private:
  std::vector<State> states_;
};

// A gamble on paths that depends only on the first `depth` states.
class NGamble {
 public:
  NGamble(std::size_t n_states, std::size_t depth, std::vector<double> values)
      : n_states_(n_states), depth_(depth), values_(std::move(values)) {
    if (n_states_ == 0) throw InputError("gamble over an empty state space");
    const std::size_t expected = checked_power(n_states_, depth_);
    if (values_.size() != expected)
      throw InputError("gamble size mismatch: got " + std::to_string(values_.size()) +
                       " values, expected " + std::to_string(expected) + " = " +
                       std::to_string(n_states_) + "^" + std::to_string(depth_));
  }

  static NGamble constant(std::size_t n_states, double c) { return NGamble(n_states, 0, {c}); }

  // Builds a depth-n gamble from fn(const Path&) evaluated on every sequence.
  template <typename Fn>
  static NGamble tabulate(std::size_t n_states, std::size_t depth, Fn&& fn) {
    std::vector<double> values;
    values.reserve(checked_power(n_states, depth));
    for_each_sequence(n_states, depth, [&](const Path& w) { values.push_back(fn(w)); });
    return NGamble(n_states, depth, std::move(values));
  }

  std::size_t n_states() const { return n_states_; }
  std::size_t depth() const { return depth_; }
  const std::vector<double>& values() const { return values_; }

  // Value on a sequence of exactly `depth` states.
  double at(std::span<const State> seq) const { return values_[sequence_index(seq, n_states_)]; }
  double at_index(std::size_t idx) const { return values_[idx]; }

  // Value on any path at least `depth` long: read at its depth-prefix.
  double eval(std::span<const State> path) const {
    if (path.size() < depth_)
      throw InputError("path of length " + std::to_string(path.size()) +
                       " is shorter than gamble depth " + std::to_string(depth_));
    return at(path.first(depth_));
  }

  // The (depth - l(s))-measurable gamble w -> f(s·w).
  NGamble restrict_to(const Situation& s) const {
    if (s.length() > depth_) throw InputError("restriction situation is deeper than the gamble");
    s.validate(n_states_);
    const std::size_t rest = depth_ - s.length();
    const std::size_t width = checked_power(n_states_, rest);
    const std::size_t offset = sequence_index(s.states(), n_states_) * width;
    return NGamble(n_states_, rest,
                   std::vector<double>(values_.begin() + offset, values_.begin() + offset + width));
  }

  // The same gamble viewed as depth-`depth` measurable.
  NGamble lifted_to(std::size_t depth) const {
    if (depth < depth_) throw InputError("cannot lift a gamble to a smaller depth");
    const std::size_t repeat = checked_power(n_states_, depth - depth_);
    std::vector<double> out;
    out.reserve(values_.size() * repeat);
    for (double v : values_) out.insert(out.end(), repeat, v);
    return NGamble(n_states_, depth, std::move(out));
  }

  NGamble operator-() const {
    NGamble out = *this;
    for (double& v : out.values_) v = -v;
    return out;
  }

  NGamble shifted(double c) const {
    NGamble out = *this;
    for (double& v : out.values_) v += c;
    return out;
  }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  bool operator==(const NGamble&) const = default;

 private:
  std::size_t n_states_;
  std::size_t depth_;
  std::vector<double> values_;
};

// A real-valued process on all situations of length <= depth. Level k holds
// the |X|^k values for situations of length k.
class RealProcess {
 public:
  RealProcess(std::size_t n_states, std::size_t depth) : n_states_(n_states), depth_(depth) {
    levels_.reserve(depth + 1);
    for (std::size_t k = 0; k <= depth; ++k) levels_.emplace_back(checked_power(n_states, k), 0.0);
  }

  std::size_t n_states() const { return n_states_; }
  std::size_t depth() const { return depth_; }

  double at(std::span<const State> s) const {
    check(s.size());
    return levels_[s.size()][sequence_index(s, n_states_)];
  }
  double at(const Situation& s) const { return at(s.states()); }
  void set(std::span<const State> s, double v) {
    check(s.size());
    levels_[s.size()][sequence_index(s, n_states_)] = v;
  }
  void set(const Situation& s, double v) { set(s.states(), v); }

  std::vector<double>& level(std::size_t k) { return levels_.at(k); }
  const std::vector<double>& level(std::size_t k) const { return levels_.at(k); }

  bool operator==(const RealProcess&) const = default;

 private:
  void check(std::size_t len) const {
    if (len > depth_) throw InputError("situation deeper than the process");
  }

  std::size_t n_states_;
  std::size_t depth_;
  std::vector<std::vector<double>> levels_;
};

// A selection S: a gamble on X for every situation of length < depth, and
// identically zero at every deeper situation.
class Selection {
 public:
  Selection(std::size_t n_states, std::size_t depth)
      : n_states_(n_states), depth_(depth), zero_(n_states, 0.0) {
    if (n_states == 0) throw InputError("selection over an empty state space");
    levels_.reserve(depth);
    for (std::size_t k = 0; k < depth; ++k)
      levels_.emplace_back(checked_power(n_states, k) * n_states, 0.0);
  }

  std::size_t n_states() const { return n_states_; }
  std::size_t depth() const { return depth_; }

  std::span<const double> gamble(std::span<const State> s) const {
    if (s.size() >= depth_) return zero_;
    return gamble_at(s.size(), sequence_index(s, n_states_));
  }
  std::span<const double> gamble(const Situation& s) const { return gamble(s.states()); }

  // Gamble of the situation with lexicographic index `idx` at `level`.
  std::span<const double> gamble_at(std::size_t level, std::size_t idx) const {
    return std::span<const double>(levels_[level]).subspan(idx * n_states_, n_states_);
  }
  std::span<double> gamble_at(std::size_t level, std::size_t idx) {
    return std::span<double>(levels_[level]).subspan(idx * n_states_, n_states_);
  }

  void set(const Situation& s, std::span<const double> g) {
    if (s.length() >= depth_) throw InputError("selection situation beyond selection depth");
    if (g.size() != n_states_) throw InputError("selection gamble has wrong dimension");
    auto dst = gamble_at(s.length(), sequence_index(s.states(), n_states_));
    std::copy(g.begin(), g.end(), dst.begin());
  }

  const std::vector<double>& level(std::size_t k) const { return levels_.at(k); }
  std::vector<double>& level(std::size_t k) { return levels_.at(k); }

  bool operator==(const Selection&) const = default;

 private:
  std::size_t n_states_;
  std::size_t depth_;
  std::vector<std::vector<double>> levels_;
  std::vector<double> zero_;
};

// F^S(s) = sum_{i=1..l(s)} S(s_{i-1})(s_i).
inline double capital(const Selection& sel, std::span<const State> s) {
  const std::size_t n = sel.n_states();
  const std::size_t limit = s.size() < sel.depth() ? s.size() : sel.depth();
  double total = 0.0;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < limit; ++i) {
    total += sel.level(i)[idx * n + s[i]];
    idx = idx * n + s[i];
  }
  return total;
}

inline double capital(const Selection& sel, const Situation& s) { return capital(sel, s.states()); }

// limsup_m F^S(w_m). Beyond its depth a selection bets nothing, so the
// capital is constant from there on and the limsup is F^S(w_depth).
inline double limsup_capital(const Selection& sel, std::span<const State> path) {
  if (path.size() < sel.depth())
    throw InputError("path of length " + std::to_string(path.size()) +
                     " does not determine the limsup of a depth-" + std::to_string(sel.depth()) +
                     " selection");
  return capital(sel, path.first(sel.depth()));
}

// The capital process F^S tabulated on all situations up to `depth`.
inline RealProcess capital_process(const Selection& sel, std::size_t depth) {
  const std::size_t n = sel.n_states();
  RealProcess out(n, depth);
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& parent = out.level(k);
    auto& child = out.level(k + 1);
    for (std::size_t i = 0; i < parent.size(); ++i) {
      for (State x = 0; x < n; ++x) {
        const double bet = k < sel.depth() ? sel.gamble_at(k, i)[x] : 0.0;
        child[i * n + x] = parent[i] + bet;
      }
    }
  }
  return out;
}

}  // namespace icek
