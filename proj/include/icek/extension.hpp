#pragma once

// Natural extensions of n-measurable gambles, and of monotone limits of such
// gambles (reachability and safety events), for imprecise process models.
//
// For an n-measurable gamble the Williams and Ville-Vovk-Shafer extensions
// coincide and are computed by backward recursion through the local models:
//   h_n = f,  h_k(s) = lower_expectation(local_model(s), h_{k+1}(s.)),
// with the answer h_0(initial situation). The linear program in witness.hpp
// computes the same number from the defining supremum over selections.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "icek/chain.hpp"
#include "icek/credal.hpp"
#include "icek/errors.hpp"
#include "icek/tree.hpp"

namespace icek {

// A subset of the state space.
class StateSet {
 public:
  StateSet(std::size_t n_states, std::initializer_list<State> members) : in_(n_states, false) {
    for (State x : members) add(x);
  }
  StateSet(std::size_t n_states, std::span<const State> members) : in_(n_states, false) {
    for (State x : members) add(x);
  }
  static StateSet all(std::size_t n_states) {
    StateSet s(n_states, {});
    s.in_.assign(n_states, true);
    return s;
  }

  std::size_t n_states() const { return in_.size(); }
  bool contains(State x) const { return in_[x]; }
  bool is_full() const { return std::find(in_.begin(), in_.end(), false) == in_.end(); }
  StateSet complement() const {
    StateSet out = *this;
    out.in_.flip();
    return out;
  }

  bool operator==(const StateSet&) const = default;

 private:
  void add(State x) {
    if (x >= in_.size()) throw InputError("state set member out of range");
    in_[x] = true;
  }

  std::vector<bool> in_;
};

// All levels h_0..h_n of the backward recursion, as a process.
inline RealProcess backward_recursion(const ChainModel& m, const NGamble& f) {
  const std::size_t n_states = m.n_states();
  if (f.n_states() != n_states) throw InputError("gamble and model have different state counts");
  const std::size_t n = f.depth();
  RealProcess h(n_states, n);
  h.level(n) = f.values();
  Path s;
  for (std::size_t k = n; k-- > 0;) {
    const auto& next = h.level(k + 1);
    auto& cur = h.level(k);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      s = sequence_at(i, k, n_states);
      std::span<const double> children(next.data() + i * n_states, n_states);
      cur[i] = m.local_model(s).lower_expectation(children);
    }
  }
  return h;
}

// Williams natural extension of an n-measurable gamble.
inline double williams_nmeasurable(const ChainModel& m, const NGamble& f) {
  return backward_recursion(m, f).level(0)[0];
}

// Ville-Vovk-Shafer natural extension of an n-measurable gamble. Both
// extensions agree on n-measurable gambles, so this shares the recursion.
inline double vvs_nmeasurable(const ChainModel& m, const NGamble& f) {
  return williams_nmeasurable(m, f);
}

// Conjugate upper extension: -E(-f).
inline double upper_nmeasurable(const ChainModel& m, const NGamble& f) {
  return -williams_nmeasurable(m, -f);
}

// Indicator of "some x_i with i <= n lies in A". At n = 0 this is 0.
inline NGamble reach_gamble(const StateSet& a, std::size_t n) {
  return NGamble::tabulate(a.n_states(), n, [&](const Path& w) {
    for (State x : w)
      if (a.contains(x)) return 1.0;
    return 0.0;
  });
}

// Indicator of "every x_i with i <= n lies in B". At n = 0 this is 1.
inline NGamble safety_gamble(const StateSet& b, std::size_t n) {
  return NGamble::tabulate(b.n_states(), n, [&](const Path& w) {
    for (State x : w)
      if (!b.contains(x)) return 0.0;
    return 1.0;
  });
}

// f_1..f_horizon of the reachability event for A.
inline std::vector<NGamble> reach_sequence(const ChainModel& m, const StateSet& a,
                                           std::size_t horizon) {
  if (a.n_states() != m.n_states()) throw InputError("state set does not match the model");
  if (horizon == 0) throw InputError("horizon must be at least 1");
  std::vector<NGamble> out;
  for (std::size_t n = 1; n <= horizon; ++n) out.push_back(reach_gamble(a, n));
  return out;
}

// f_1..f_horizon of the safety event for B.
inline std::vector<NGamble> safety_sequence(const ChainModel& m, const StateSet& b,
                                            std::size_t horizon) {
  if (b.n_states() != m.n_states()) throw InputError("state set does not match the model");
  if (horizon == 0) throw InputError("horizon must be at least 1");
  std::vector<NGamble> out;
  for (std::size_t n = 1; n <= horizon; ++n) out.push_back(safety_gamble(b, n));
  return out;
}

enum class Direction { NonDecreasing, NonIncreasing };

inline const char* to_string(Direction d) {
  return d == Direction::NonDecreasing ? "non-decreasing" : "non-increasing";
}

struct LimitOptions {
  double tol = 1e-6;
  std::size_t max_horizon = 64;
  // Number of consecutive per-horizon changes below tol that count as converged.
  std::size_t window = 3;
};

struct LimitResult {
  double value = 0.0;
  // Last horizon evaluated; trace[k] is the extension at horizon k+1.
  std::size_t horizon = 0;
  std::vector<double> trace;
  bool converged = false;
  // First horizon of the window that triggered convergence (0 if none).
  std::size_t stable_from = 0;
  Direction direction = Direction::NonDecreasing;
  // Set for non-increasing limits: the value is the Ville-Vovk-Shafer
  // extension of the limit and need not equal its Williams extension.
  bool vvs_only = false;
};

namespace detail {

// Drives per-horizon evaluation and the windowed stopping rule.
template <typename EvalAt>
LimitResult run_limit(Direction dir, const LimitOptions& opt, EvalAt&& eval_at) {
  if (opt.max_horizon == 0) throw InputError("max_horizon must be at least 1");
  if (opt.window == 0) throw InputError("convergence window must be at least 1");
  LimitResult r;
  r.direction = dir;
  r.vvs_only = dir == Direction::NonIncreasing;
  std::size_t quiet = 0;
  for (std::size_t n = 1; n <= opt.max_horizon; ++n) {
    r.trace.push_back(eval_at(n));
    r.horizon = n;
    if (n >= 2) {
      quiet = std::abs(r.trace[n - 1] - r.trace[n - 2]) < opt.tol ? quiet + 1 : 0;
      if (quiet >= opt.window) {
        r.converged = true;
        r.stable_from = n - opt.window;
        break;
      }
    }
  }
  r.value = r.trace.back();
  return r;
}

inline void check_monotone_step(const NGamble& prev, const NGamble& next, Direction dir,
                                std::size_t n) {
  if (next.depth() < prev.depth())
    throw InputError("sequence element " + std::to_string(n) + " has decreasing depth");
  const NGamble lifted = prev.lifted_to(next.depth());
  for (std::size_t i = 0; i < lifted.values().size(); ++i) {
    const double diff = next.at_index(i) - lifted.at_index(i);
    const bool bad = dir == Direction::NonDecreasing ? diff < -kValidationTol : diff > kValidationTol;
    if (bad)
      throw InputError("sequence is not " + std::string(to_string(dir)) + " between elements " +
                       std::to_string(n - 1) + " and " + std::to_string(n));
  }
}

template <typename Gen>
LimitResult monotone_limit(const ChainModel& m, Gen&& gen, Direction dir, const LimitOptions& opt) {
  std::vector<NGamble> last;
  return run_limit(dir, opt, [&](std::size_t n) {
    NGamble f = gen(n);
    if (f.n_states() != m.n_states()) throw InputError("generated gamble has wrong state count");
    if (!last.empty()) check_monotone_step(last.front(), f, dir, n);
    const double v = williams_nmeasurable(m, f);
    last.assign(1, std::move(f));
    return v;
  });
}

// Extension at horizon n of a first-passage indicator, for Markov models.
// The value in a situation depends only on its length, its last state and
// whether the stopping set has been entered; once entered the indicator is
// frozen at `stopped_value`, and a path still running at depth n scores
// `running_value`.
inline double markov_first_passage(const ChainModel& m, const StateSet& stop, double stopped_value,
                                   double running_value, std::size_t n) {
  const std::size_t ns = m.n_states();
  Gamble g(ns, running_value);  // value at length k for a running path ending in x
  Gamble next(ns);
  for (std::size_t k = n; k-- > 0;) {
    for (State y = 0; y < ns; ++y) next[y] = stop.contains(y) ? stopped_value : g[y];
    if (k == 0) return m.initial().lower_expectation(next);
    const LowerTransitionOperator& op = m.transition(k);
    for (State x = 0; x < ns; ++x) g[x] = stop.contains(x) ? stopped_value : op[x].lower_expectation(next);
  }
  return m.initial().lower_expectation(g);  // n == 0
}

// Largest horizon whose dense gambles stay within the size budget.
inline std::size_t dense_horizon_cap(std::size_t n_states) {
  std::size_t h = 0;
  std::size_t size = 1;
  while (n_states > 1 && size <= (std::size_t{1} << 20) / n_states) {
    size *= n_states;
    ++h;
  }
  return n_states == 1 ? std::size_t{1} << 20 : h;
}

}  // namespace detail

using GambleSequence = std::function<NGamble(std::size_t)>;

// Limit of E(f_n) for a non-decreasing sequence of n-measurable gambles,
// f_n = gen(n) for n >= 1. For such sequences the Williams and
// Ville-Vovk-Shafer extensions of the pointwise limit coincide with this
// limit.
inline LimitResult monotone_limit_nondecreasing(const ChainModel& m, const GambleSequence& gen,
                                                const LimitOptions& opt = {}) {
  return detail::monotone_limit(m, gen, Direction::NonDecreasing, opt);
}

// Limit of E(f_n) for a non-increasing sequence. The limit is the
// Ville-Vovk-Shafer extension of the pointwise limit only (vvs_only).
inline LimitResult monotone_limit_nonincreasing(const ChainModel& m, const GambleSequence& gen,
                                                const LimitOptions& opt = {}) {
  return detail::monotone_limit(m, gen, Direction::NonIncreasing, opt);
}

// Lower probability of ever reaching A. Markov models use the compressed
// recursion; general models evaluate dense gambles up to a size budget.
inline LimitResult reach_limit(const ChainModel& m, const StateSet& a, const LimitOptions& opt = {}) {
  if (a.n_states() != m.n_states()) throw InputError("state set does not match the model");
  if (m.is_markov()) {
    return detail::run_limit(Direction::NonDecreasing, opt, [&](std::size_t n) {
      return detail::markov_first_passage(m, a, 1.0, 0.0, n);
    });
  }
  LimitOptions capped = opt;
  capped.max_horizon = std::min(opt.max_horizon, detail::dense_horizon_cap(m.n_states()));
  return monotone_limit_nondecreasing(m, [&](std::size_t n) { return reach_gamble(a, n); }, capped);
}

// Lower probability of staying in B forever.
inline LimitResult safety_limit(const ChainModel& m, const StateSet& b, const LimitOptions& opt = {}) {
  if (b.n_states() != m.n_states()) throw InputError("state set does not match the model");
  if (m.is_markov()) {
    return detail::run_limit(Direction::NonIncreasing, opt, [&](std::size_t n) {
      return detail::markov_first_passage(m, b.complement(), 0.0, 1.0, n);
    });
  }
  LimitOptions capped = opt;
  capped.max_horizon = std::min(opt.max_horizon, detail::dense_horizon_cap(m.n_states()));
  return monotone_limit_nonincreasing(m, [&](std::size_t n) { return safety_gamble(b, n); }, capped);
}

// ---------------------------------------------------------------------------
// Classical oracles for precise chains.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_stochastic(const Matrix& p, std::span<const double> init) {
  const std::size_t n = p.size();
  if (n == 0) throw InputError("empty transition matrix");
  if (init.size() != n) throw InputError("initial distribution has wrong dimension");
  for (const auto& row : p) {
    if (row.size() != n) throw InputError("transition matrix is not square");
    static_cast<void>(Pmf(row));
  }
  static_cast<void>(Pmf(std::vector<double>(init.begin(), init.end())));
}

// Solves a x = rhs in place by Gaussian elimination with partial pivoting.
// Returns false if a pivot is numerically zero.
inline bool solve_dense(Matrix a, std::vector<double>& rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-14) return false;
    std::swap(a[piv], a[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      rhs[r] -= factor * rhs[col];
    }
  }
  for (std::size_t r = 0; r < n; ++r) rhs[r] /= a[r][r];
  return true;
}

}  // namespace detail

// Probability that a precise chain ever visits A (time 1 included).
inline double precise_reach_probability(const Matrix& p, std::span<const double> init,
                                        const StateSet& a) {
  detail::check_stochastic(p, init);
  const std::size_t n = p.size();
  if (a.n_states() != n) throw InputError("state set does not match the matrix");

  // States with a positive-probability route into A.
  std::vector<bool> reaches(n, false);
  for (State x = 0; x < n; ++x) reaches[x] = a.contains(x);
  for (bool grew = true; grew;) {
    grew = false;
    for (State x = 0; x < n; ++x) {
      if (reaches[x]) continue;
      for (State y = 0; y < n; ++y) {
        if (p[x][y] > 0.0 && reaches[y]) {
          reaches[x] = grew = true;
          break;
        }
      }
    }
  }

  std::vector<State> unknown;
  for (State x = 0; x < n; ++x)
    if (reaches[x] && !a.contains(x)) unknown.push_back(x);

  std::vector<double> hit(n, 0.0);
  for (State x = 0; x < n; ++x) hit[x] = a.contains(x) ? 1.0 : 0.0;

  // h = P_UU h + P_UA 1 on the unknown states.
  Matrix sys(unknown.size(), std::vector<double>(unknown.size(), 0.0));
  std::vector<double> rhs(unknown.size(), 0.0);
  for (std::size_t i = 0; i < unknown.size(); ++i) {
    for (std::size_t j = 0; j < unknown.size(); ++j)
      sys[i][j] = (i == j ? 1.0 : 0.0) - p[unknown[i]][unknown[j]];
    for (State y = 0; y < n; ++y)
      if (a.contains(y)) rhs[i] += p[unknown[i]][y];
  }
  if (detail::solve_dense(sys, rhs)) {
    for (std::size_t i = 0; i < unknown.size(); ++i) hit[unknown[i]] = rhs[i];
  } else {
    // Minimal non-negative solution by value iteration from zero.
    std::vector<double> h = hit;
    for (std::size_t step = 0; step < 1'000'000; ++step) {
      double change = 0.0;
      for (State x : unknown) {
        double v = 0.0;
        for (State y = 0; y < n; ++y) v += p[x][y] * h[y];
        change = std::max(change, std::abs(v - h[x]));
        h[x] = v;
      }
      if (change < 1e-10) break;
    }
    hit = h;
  }

  double total = 0.0;
  for (State x = 0; x < n; ++x) total += init[x] * hit[x];
  return total;
}

// Probability that a precise chain stays in B forever, as the limit of the
// probabilities of staying in B through time n.
inline double precise_safety_probability(const Matrix& p, std::span<const double> init,
                                         const StateSet& b) {
  detail::check_stochastic(p, init);
  const std::size_t n = p.size();
  if (b.n_states() != n) throw InputError("state set does not match the matrix");
  // stay[x]: probability of remaining in B for the next k steps from x in B.
  std::vector<double> stay(n), next(n);
  for (State x = 0; x < n; ++x) stay[x] = b.contains(x) ? 1.0 : 0.0;
  auto total = [&] {
    double t = 0.0;
    for (State x = 0; x < n; ++x) t += init[x] * stay[x];
    return t;
  };
  double prev = total();
  for (std::size_t step = 0; step < 1'000'000; ++step) {
    for (State x = 0; x < n; ++x) {
      double v = 0.0;
      if (b.contains(x))
        for (State y = 0; y < n; ++y) v += p[x][y] * stay[y];
      next[x] = v;
    }
    stay.swap(next);
    const double cur = total();
    if (std::abs(cur - prev) < 1e-10) return cur;
    prev = cur;
  }
  return prev;
}

// Transition matrix and initial pmf of a stationary model whose credal sets
// are all singletons.
struct PreciseChain {
  Matrix transition;
  std::vector<double> initial;
};

inline PreciseChain as_precise_chain(const ChainModel& m) {
  const auto* st = std::get_if<StationaryDynamics>(&m.dynamics());
  if (st == nullptr) throw InputError("precise oracle requires stationary dynamics");
  if (!m.initial().is_precise()) throw InputError("precise oracle requires a precise initial model");
  PreciseChain out{{}, m.initial().extremes().front().probs()};
  for (const CredalSet& k : st->op.per_state()) {
    if (!k.is_precise()) throw InputError("precise oracle requires singleton credal sets");
    out.transition.push_back(k.extremes().front().probs());
  }
  return out;
}

}  // namespace icek
