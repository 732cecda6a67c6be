#pragma once

// Selection certificates for natural extensions, and the constructive
// devices that turn one selection into another: truncation, greedy
// non-negative paths, first-hit cutoffs and stitching of a sequence of
// selections.
//
// A certificate (alpha, S, n) asserts that S is almost-desirable
// (E(S(s)|s) >= 0 in every situation) and that f - alpha >= F^S_n, which
// makes alpha a lower bound for the Williams extension of f.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icek/chain.hpp"
#include "icek/credal.hpp"
#include "icek/errors.hpp"
#include "icek/extension.hpp"
#include "icek/simplex.hpp"
#include "icek/tree.hpp"

namespace icek {

struct Certificate {
  double alpha = 0.0;
  Selection selection;
  std::size_t horizon = 0;

  bool operator==(const Certificate&) const = default;
};

struct DesirabilityViolation {
  Situation situation;
  double lower = 0.0;
};

struct DesirabilityReport {
  std::vector<DesirabilityViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Thrown when a construction meets a situation whose gamble has negative
// lower expectation, i.e. the selection was not almost-desirable.
class NotAlmostDesirable : public InputError {
 public:
  NotAlmostDesirable(Situation where, double lower)
      : InputError("selection is not almost-desirable at a situation of length " +
                   std::to_string(where.length()) + " (lower expectation " + std::to_string(lower) +
                   ")"),
        situation(std::move(where)), lower(lower) {}

  Situation situation;
  double lower;
};

inline DesirabilityReport is_almost_desirable(const ChainModel& m, const Selection& sel) {
  if (sel.n_states() != m.n_states()) throw InputError("selection and model have different state counts");
  DesirabilityReport report;
  for (std::size_t k = 0; k < sel.depth(); ++k) {
    const std::size_t count = checked_power(m.n_states(), k);
    for (std::size_t i = 0; i < count; ++i) {
      const Path s = sequence_at(i, k, m.n_states());
      const double low = m.local_model(s).lower_expectation(sel.gamble_at(k, i));
      if (low < -kValidationTol) report.violations.push_back({Situation(s), low});
    }
  }
  return report;
}

// First length-n sequence w with f(w) - alpha < F^S(w) - tolerance.
inline std::optional<Path> find_domination_violation(const NGamble& f, double alpha,
                                                     const Selection& sel, std::size_t n) {
  if (n < f.depth()) throw InputError("domination horizon is shorter than the gamble depth");
  if (sel.n_states() != f.n_states()) throw InputError("selection and gamble have different state counts");
  const RealProcess cap = capital_process(sel, n);
  const NGamble lifted = f.lifted_to(n);
  const auto& leaves = cap.level(n);
  for (std::size_t i = 0; i < leaves.size(); ++i)
    if (lifted.at_index(i) - alpha < leaves[i] - kValidationTol) return sequence_at(i, n, f.n_states());
  return std::nullopt;
}

// f - alpha >= F^S_n on every path.
inline bool dominates(const NGamble& f, double alpha, const Selection& sel, std::size_t n) {
  return !find_domination_violation(f, alpha, sel, n).has_value();
}

inline bool is_valid(const ChainModel& m, const NGamble& f, const Certificate& cert) {
  return cert.horizon >= f.depth() && cert.selection.n_states() == m.n_states() &&
         is_almost_desirable(m, cert.selection).ok() &&
         dominates(f, cert.alpha, cert.selection, cert.horizon);
}

// ---------------------------------------------------------------------------
// LP witness search
// ---------------------------------------------------------------------------

enum class WitnessFormulation {
  // Variables alpha and S(s)(x) for every situation shorter than the horizon,
  // with one almost-desirability row per (situation, extreme point) and one
  // domination row per length-horizon sequence.
  Direct,
  // The same program after writing S(s)(x) = V(s·x) - V(s) for a value
  // process V with V = f at the horizon, solved through its dual (one
  // variable per situation and extreme point). Much smaller; used by default.
  ValueProcess,
};

struct WitnessOptions {
  WitnessFormulation formulation = WitnessFormulation::ValueProcess;
  lp::Options lp;
};

namespace detail {

// Level offsets for situations of length < horizon stacked in one index.
inline std::vector<std::size_t> level_offsets(std::size_t n_states, std::size_t horizon) {
  std::vector<std::size_t> off(horizon + 1, 0);
  for (std::size_t k = 0; k < horizon; ++k) off[k + 1] = off[k] + checked_power(n_states, k);
  return off;
}

// Selection from a value process given on levels 0..horizon.
inline Selection selection_from_values(const std::vector<std::vector<double>>& v,
                                       std::size_t n_states) {
  const std::size_t horizon = v.size() - 1;
  Selection sel(n_states, horizon);
  for (std::size_t k = 0; k < horizon; ++k)
    for (std::size_t i = 0; i < v[k].size(); ++i) {
      auto g = sel.gamble_at(k, i);
      for (State x = 0; x < n_states; ++x) g[x] = v[k + 1][i * n_states + x] - v[k][i];
    }
  return sel;
}

inline Selection value_process_witness(const ChainModel& m, const NGamble& f_h, std::size_t horizon,
                                       const lp::Options& opt, double& lp_value) {
  const std::size_t ns = m.n_states();
  const auto off = level_offsets(ns, horizon);
  const std::size_t rows = off[horizon];

  struct Column {
    std::size_t level, index;
    const Pmf* p;
  };
  std::vector<Column> columns;
  for (std::size_t k = 0; k < horizon; ++k)
    for (std::size_t i = 0; i < off[k + 1] - off[k]; ++i)
      for (const Pmf& p : m.local_model(sequence_at(i, k, ns)).extremes()) columns.push_back({k, i, &p});

  lp::Problem prob(rows, columns.size());
  std::vector<std::size_t> basis;
  basis.reserve(rows);
  for (std::size_t col = 0; col < columns.size(); ++col) {
    const auto [k, i, p] = columns[col];
    const std::size_t row = off[k] + i;
    if (basis.size() == row) basis.push_back(col);
    prob.at(row, col) = 1.0;
    if (k + 1 < horizon) {
      for (State x = 0; x < ns; ++x) prob.at(off[k + 1] + i * ns + x, col) = -(*p)[x];
    } else {
      double c = 0.0;
      for (State x = 0; x < ns; ++x) c += (*p)[x] * f_h.at_index(i * ns + x);
      prob.c[col] = c;
    }
  }
  prob.b[0] = 1.0;

  const lp::Solution sol = lp::minimize(prob, std::move(basis), opt);
  lp_value = sol.objective;

  std::vector<std::vector<double>> v(horizon + 1);
  for (std::size_t k = 0; k < horizon; ++k)
    v[k].assign(sol.duals.begin() + off[k], sol.duals.begin() + off[k + 1]);
  v[horizon] = f_h.values();
  return selection_from_values(v, ns);
}

inline Selection direct_witness(const ChainModel& m, const NGamble& f_h, std::size_t horizon,
                                const lp::Options& opt, double& lp_value) {
  const std::size_t ns = m.n_states();
  const auto off = level_offsets(ns, horizon);
  const std::size_t n_sel = off[horizon] * ns;  // S(s)(x) variables
  const std::size_t n_free = 1 + n_sel;         // alpha first
  const double shift = f_h.min();               // alpha = alpha' + shift keeps b >= 0

  std::vector<std::pair<std::size_t, const Pmf*>> desirability;  // (situation row, extreme)
  for (std::size_t k = 0; k < horizon; ++k)
    for (std::size_t i = 0; i < off[k + 1] - off[k]; ++i)
      for (const Pmf& p : m.local_model(sequence_at(i, k, ns)).extremes())
        desirability.emplace_back(off[k] + i, &p);
  const std::size_t n_leaves = f_h.values().size();
  const std::size_t rows = desirability.size() + n_leaves;
  const std::size_t cols = 2 * n_free + rows;  // split free variables, then slacks

  lp::Problem prob(rows, cols);
  auto put_free = [&](std::size_t row, std::size_t var, double coef) {
    prob.at(row, 2 * var) += coef;
    prob.at(row, 2 * var + 1) -= coef;
  };
  for (std::size_t r = 0; r < desirability.size(); ++r) {
    const auto [sit, p] = desirability[r];
    for (State x = 0; x < ns; ++x) put_free(r, 1 + sit * ns + x, -(*p)[x]);
  }
  for (std::size_t w = 0; w < n_leaves; ++w) {
    const std::size_t r = desirability.size() + w;
    put_free(r, 0, 1.0);
    const Path seq = sequence_at(w, horizon, ns);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < horizon; ++k) {
      put_free(r, 1 + (off[k] + idx) * ns + seq[k], 1.0);
      idx = idx * ns + seq[k];
    }
    prob.b[r] = f_h.at_index(w) - shift;
  }
  for (std::size_t r = 0; r < rows; ++r) prob.at(r, 2 * n_free + r) = 1.0;
  prob.c[0] = -1.0;
  prob.c[1] = 1.0;

  std::vector<std::size_t> basis(rows);
  for (std::size_t r = 0; r < rows; ++r) basis[r] = 2 * n_free + r;
  const lp::Solution sol = lp::minimize(prob, std::move(basis), opt);
  lp_value = -sol.objective + shift;

  Selection sel(ns, horizon);
  for (std::size_t k = 0; k < horizon; ++k)
    for (std::size_t i = 0; i < off[k + 1] - off[k]; ++i) {
      auto g = sel.gamble_at(k, i);
      for (State x = 0; x < ns; ++x) {
        const std::size_t var = 1 + (off[k] + i) * ns + x;
        g[x] = sol.x[2 * var] - sol.x[2 * var + 1];
      }
    }
  return sel;
}

}  // namespace detail

// Maximizes alpha over certificates (alpha, S, horizon) for f by linear
// programming. The returned certificate is made exactly almost-desirable by
// lifting any gamble with slightly negative lower expectation, and alpha is
// then the largest value the selection dominates.
inline Certificate lp_witness_search(const ChainModel& m, const NGamble& f, std::size_t horizon,
                                     const WitnessOptions& opt = {}) {
  if (f.n_states() != m.n_states()) throw InputError("gamble and model have different state counts");
  if (horizon < f.depth()) throw InputError("witness horizon is shorter than the gamble depth");
  const std::size_t ns = m.n_states();
  if (horizon == 0) return Certificate{f.values().front(), Selection(ns, 0), 0};

  const NGamble f_h = f.lifted_to(horizon);
  double lp_value = 0.0;
  Selection sel = opt.formulation == WitnessFormulation::Direct
                      ? detail::direct_witness(m, f_h, horizon, opt.lp, lp_value)
                      : detail::value_process_witness(m, f_h, horizon, opt.lp, lp_value);

  for (std::size_t k = 0; k < horizon; ++k) {
    const std::size_t count = checked_power(ns, k);
    for (std::size_t i = 0; i < count; ++i) {
      auto g = sel.gamble_at(k, i);
      const double low = m.local_model(sequence_at(i, k, ns)).lower_expectation(g);
      if (low < 0.0)
        for (double& v : g) v -= low;
    }
  }
  const RealProcess cap = capital_process(sel, horizon);
  const auto& leaves = cap.level(horizon);
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < leaves.size(); ++w) alpha = std::min(alpha, f_h.at_index(w) - leaves[w]);

  Certificate cert{alpha, std::move(sel), horizon};
  if (std::abs(alpha - lp_value) > 1e-6 || !is_valid(m, f, cert))
    throw NumericalError("lp witness: solution does not yield a valid certificate (lp value " +
                         std::to_string(lp_value) + ", certified alpha " + std::to_string(alpha) +
                         ", horizon " + std::to_string(horizon) + ")");
  return cert;
}

// ---------------------------------------------------------------------------
// Constructions on selections
// ---------------------------------------------------------------------------

// S*(s) = S(s) below depth n and 0 from depth n on. Its limsup capital on
// any path equals the capital of S at depth n.
inline Selection truncate_selection(const Selection& sel, std::size_t n) {
  if (n > sel.depth()) throw InputError("truncation depth exceeds selection depth");
  Selection out(sel.n_states(), n);
  for (std::size_t k = 0; k < n; ++k) out.level(k) = sel.level(k);
  return out;
}

// Extends `start` to length `depth`, always moving to the smallest state on
// which the current gamble is non-negative. Along the result the capital of
// an almost-desirable selection never decreases.
inline Path greedy_nonneg_path(const ChainModel& m, const Selection& sel, const Situation& start,
                               std::size_t depth) {
  if (sel.n_states() != m.n_states()) throw InputError("selection and model have different state counts");
  start.validate(m.n_states());
  if (start.length() > depth) throw InputError("start situation is deeper than the target depth");
  Path path = start.states();
  while (path.size() < depth) {
    const auto g = sel.gamble(path);
    const double low = m.local_model(path).lower_expectation(g);
    if (low < -kValidationTol) throw NotAlmostDesirable(Situation(path), low);
    const auto it = std::find_if(g.begin(), g.end(), [](double v) { return v >= -kValidationTol; });
    if (it == g.end()) throw NotAlmostDesirable(Situation(path), low);
    path.push_back(static_cast<State>(it - g.begin()));
  }
  return path;
}

// First-hit indices n*(w) for every prefix of length `depth`.
struct CutoffData {
  std::size_t n_states = 0;
  std::size_t depth = 0;
  // Threshold -E_V(f) + eps that capital minus f_n has to reach.
  double beta = 0.0;
  // Indexed by the lexicographic index of the length-depth prefix.
  std::vector<std::optional<std::size_t>> n_star;

  bool resolved() const {
    return std::all_of(n_star.begin(), n_star.end(), [](const auto& v) { return v.has_value(); });
  }

  std::optional<std::size_t> at(std::span<const State> path) const {
    if (path.size() < depth) throw InputError("path shorter than the cutoff depth");
    return n_star[sequence_index(path.first(depth), n_states)];
  }

  // Smallest n with C_n empty, i.e. 1 + max n*(w); nullopt if unresolved.
  std::optional<std::size_t> emptiness_horizon() const {
    if (!resolved()) return std::nullopt;
    std::size_t top = 0;
    for (const auto& v : n_star) top = std::max(top, *v);
    return top + 1;
  }

  // C_n: prefixes whose first-hit index is at least n (unresolved ones count).
  std::vector<std::size_t> cutoff_set(std::size_t n) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_star.size(); ++i)
      if (!n_star[i] || *n_star[i] >= n) out.push_back(i);
    return out;
  }
};

// First n <= depth with F^S(w_n) - f_n(w) <= beta, where f_seq[n] is
// n-measurable.
inline std::optional<std::size_t> first_hit_index(const Selection& sel,
                                                  std::span<const NGamble> f_seq, double beta,
                                                  std::span<const State> path, std::size_t depth) {
  const std::size_t last = std::min(depth, f_seq.size() - 1);
  for (std::size_t n = 0; n <= last; ++n)
    if (capital(sel, path.first(n)) - f_seq[n].eval(path) <= beta + kValidationTol) return n;
  return std::nullopt;
}

// n*(w) for a non-decreasing sequence f_0, f_1, ... against the threshold
// -e_v + eps.
inline CutoffData compute_cutoff(const Selection& sel, std::span<const NGamble> f_seq, double e_v,
                                 double eps, std::size_t depth) {
  if (f_seq.empty()) throw InputError("cutoff needs a non-empty gamble sequence");
  for (std::size_t n = 0; n < f_seq.size(); ++n) {
    if (f_seq[n].n_states() != sel.n_states())
      throw InputError("gamble and selection have different state counts");
    if (f_seq[n].depth() > n) throw InputError("sequence element " + std::to_string(n) + " is not n-measurable");
    if (n > 0) detail::check_monotone_step(f_seq[n - 1], f_seq[n].lifted_to(n), Direction::NonDecreasing, n);
  }
  CutoffData cd{sel.n_states(), depth, -e_v + eps, {}};
  cd.n_star.reserve(checked_power(sel.n_states(), depth));
  for_each_sequence(sel.n_states(), depth, [&](const Path& w) {
    cd.n_star.push_back(first_hit_index(sel, f_seq, cd.beta, w, depth));
  });
  return cd;
}

// S*(s) = S(s) when every prefix through s has n* > l(s), else 0.
inline Selection cutoff_selection(const Selection& sel, const CutoffData& cd) {
  if (!cd.resolved()) throw InputError("cutoff data has unresolved prefixes");
  if (cd.n_states != sel.n_states()) throw InputError("cutoff data and selection have different state counts");
  const std::size_t ns = sel.n_states();
  const std::size_t depth = std::min(sel.depth(), cd.depth);
  Selection out(ns, depth);
  for (std::size_t k = 0; k < depth; ++k) {
    const std::size_t width = checked_power(ns, cd.depth - k);
    const std::size_t count = checked_power(ns, k);
    for (std::size_t i = 0; i < count; ++i) {
      bool keep = true;
      for (std::size_t j = i * width; j < (i + 1) * width && keep; ++j) keep = *cd.n_star[j] > k;
      if (!keep) continue;
      const auto src = sel.gamble_at(k, i);
      std::copy(src.begin(), src.end(), out.gamble_at(k, i).begin());
    }
  }
  return out;
}

// nu(s) = eps * 2^-(l(s)+2): the per-situation slack used when stitching.
inline double stitch_tolerance(double eps, std::size_t length) {
  return std::ldexp(eps, -static_cast<int>(length + 2));
}

struct StitchResult {
  Selection selection;
  // F(s): the surrogate limsup of F^{S_n}(s), as a max over the tail n >= surrogate_depth.
  RealProcess process;
  std::size_t surrogate_depth = 0;
  // chosen[k][i]: index n*(s) of the list element whose gamble S(s) copies.
  std::vector<std::vector<std::size_t>> chosen;
};

// Stitches S(s) := S_{n*(s)}(s) from a list of almost-desirable selections.
// The limsup over n is replaced by the maximum over the tail of the list
// starting at min(depth, size-1).
inline StitchResult stitch_selection(const ChainModel& m, std::span<const Selection> list, double eps,
                                     std::size_t depth) {
  if (list.empty() || list.size() < depth) throw InputError("stitching needs at least `depth` selections");
  if (!(eps > 0.0)) throw InputError("stitching needs eps > 0");
  const std::size_t ns = m.n_states();
  for (std::size_t n = 0; n < list.size(); ++n) {
    if (list[n].n_states() != ns) throw InputError("selection and model have different state counts");
    const auto report = is_almost_desirable(m, list[n]);
    if (!report.ok())
      throw NotAlmostDesirable(report.violations.front().situation, report.violations.front().lower);
  }

  const std::size_t tail = std::min(depth, list.size() - 1);
  std::vector<RealProcess> caps;
  for (std::size_t n = tail; n < list.size(); ++n) caps.push_back(capital_process(list[n], depth));
  auto cap = [&](std::size_t n, std::size_t k, std::size_t i) { return caps[n - tail].level(k)[i]; };

  StitchResult out{Selection(ns, depth), RealProcess(ns, depth), tail, {}};
  for (std::size_t k = 0; k <= depth; ++k) {
    auto& level = out.process.level(k);
    for (std::size_t i = 0; i < level.size(); ++i) {
      double f = -std::numeric_limits<double>::infinity();
      for (std::size_t n = tail; n < list.size(); ++n) f = std::max(f, cap(n, k, i));
      level[i] = f;
    }
  }

  out.chosen.resize(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& here = out.process.level(k);
    const auto& next = out.process.level(k + 1);
    const double half_nu = stitch_tolerance(eps, k) / 2.0;
    out.chosen[k].resize(here.size());
    for (std::size_t i = 0; i < here.size(); ++i) {
      // n_x(s): from here on F(sx) >= F^{S_n}(sx) - nu/2.
      std::size_t n_max = tail;
      for (State x = 0; x < ns; ++x) {
        const std::size_t child = i * ns + x;
        std::size_t n_x = list.size();
        while (n_x > tail && next[child] >= cap(n_x - 1, k + 1, child) - half_nu) --n_x;
        n_max = std::max(n_max, n_x);
      }
      std::size_t n_star = list.size();
      for (std::size_t n = n_max; n < list.size(); ++n)
        if (cap(n, k, i) >= here[i] - half_nu) {
          n_star = n;
          break;
        }
      if (n_star == list.size())
        throw NumericalError("stitching: no list element within nu/2 of the surrogate limsup at level " +
                             std::to_string(k));
      out.chosen[k][i] = n_star;
      const auto src = list[n_star].gamble(sequence_at(i, k, ns));
      std::copy(src.begin(), src.end(), out.selection.gamble_at(k, i).begin());
    }
  }

  const RealProcess stitched = capital_process(out.selection, depth);
  for (std::size_t k = 0; k <= depth; ++k)
    for (std::size_t i = 0; i < stitched.level(k).size(); ++i)
      if (stitched.level(k)[i] > out.process.level(k)[i] + eps / 2.0 + kValidationTol)
        throw NumericalError("stitching: capital exceeds F + eps/2 at level " + std::to_string(k));
  return out;
}

// ---------------------------------------------------------------------------
// Exploratory search for a gap between the two extensions on safety events
// ---------------------------------------------------------------------------

struct GapTrial {
  std::size_t trial = 0;
  LimitResult vvs;
  // Williams extension of the cylinder infimum of the safety indicator at
  // each searched horizon, from LP certificates.
  std::vector<std::size_t> horizons;
  std::vector<double> williams;
  double williams_value = 0.0;
  bool gap = false;
};

struct GapReport {
  std::vector<GapTrial> trials;
  std::size_t gap_count() const {
    return static_cast<std::size_t>(
        std::count_if(trials.begin(), trials.end(), [](const GapTrial& t) { return t.gap; }));
  }
};

// inf of the safety indicator of B over the cylinder of each length-n
// sequence. Every cylinder contains a path that leaves B unless B is the
// whole space, so this is the safety indicator when B = X and 0 otherwise.
inline NGamble safety_cylinder_infimum(const StateSet& b, std::size_t n) {
  return b.is_full() ? safety_gamble(b, n) : NGamble::constant(b.n_states(), 0.0).lifted_to(n);
}

using ModelFamily = std::function<ChainModel(std::size_t trial)>;

// For each trial model compares the Ville-Vovk-Shafer limit E_V(f) of the
// safety indicator f with its Williams extension. Because F^S_n is
// n-measurable, f - alpha >= F^S_n holds iff the cylinder infimum g_n of f
// satisfies it, so E_W(f) = sup_n E_W(g_n); the g_n are certified by LP at
// the given horizons. A gap is reported when E_V converged and exceeds the
// best certified E_W by more than `threshold`.
inline GapReport williams_gap_search(const ModelFamily& family, const StateSet& b,
                                     std::span<const std::size_t> horizons, std::size_t trials,
                                     const LimitOptions& opt = {}, double threshold = 0.01) {
  GapReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const ChainModel m = family(t);
    GapTrial row;
    row.trial = t;
    row.vvs = safety_limit(m, b, opt);
    row.williams_value = -std::numeric_limits<double>::infinity();
    for (std::size_t n : horizons) {
      const double a = lp_witness_search(m, safety_cylinder_infimum(b, n), n).alpha;
      row.horizons.push_back(n);
      row.williams.push_back(a);
      row.williams_value = std::max(row.williams_value, a);
    }
    row.gap = !horizons.empty() && row.vvs.converged && row.vvs.value - row.williams_value > threshold;
    report.trials.push_back(std::move(row));
  }
  return report;
}

}  // namespace icek
