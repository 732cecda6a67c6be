#pragma once

// Imprecise process models: an initial credal set plus a local model for
// every non-initial situation. Markov models (stationary or time-varying)
// read the local model off a lower transition operator indexed by the last
// state; general models use an explicit situation-indexed map.

#include <algorithm>
#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "icek/credal.hpp"
#include "icek/errors.hpp"
#include "icek/tree.hpp"

namespace icek {

using Matrix = std::vector<std::vector<double>>;

// One credal set per current state; apply(g)(x) is the conditional lower
// expectation of g on the next state given the current state x.
class LowerTransitionOperator {
 public:
  explicit LowerTransitionOperator(std::vector<CredalSet> per_state)
      : per_state_(std::move(per_state)) {
    if (per_state_.empty()) throw InputError("transition operator without states");
    for (const CredalSet& k : per_state_)
      if (k.dim() != per_state_.size())
        throw InputError("transition operator: credal set dimension differs from state count");
  }

  static LowerTransitionOperator vacuous(std::size_t n_states) {
    return LowerTransitionOperator(std::vector<CredalSet>(n_states, make_vacuous(n_states)));
  }

  static LowerTransitionOperator precise(const Matrix& rows) {
    std::vector<CredalSet> sets;
    sets.reserve(rows.size());
    for (const auto& row : rows) sets.push_back(make_precise(Pmf(row)));
    return LowerTransitionOperator(std::move(sets));
  }

  std::size_t size() const { return per_state_.size(); }
  const CredalSet& operator[](State x) const { return per_state_.at(x); }
  const std::vector<CredalSet>& per_state() const { return per_state_; }

  Gamble apply(std::span<const double> g) const {
    Gamble out(per_state_.size());
    for (std::size_t x = 0; x < per_state_.size(); ++x) out[x] = per_state_[x].lower_expectation(g);
    return out;
  }

  bool operator==(const LowerTransitionOperator&) const = default;

 private:
  std::vector<CredalSet> per_state_;
};

struct StationaryDynamics {
  LowerTransitionOperator op;
  bool operator==(const StationaryDynamics&) const = default;
};

// ops[k] is the operator used in situations of length k+1. Beyond the end
// of the list the last operator keeps being used.
struct TimeVaryingDynamics {
  std::vector<LowerTransitionOperator> ops;
  bool operator==(const TimeVaryingDynamics&) const = default;
};

// Non-Markov local models. Situations not listed use `fallback`. The
// initial situation is never listed; its model is the chain's initial model.
struct GeneralDynamics {
  std::map<Situation, CredalSet> local;
  CredalSet fallback;
  bool operator==(const GeneralDynamics&) const = default;
};

using Dynamics = std::variant<StationaryDynamics, TimeVaryingDynamics, GeneralDynamics>;

class ChainModel {
 public:
  ChainModel(std::vector<std::string> states, CredalSet initial, Dynamics dynamics)
      : states_(std::move(states)), initial_(std::move(initial)), dynamics_(std::move(dynamics)) {
    validate();
  }

  // Convenience constructor with states named "0", "1", ...
  ChainModel(CredalSet initial, Dynamics dynamics) : initial_(std::move(initial)), dynamics_(std::move(dynamics)) {
    states_ = default_names(initial_.dim());
    validate();
  }

  std::size_t n_states() const { return states_.size(); }
  const std::vector<std::string>& states() const { return states_; }
  const CredalSet& initial() const { return initial_; }
  const Dynamics& dynamics() const { return dynamics_; }

  bool is_markov() const { return !std::holds_alternative<GeneralDynamics>(dynamics_); }

  // Local model E(.|s); E(.|initial situation) is the initial model.
  const CredalSet& local_model(std::span<const State> s) const {
    if (s.empty()) return initial_;
    if (const auto* g = std::get_if<GeneralDynamics>(&dynamics_)) {
      auto it = g->local.find(Situation(std::vector<State>(s.begin(), s.end())));
      return it == g->local.end() ? g->fallback : it->second;
    }
    return transition(s.size())[s.back()];
  }
  const CredalSet& local_model(const Situation& s) const { return local_model(s.states()); }

  // T_time: the operator applied in situations of length `time` (>= 1).
  const LowerTransitionOperator& transition(std::size_t time) const {
    if (time == 0) throw InputError("transition operators are indexed from time 1");
    if (const auto* st = std::get_if<StationaryDynamics>(&dynamics_)) return st->op;
    if (const auto* tv = std::get_if<TimeVaryingDynamics>(&dynamics_))
      return tv->ops[std::min(time - 1, tv->ops.size() - 1)];
    throw UnsupportedOperation(
        "general dynamics have no lower transition operator; use local_model per situation");
  }

  Gamble apply_T(std::size_t time, std::span<const double> g) const {
    if (g.size() != n_states()) throw InputError("apply_T: gamble dimension mismatch");
    return transition(time).apply(g);
  }

  // The model conditional on `s`: E'(.|t) = E(.|s·t).
  ChainModel reroot(const Situation& s) const {
    s.validate(n_states());
    if (s.is_initial()) return *this;
    CredalSet init = local_model(s);
    if (const auto* tv = std::get_if<TimeVaryingDynamics>(&dynamics_)) {
      const std::size_t first = std::min(s.length(), tv->ops.size() - 1);
      return ChainModel(states_, std::move(init),
                        TimeVaryingDynamics{{tv->ops.begin() + first, tv->ops.end()}});
    }
    if (const auto* g = std::get_if<GeneralDynamics>(&dynamics_)) {
      GeneralDynamics out{{}, g->fallback};
      for (const auto& [key, k] : g->local) {
        if (key.length() > s.length() && s.is_prefix_of(key.states())) {
          out.local.emplace(
              Situation(std::vector<State>(key.states().begin() + s.length(), key.states().end())),
              k);
        }
      }
      return ChainModel(states_, std::move(init), std::move(out));
    }
    return ChainModel(states_, std::move(init), dynamics_);
  }

  bool operator==(const ChainModel&) const = default;

 private:
  static std::vector<std::string> default_names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
  }

  void validate() const {
    const std::size_t n = states_.size();
    if (n == 0) throw InputError("model without states");
    auto check = [n](const CredalSet& k, const std::string& where) {
      if (k.dim() != n) throw InputError(where + ": credal set dimension differs from state count");
    };
    check(initial_, "initial model");
    std::visit(
        [&](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, StationaryDynamics>) {
            if (d.op.size() != n) throw InputError("transition operator has wrong state count");
          } else if constexpr (std::is_same_v<D, TimeVaryingDynamics>) {
            if (d.ops.empty()) throw InputError("time-varying dynamics without operators");
            for (const auto& op : d.ops)
              if (op.size() != n) throw InputError("transition operator has wrong state count");
          } else {
            check(d.fallback, "default local model");
            for (const auto& [s, k] : d.local) {
              if (s.is_initial())
                throw InputError("general dynamics may not list the initial situation");
              s.validate(n);
              check(k, "local model");
            }
          }
        },
        dynamics_);
  }

  std::vector<std::string> states_;
  CredalSet initial_;
  Dynamics dynamics_;
};

// A precise model inside `m`: every credal set is replaced by a random
// convex combination of its extreme points (exponential weights).
template <typename Rng>
ChainModel sample_precise_member(const ChainModel& m, Rng& rng) {
  auto draw = [&rng](const CredalSet& k) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> w(k.extremes().size());
    double total = 0.0;
    for (double& v : w) total += (v = expo(rng));
    for (double& v : w) v /= total;
    std::vector<double> p = k.mixture(w).probs();
    double sum = 0.0;
    for (double v : p) sum += v;
    for (double& v : p) v /= sum;
    return make_precise(Pmf(std::move(p)));
  };
  auto draw_op = [&](const LowerTransitionOperator& op) {
    std::vector<CredalSet> sets;
    for (const CredalSet& k : op.per_state()) sets.push_back(draw(k));
    return LowerTransitionOperator(std::move(sets));
  };
  CredalSet init = draw(m.initial());
  if (const auto* st = std::get_if<StationaryDynamics>(&m.dynamics()))
    return ChainModel(m.states(), std::move(init), StationaryDynamics{draw_op(st->op)});
  if (const auto* tv = std::get_if<TimeVaryingDynamics>(&m.dynamics())) {
    TimeVaryingDynamics out;
    for (const auto& op : tv->ops) out.ops.push_back(draw_op(op));
    return ChainModel(m.states(), std::move(init), std::move(out));
  }
  const auto& g = std::get<GeneralDynamics>(m.dynamics());
  GeneralDynamics out{{}, draw(g.fallback)};
  for (const auto& [s, k] : g.local) out.local.emplace(s, draw(k));
  return ChainModel(m.states(), std::move(init), std::move(out));
}

}  // namespace icek
