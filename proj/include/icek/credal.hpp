#pragma once

// Probability mass functions on a finite state space and credal sets given
// by finitely many extreme points. A credal set induces a coherent lower
// expectation: the minimum of the expectations over its extreme points.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icek/errors.hpp"

namespace icek {

// A gamble on the state space: one real per state.
using Gamble = std::vector<double>;

// Tolerance for validating probability constraints on input.
inline constexpr double kValidationTol = 1e-12;
// Tolerance for numerical comparisons of computed quantities.
inline constexpr double kComputeTol = 1e-9;

class Pmf {
 public:
  explicit Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InputError("pmf: empty probability vector");
    double total = 0.0;
    for (std::size_t x = 0; x < probs_.size(); ++x) {
      const double p = probs_[x];
      if (!std::isfinite(p)) throw InputError("pmf: non-finite entry at state " + std::to_string(x));
      if (p < -kValidationTol) throw InputError("pmf: negative entry at state " + std::to_string(x));
      total += p;
    }
    if (std::abs(total - 1.0) > kValidationTol)
      throw InputError("pmf: entries sum to " + std::to_string(total) + ", expected 1");
  }

  // Point mass on `state`.
  static Pmf degenerate(std::size_t n_states, std::size_t state) {
    std::vector<double> p(n_states, 0.0);
    p.at(state) = 1.0;
    return Pmf(std::move(p));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t x) const { return probs_[x]; }
  const std::vector<double>& probs() const { return probs_; }

  double expectation(std::span<const double> f) const {
    double sum = 0.0;
    for (std::size_t x = 0; x < probs_.size(); ++x) sum += probs_[x] * f[x];
    return sum;
  }

  bool operator==(const Pmf&) const = default;

 private:
  std::vector<double> probs_;
};

class CredalSet {
 public:
  explicit CredalSet(std::vector<Pmf> extremes) : extremes_(std::move(extremes)) {
    if (extremes_.empty()) throw InputError("credal set: no extreme points");
    for (const Pmf& p : extremes_)
      if (p.size() != extremes_.front().size())
        throw InputError("credal set: extreme points of different dimension");
  }

  std::size_t dim() const { return extremes_.front().size(); }
  const std::vector<Pmf>& extremes() const { return extremes_; }
  bool is_precise() const { return extremes_.size() == 1; }

  double lower_expectation(std::span<const double> f) const {
    check_dim(f.size());
    double low = std::numeric_limits<double>::infinity();
    for (const Pmf& p : extremes_) {
      const double e = p.expectation(f);
      if (e < low) low = e;
    }
    return low;
  }

  // Conjugate: upper(f) = -lower(-f).
  double upper_expectation(std::span<const double> f) const {
    check_dim(f.size());
    Gamble neg(f.begin(), f.end());
    for (double& v : neg) v = -v;
    return -lower_expectation(neg);
  }

  // Convex combination of the extreme points; weights must form a pmf over
  // the extremes.
  Pmf mixture(std::span<const double> weights) const {
    if (weights.size() != extremes_.size())
      throw InputError("credal set: mixture weights do not match the number of extremes");
    std::vector<double> out(dim(), 0.0);
    for (std::size_t k = 0; k < extremes_.size(); ++k)
      for (std::size_t x = 0; x < dim(); ++x) out[x] += weights[k] * extremes_[k][x];
    return Pmf(std::move(out));
  }

  bool operator==(const CredalSet&) const = default;

 private:
  void check_dim(std::size_t n) const {
    if (n != dim())
      throw InputError("credal set: gamble has " + std::to_string(n) + " entries, expected " +
                       std::to_string(dim()));
  }

  std::vector<Pmf> extremes_;
};

inline double lower_expectation(const CredalSet& k, std::span<const double> f) {
  return k.lower_expectation(f);
}

inline double upper_expectation(const CredalSet& k, std::span<const double> f) {
  return k.upper_expectation(f);
}

inline CredalSet make_vacuous(std::size_t n_states) {
  if (n_states == 0) throw InputError("vacuous model needs at least one state");
  std::vector<Pmf> extremes;
  extremes.reserve(n_states);
  for (std::size_t x = 0; x < n_states; ++x) extremes.push_back(Pmf::degenerate(n_states, x));
  return CredalSet(std::move(extremes));
}

inline CredalSet make_precise(Pmf p) { return CredalSet({std::move(p)}); }

// Linear-vacuous (epsilon-contamination) model: mixtures of p with any
// distribution, contamination weight eps.
inline CredalSet make_linear_vacuous(const Pmf& p, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InputError("linear-vacuous: eps must lie in [0,1]");
  if (eps == 0.0) return make_precise(p);
  const std::size_t n = p.size();
  std::vector<Pmf> extremes;
  extremes.reserve(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<double> q(n);
    for (std::size_t y = 0; y < n; ++y) q[y] = (1.0 - eps) * p[y] + (y == x ? eps : 0.0);
    extremes.emplace_back(std::move(q));
  }
  return CredalSet(std::move(extremes));
}

}  // namespace icek
