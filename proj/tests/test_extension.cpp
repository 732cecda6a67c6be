#include <gtest/gtest.h>

#include <cmath>

#include "icek/extension.hpp"
#include "support/random_instances.hpp"

using namespace icek;
using icek::testing::Rng;

namespace {

// Lower expectation of f given s, by recursion on situations.
double nested(const ChainModel& m, const NGamble& f, const Path& s) {
  if (s.size() == f.depth()) return f.at(s);
  Gamble child(m.n_states());
  for (State x = 0; x < m.n_states(); ++x) {
    Path c = s;
    c.push_back(x);
    child[x] = nested(m, f, c);
  }
  return m.local_model(s).lower_expectation(child);
}

double nested(const ChainModel& m, const NGamble& f) { return nested(m, f, {}); }

// P(some x_i in A, i <= n) for a precise chain by propagating the
// not-yet-hit mass.
double matrix_reach(const Matrix& p, const std::vector<double>& init, const StateSet& a, std::size_t n) {
  std::vector<double> alive(p.size());
  double hit = 0.0;
  for (State x = 0; x < p.size(); ++x) (a.contains(x) ? hit : alive[x]) += init[x];
  for (std::size_t t = 1; t < n; ++t) {
    std::vector<double> next(p.size(), 0.0);
    for (State x = 0; x < p.size(); ++x)
      for (State y = 0; y < p.size(); ++y) next[y] += alive[x] * p[x][y];
    alive.assign(p.size(), 0.0);
    for (State y = 0; y < p.size(); ++y) (a.contains(y) ? hit : alive[y]) += next[y];
  }
  return hit;
}

}  // namespace

TEST(Extension, OneStepIsInitialModel) {
  Rng rng(1);
  const ChainModel m = icek::testing::random_stationary(rng, 3);
  const NGamble f = icek::testing::random_gamble(rng, 3, 1);
  EXPECT_EQ(williams_nmeasurable(m, f), m.initial().lower_expectation(f.values()));
  EXPECT_EQ(vvs_nmeasurable(m, f), williams_nmeasurable(m, f));
  EXPECT_EQ(williams_nmeasurable(m, NGamble::constant(3, 0.75)), 0.75);
}

TEST(Extension, VacuousTakesWorstPath) {
  Rng rng(2);
  const ChainModel m(make_vacuous(2), StationaryDynamics{LowerTransitionOperator::vacuous(2)});
  for (std::size_t n = 0; n <= 4; ++n) {
    const NGamble f = icek::testing::random_gamble(rng, 2, n);
    EXPECT_EQ(williams_nmeasurable(m, f), f.min());
    EXPECT_EQ(upper_nmeasurable(m, f), f.max());
  }
}

TEST(Extension, DemoChainSecondStateB) {
  const ChainModel m = icek::testing::demo_chain();
  const NGamble f = NGamble::tabulate(2, 2, [](const Path& w) { return w[1] == 1 ? 1.0 : 0.0; });
  // P(x2 = b) = sum_x init(x) P(x, b).
  const double oracle = 1.0 * 0.5 + 0.0 * 1.0;
  EXPECT_DOUBLE_EQ(williams_nmeasurable(m, f), oracle);
  EXPECT_DOUBLE_EQ(vvs_nmeasurable(m, f), oracle);
}

TEST(Extension, MatchesNestedRecursion) {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = icek::testing::uniform_index(rng, 2, 3);
    const ChainModel m = icek::testing::random_model(rng, n);
    const NGamble f = icek::testing::random_gamble(rng, n, icek::testing::uniform_index(rng, 0, 4));
    EXPECT_NEAR(williams_nmeasurable(m, f), nested(m, f), 1e-12);
    EXPECT_NEAR(upper_nmeasurable(m, f), -nested(m, -f), 1e-12);
  }
}

TEST(Extension, MonotoneAndShiftInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = icek::testing::uniform_index(rng, 2, 3);
    const ChainModel m = icek::testing::random_model(rng, n);
    const std::size_t depth = icek::testing::uniform_index(rng, 0, 3);
    const NGamble f = icek::testing::random_gamble(rng, n, depth);
    std::vector<double> up = f.values();
    for (double& v : up) v += icek::testing::uniform_real(rng, 0.0, 0.5);
    const NGamble g(n, depth, up);
    EXPECT_LE(williams_nmeasurable(m, f), williams_nmeasurable(m, g) + 1e-12);
    const double c = icek::testing::uniform_real(rng, -3, 3);
    EXPECT_NEAR(williams_nmeasurable(m, f.shifted(c)), williams_nmeasurable(m, f) + c, 1e-9);
  }
}

TEST(Extension, EnvelopeBracketing) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = icek::testing::uniform_index(rng, 2, 3);
    const ChainModel m = icek::testing::random_stationary(rng, n);
    const ChainModel vac(make_vacuous(n), StationaryDynamics{LowerTransitionOperator::vacuous(n)});
    const NGamble f = icek::testing::random_gamble(rng, n, 3);
    const double low = williams_nmeasurable(m, f);
    EXPECT_LE(williams_nmeasurable(vac, f), low + 1e-12);
    for (int k = 0; k < 5; ++k) {
      const ChainModel p = sample_precise_member(m, rng);
      const double v = williams_nmeasurable(p, f);
      EXPECT_LE(low, v + 1e-12);
      EXPECT_LE(v, upper_nmeasurable(m, f) + 1e-12);
    }
  }
}

TEST(Extension, ConditionalConsistency) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = icek::testing::uniform_index(rng, 2, 3);
    const ChainModel m = icek::testing::random_model(rng, n);
    const NGamble f = icek::testing::random_gamble(rng, n, 3);
    const RealProcess h = backward_recursion(m, f);
    for (std::size_t len = 0; len <= 2; ++len)
      for_each_sequence(n, len, [&](const Path& s) {
        const Situation sit(s);
        EXPECT_NEAR(williams_nmeasurable(m.reroot(sit), f.restrict_to(sit)), h.at(s), 1e-12);
      });
  }
}

TEST(Extension, ReachAndSafetySequences) {
  const ChainModel m = icek::testing::demo_chain();
  for (const auto& f : reach_sequence(m, StateSet::all(2), 3)) EXPECT_EQ(f.min(), 1.0);
  for (const auto& f : reach_sequence(m, StateSet(2, {}), 3)) EXPECT_EQ(f.max(), 0.0);
  for (const auto& f : safety_sequence(m, StateSet::all(2), 3)) EXPECT_EQ(f.min(), 1.0);
  for (const auto& f : safety_sequence(m, StateSet(2, {}), 3)) EXPECT_EQ(f.max(), 0.0);
  EXPECT_EQ(reach_sequence(m, StateSet(2, {1}), 2)[1].values(), (std::vector<double>{0, 1, 1, 1}));
  EXPECT_EQ(safety_sequence(m, StateSet(2, {0}), 2)[1].values(), (std::vector<double>{1, 0, 0, 0}));
  EXPECT_THROW(reach_sequence(m, StateSet(3, {1}), 2), InputError);
  EXPECT_THROW(safety_sequence(m, StateSet(2, {1}), 0), InputError);
}

TEST(Extension, ReachLimitExamples) {
  const ChainModel m = icek::testing::demo_chain();
  const LimitResult all = reach_limit(m, StateSet::all(2));
  EXPECT_EQ(all.trace.front(), 1.0);
  EXPECT_TRUE(all.converged);
  EXPECT_EQ(all.stable_from, 1u);

  const LimitResult r = reach_limit(m, StateSet(2, {1}));
  ASSERT_GE(r.trace.size(), 3u);
  // Time 1 is spent in a; b is hit by time n with probability 1 - 2^-(n-1).
  for (std::size_t k = 0; k < r.trace.size(); ++k)
    EXPECT_NEAR(r.trace[k], 1.0 - std::ldexp(1.0, -static_cast<int>(k)), 1e-15);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 1.0, 1e-6);
  EXPECT_FALSE(r.vvs_only);
  EXPECT_EQ(r.direction, Direction::NonDecreasing);

  const ChainModel vac(make_vacuous(2), StationaryDynamics{LowerTransitionOperator::vacuous(2)});
  const LimitResult v = reach_limit(vac, StateSet(2, {1}));
  for (double t : v.trace) EXPECT_EQ(t, 0.0);
  EXPECT_TRUE(v.converged);
}

TEST(Extension, SafetyLimitExamples) {
  const ChainModel m = icek::testing::demo_chain();
  EXPECT_EQ(safety_limit(m, StateSet::all(2)).value, 1.0);
  const LimitResult s = safety_limit(m, StateSet(2, {0}));
  for (std::size_t k = 0; k < s.trace.size(); ++k)
    EXPECT_NEAR(s.trace[k], std::ldexp(1.0, -static_cast<int>(k)), 1e-15);
  EXPECT_TRUE(s.vvs_only);
  EXPECT_EQ(s.direction, Direction::NonIncreasing);
  EXPECT_NEAR(s.value, 0.0, 1e-6);

  const ChainModel lv(make_precise(Pmf({0.9, 0.1})),
                      StationaryDynamics{LowerTransitionOperator(
                          {make_linear_vacuous(Pmf({0.8, 0.2}), 0.1), make_linear_vacuous(Pmf({0.3, 0.7}), 0.1)})});
  const LimitResult l = safety_limit(lv, StateSet(2, {0}));
  for (std::size_t k = 1; k < l.trace.size(); ++k) EXPECT_LE(l.trace[k], l.trace[k - 1] + 1e-12);
  EXPECT_GE(l.value, 0.0);
  EXPECT_LE(l.value, l.trace.front());
}

TEST(Extension, DenseAndCompressedAgree) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = icek::testing::uniform_index(rng, 2, 3);
    const ChainModel m = trial % 2 ? icek::testing::random_stationary(rng, n) : icek::testing::random_time_varying(rng, n);
    const StateSet a(n, {0});
    LimitOptions opt;
    opt.max_horizon = 6;
    opt.tol = 0.0;
    const LimitResult fast_r = reach_limit(m, a, opt);
    const LimitResult dense_r = monotone_limit_nondecreasing(m, [&](std::size_t k) { return reach_gamble(a, k); }, opt);
    const LimitResult fast_s = safety_limit(m, a, opt);
    const LimitResult dense_s = monotone_limit_nonincreasing(m, [&](std::size_t k) { return safety_gamble(a, k); }, opt);
    ASSERT_EQ(fast_r.trace.size(), dense_r.trace.size());
    for (std::size_t k = 0; k < fast_r.trace.size(); ++k) {
      EXPECT_NEAR(fast_r.trace[k], dense_r.trace[k], 1e-12);
      EXPECT_NEAR(fast_s.trace[k], dense_s.trace[k], 1e-12);
    }
  }
}

TEST(Extension, PreciseTraceMatchesMatrixPropagation) {
  Rng rng(8);
  const Matrix p = icek::testing::random_stochastic(rng, 3, true);
  const std::vector<double> init = icek::testing::random_pmf(rng, 3).probs();
  const ChainModel m = icek::testing::precise_model(p, init);
  const StateSet a(3, {2});
  LimitOptions opt;
  opt.max_horizon = 10;
  opt.tol = 0.0;
  const LimitResult r = reach_limit(m, a, opt);
  for (std::size_t k = 0; k < r.trace.size(); ++k) EXPECT_NEAR(r.trace[k], matrix_reach(p, init, a, k + 1), 1e-12);
}

TEST(Extension, NonMonotoneSequenceRejected) {
  const ChainModel m = icek::testing::demo_chain();
  const StateSet a(2, {1});
  EXPECT_THROW(monotone_limit_nondecreasing(m, [&](std::size_t k) { return safety_gamble(a, k); }), InputError);
  EXPECT_THROW(monotone_limit_nonincreasing(m, [&](std::size_t k) { return reach_gamble(a, k); }), InputError);
}

TEST(Extension, GeneralModelsUseDensePath) {
  Rng rng(9);
  const ChainModel m = icek::testing::random_general(rng, 2, 3);
  const LimitResult r = reach_limit(m, StateSet(2, {1}));
  EXPECT_GE(r.trace.size(), 1u);
  EXPECT_LE(r.horizon, 64u);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_GE(r.trace[k], r.trace[k - 1] - 1e-12);
}

TEST(Extension, PreciseOracles) {
  const Matrix p{{0.5, 0.5}, {0.0, 1.0}};
  EXPECT_NEAR(precise_reach_probability(p, std::vector<double>{1.0, 0.0}, StateSet(2, {1})), 1.0, 1e-10);
  EXPECT_EQ(precise_reach_probability(p, std::vector<double>{0.3, 0.7}, StateSet::all(2)), 1.0);
  EXPECT_EQ(precise_reach_probability(p, std::vector<double>{0.0, 1.0}, StateSet(2, {0})), 0.0);
  EXPECT_NEAR(precise_safety_probability(p, std::vector<double>{1.0, 0.0}, StateSet(2, {0})), 0.0, 1e-9);
  EXPECT_EQ(precise_safety_probability(p, std::vector<double>{0.0, 1.0}, StateSet(2, {1})), 1.0);
  // Two absorbing states behind a transient one.
  const Matrix q{{0.2, 0.5, 0.3}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  EXPECT_NEAR(precise_reach_probability(q, std::vector<double>{1.0, 0.0, 0.0}, StateSet(3, {1})), 0.5 / 0.8, 1e-12);
  EXPECT_NEAR(precise_safety_probability(q, std::vector<double>{1.0, 0.0, 0.0}, StateSet(3, {0, 1})), 0.5 / 0.8,
              1e-9);
  EXPECT_THROW(precise_reach_probability({{0.5, 0.4}, {0.0, 1.0}}, std::vector<double>{1.0, 0.0}, StateSet(2, {1})),
               InputError);
}

TEST(Extension, AsPreciseChain) {
  const PreciseChain pc = as_precise_chain(icek::testing::demo_chain());
  EXPECT_EQ(pc.transition, (Matrix{{0.5, 0.5}, {0.0, 1.0}}));
  const ChainModel vac(make_vacuous(2), StationaryDynamics{LowerTransitionOperator::vacuous(2)});
  EXPECT_THROW(as_precise_chain(vac), InputError);
}
