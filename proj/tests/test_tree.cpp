#include <gtest/gtest.h>

#include "icek/tree.hpp"
#include "support/random_instances.hpp"

using namespace icek;
using icek::testing::Rng;

namespace {

// F(s x) = F(s) + S(s)(x), unrolled recursively from the root.
double recursive_capital(const Selection& sel, const Path& s) {
  if (s.empty()) return 0.0;
  const Path parent(s.begin(), s.end() - 1);
  return recursive_capital(sel, parent) + sel.gamble(parent)[s.back()];
}

}  // namespace

TEST(Tree, IndexingRoundTrip) {
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t len = 0; len <= 4; ++len) {
      std::size_t expect = 0;
      for_each_sequence(n, len, [&](const Path& w) {
        EXPECT_EQ(sequence_index(w, n), expect);
        EXPECT_EQ(sequence_at(expect, len, n), w);
        ++expect;
      });
      EXPECT_EQ(expect, checked_power(n, len));
    }
  EXPECT_THROW(checked_power(10, 40), InputError);
}

TEST(Tree, SituationBasics) {
  const Situation root;
  EXPECT_TRUE(root.is_initial());
  EXPECT_EQ(root.length(), 0u);
  const Situation ab{0, 1};
  EXPECT_EQ(ab.prefix(1), Situation{0});
  EXPECT_EQ(root.child(0).child(1), ab);
  EXPECT_EQ(Situation{0}.concat(Situation{1}), ab);
  EXPECT_TRUE(Situation{0}.is_prefix_of(ab.states()));
  EXPECT_FALSE(Situation{1}.is_prefix_of(ab.states()));
  EXPECT_THROW(Situation{2}.validate(2), InputError);
}

TEST(Tree, CapitalExamples) {
  Selection zero(2, 3);
  EXPECT_EQ(capital(zero, Situation{0, 1, 1}), 0.0);
  Selection sel(2, 2);
  sel.set(Situation{}, Gamble{1.0, -1.0});
  sel.set(Situation{0}, Gamble{0.25, 2.0});
  EXPECT_EQ(capital(sel, Situation{0, 1}), 1.0 + 2.0);
  EXPECT_EQ(capital(sel, Situation{}), 0.0);
}

TEST(Tree, CapitalMatchesRecursion) {
  Rng rng(11);
  for (std::size_t n = 2; n <= 3; ++n) {
    const Selection sel = icek::testing::random_selection(rng, n, 4);
    const RealProcess table = capital_process(sel, 6);
    for (std::size_t len = 0; len <= 6; ++len)
      for_each_sequence(n, len, [&](const Path& s) {
        const double r = recursive_capital(sel, s);
        EXPECT_NEAR(capital(sel, s), r, 1e-12);
        EXPECT_NEAR(table.at(s), r, 1e-12);
        if (len < sel.depth())
          for (State x = 0; x < n; ++x) {
            Path c = s;
            c.push_back(x);
            EXPECT_NEAR(capital(sel, c) - capital(sel, s), sel.gamble(s)[x], 1e-12);
          }
      });
  }
}

TEST(Tree, CapitalStabilisesBeyondDepth) {
  Rng rng(5);
  for (std::size_t d = 0; d <= 4; ++d) {
    const Selection sel = icek::testing::random_selection(rng, 2, d);
    for_each_sequence(2, 6, [&](const Path& w) {
      const double at_d = capital(sel, std::span<const State>(w).first(d));
      for (std::size_t m = d; m <= 6; ++m) EXPECT_EQ(capital(sel, std::span<const State>(w).first(m)), at_d);
      EXPECT_EQ(limsup_capital(sel, w), at_d);
    });
  }
}

TEST(Tree, LimsupIsTailMaximum) {
  Rng rng(9);
  const Selection sel = icek::testing::random_selection(rng, 2, 3);
  for_each_sequence(2, 5, [&](const Path& w) {
    double top = -1e300;
    for (std::size_t m = 3; m <= 5; ++m) top = std::max(top, recursive_capital(sel, Path(w.begin(), w.begin() + m)));
    EXPECT_NEAR(limsup_capital(sel, w), top, 1e-12);
  });
  EXPECT_EQ(limsup_capital(Selection(2, 3), Path{0, 0, 0}), 0.0);
  EXPECT_THROW(limsup_capital(sel, Path{0, 1}), InputError);
}

TEST(Tree, NGambleEvalAndRestrict) {
  const NGamble c = NGamble::constant(3, 2.5);
  EXPECT_EQ(c.eval(Path{2, 1, 0}), 2.5);
  EXPECT_EQ(c.eval(Path{}), 2.5);

  Rng rng(2);
  const NGamble f = icek::testing::random_gamble(rng, 2, 2);
  EXPECT_EQ(f.restrict_to(Situation{}), f);
  const NGamble slice = f.restrict_to(Situation{0});
  EXPECT_EQ(slice.depth(), 1u);
  for (State x = 0; x < 2; ++x) EXPECT_EQ(slice.at(Path{x}), f.values()[0 * 2 + x]);
  EXPECT_THROW(f.eval(Path{1}), InputError);
  EXPECT_THROW(f.restrict_to(Situation{0, 1, 0}), InputError);
  EXPECT_THROW(NGamble(2, 2, {1.0, 2.0, 3.0}), InputError);
}

TEST(Tree, LiftingPreservesEvaluation) {
  Rng rng(4);
  for (std::size_t n = 0; n <= 3; ++n) {
    const NGamble f = icek::testing::random_gamble(rng, 3, n);
    const NGamble up = f.lifted_to(n + 1);
    for_each_sequence(3, n + 2, [&](const Path& w) { EXPECT_EQ(up.eval(w), f.eval(w)); });
  }
}

TEST(Tree, SelectionZeroBeyondDepth) {
  Selection sel(2, 1);
  sel.set(Situation{}, Gamble{3.0, -1.0});
  EXPECT_EQ(sel.gamble(Situation{0})[0], 0.0);
  EXPECT_THROW(sel.set(Situation{0}, Gamble{1.0, 1.0}), InputError);
  EXPECT_THROW(sel.set(Situation{}, Gamble{1.0}), InputError);
}
