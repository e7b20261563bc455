#include <gtest/gtest.h>

#include <sstream>

#include "epsro/game_gen.hpp"
#include "epsro/lp.hpp"
#include "epsro/matrix_game.hpp"
#include "epsro/payoff_table.hpp"
#include "epsro/psro.hpp"
#include "epsro/restricted_set.hpp"

using namespace epsro;

namespace {

MixedStrategy random_mix(Rng& rng, Index n)
{
   Vector w(n);
   for(Index a = 0; a < n; ++a) {
      w[a] = rng.uniform();
   }
   return MixedStrategy::from_weights(w);
}

}  // namespace

TEST(MixedStrategy, RejectsNonSimplexVectors)
{
   EXPECT_THROW(MixedStrategy(Vector::Constant(3, 0.5)), InvalidArgument);
   EXPECT_THROW(MixedStrategy(Vector(Vector::Zero(0))), InvalidArgument);
   Vector neg(2);
   neg << 1.5, -0.5;
   EXPECT_THROW(MixedStrategy{neg}, InvalidArgument);
   EXPECT_DOUBLE_EQ(MixedStrategy::uniform(4)[2], 0.25);
   EXPECT_DOUBLE_EQ(MixedStrategy::pure(3, 1)[1], 1.);
}

TEST(MatrixGame, SymmetricFlagRequiresAntisymmetry)
{
   Matrix m(2, 2);
   m << 0, 1, 1, 0;
   EXPECT_THROW(MatrixGame(m, true), InvalidArgument);
   EXPECT_NO_THROW(MatrixGame(matching_pennies().payoff(), false));
   Matrix bad(1, 1);
   bad << std::nan("");
   EXPECT_THROW(MatrixGame{bad}, InvalidArgument);
}

TEST(Utility, CanonicalValues)
{
   EXPECT_DOUBLE_EQ(utility(matching_pennies(), MixedStrategy::uniform(2), MixedStrategy::uniform(2)), 0.);
   const MatrixGame rps = rock_paper_scissors();
   EXPECT_DOUBLE_EQ(utility(rps, MixedStrategy::pure(3, 0), MixedStrategy::pure(3, 1)), -1.);
   const MatrixGame g = random_symmetric(4, 7);
   EXPECT_EQ(utility(g, MixedStrategy::pure(4, 0), MixedStrategy::pure(4, 1)), g(0, 1));
   EXPECT_THROW(utility(rps, MixedStrategy::uniform(2), MixedStrategy::uniform(3)), InvalidArgument);
}

TEST(BestResponse, CanonicalAndTieBreak)
{
   const MatrixGame rps = rock_paper_scissors();
   const auto br = best_response(rps, Player::row, MixedStrategy::pure(3, 0));
   EXPECT_EQ(br.action, 1);
   EXPECT_DOUBLE_EQ(br.value, 1.);
   const auto tie = best_response(rps, Player::row, MixedStrategy::uniform(3));
   EXPECT_EQ(tie.action, 0);
   EXPECT_NEAR(tie.value, 0., 1e-15);
   // column seat: paper is beaten by scissors
   const auto col = best_response(rps, Player::col, MixedStrategy::pure(3, 1));
   EXPECT_EQ(col.action, 2);
   EXPECT_DOUBLE_EQ(col.value, 1.);
}

TEST(BestResponse, MatchesExhaustiveScan)
{
   Rng rng(3);
   for(std::uint64_t seed = 0; seed < 20; ++seed) {
      const MatrixGame g = random_zero_sum(6, 6, seed);
      const MixedStrategy opp = random_mix(rng, 6);
      Index arg = -1;
      double best = -1e300;
      for(Index i = 0; i < 6; ++i) {
         double v = 0.;
         for(Index j = 0; j < 6; ++j) {
            v += g(i, j) * opp[j];
         }
         if(v > best) {
            best = v;
            arg = i;
         }
      }
      const auto br = best_response(g, Player::row, opp);
      EXPECT_EQ(br.action, arg);
      EXPECT_NEAR(br.value, best, 1e-12);
   }
}

TEST(NashConv, HandComputedValues)
{
   const MatrixGame mp = matching_pennies();
   EXPECT_NEAR(nash_conv(mp, MixedStrategy::uniform(2), MixedStrategy::uniform(2)), 0., 1e-15);
   EXPECT_DOUBLE_EQ(nash_conv(mp, MixedStrategy::pure(2, 0), MixedStrategy::pure(2, 0)), 2.);
   EXPECT_NEAR(nash_conv(rock_paper_scissors(), MixedStrategy::uniform(3), MixedStrategy::pure(3, 0)), 1., 1e-15);
}

TEST(MatrixCsv, RoundTripIsExact)
{
   const MatrixGame g = random_symmetric(8, 3);
   std::stringstream ss;
   write_matrix_csv(ss, g);
   const MatrixGame back = read_matrix_csv(ss);
   EXPECT_TRUE(back == g);
   EXPECT_TRUE(back.symmetric());
}

TEST(MatrixCsv, RejectsMalformedInput)
{
   for(const char* text : {"2,2\n0,nan\n1,0\n", "2,2\n0,1\n", "2,2\n0,1,2\n-1,0\n", "0,1\n", "# symmetric\n2,2\n0,1\n0.5,0\n", "2,2\n0,x\n1,0\n", ""}) {
      std::stringstream ss(text);
      EXPECT_THROW(read_matrix_csv(ss), FormatError) << text;
   }
}

TEST(MatrixCsv, SymmetricWithinIoTolerance)
{
   std::stringstream ss("# symmetric\n2,2\n0,0.3\n-0.3000000000001,0\n");
   const MatrixGame g = read_matrix_csv(ss);
   EXPECT_EQ(g(1, 0), -0.3);
}

TEST(PayoffTable, SingletonAndBilinear)
{
   const MatrixGame rps = rock_paper_scissors();
   const RestrictedPolicySet<MixedStrategy> u({MixedStrategy::uniform(3)});
   const PayoffTable t = fill_payoff_table(rps, u, u, FillMode::exact());
   ASSERT_EQ(t.rows(), 1);
   EXPECT_NEAR(t.at(0, 0), 0., 1e-15);

   const MatrixGame mp = matching_pennies();
   Vector w(2);
   w << 0.3, 0.7;
   const RestrictedPolicySet<MixedStrategy> rows({MixedStrategy::pure(2, 0), MixedStrategy(w)});
   const RestrictedPolicySet<MixedStrategy> cols({MixedStrategy::uniform(2), MixedStrategy::pure(2, 1)});
   const PayoffTable t2 = fill_payoff_table(mp, rows, cols, FillMode::exact());
   for(std::size_t i = 0; i < 2; ++i) {
      for(std::size_t j = 0; j < 2; ++j) {
         const double expect = rows[i].probs().dot(mp.payoff() * cols[j].probs());
         EXPECT_NEAR(t2.at(static_cast<Index>(i), static_cast<Index>(j)), expect, 1e-15);
      }
   }
   // 1 * (-1) at (pure heads, pure tails); 0.3 * -1 + 0.7 * 1 at (w, tails)
   EXPECT_DOUBLE_EQ(t2.at(0, 1), -1.);
   EXPECT_NEAR(t2.at(1, 1), 0.4, 1e-15);
}

TEST(PayoffTable, SampledErrorShrinksWithEpisodes)
{
   const MatrixGame g = random_zero_sum(5, 5, 12);
   Rng rng(12);
   std::vector<MixedStrategy> rows;
   std::vector<MixedStrategy> cols;
   for(int k = 0; k < 3; ++k) {
      rows.push_back(random_mix(rng, 5));
      cols.push_back(random_mix(rng, 5));
   }
   const auto error = [&](std::uint64_t m) {
      PayoffTable exact;
      PayoffTable sampled;
      fill_payoff_table(exact, g, rows, cols, FillMode::exact());
      fill_payoff_table(sampled, g, rows, cols, FillMode::sampled(m, 5));
      EXPECT_EQ(sampled.episode_cost(), 9 * m);
      return (exact.matrix() - sampled.matrix()).cwiseAbs().maxCoeff();
   };
   EXPECT_LT(error(10000), error(100));
   EXPECT_LT(error(10000), 0.05);
}

TEST(PayoffTable, IncrementalFillOnlyTouchesNewCells)
{
   const MatrixGame g = random_symmetric(6, 1);
   std::vector<MixedStrategy> set{MixedStrategy::pure(6, 0), MixedStrategy::pure(6, 1)};
   PayoffTable t;
   fill_payoff_table(t, g, set, set, FillMode::sampled(10, 0));
   EXPECT_EQ(t.episode_cost(), 40u);
   set.push_back(MixedStrategy::pure(6, 2));
   fill_payoff_table(t, g, set, set, FillMode::sampled(10, 0));
   EXPECT_EQ(t.episode_cost(), 90u);
   EXPECT_TRUE(t.complete());
   EXPECT_THROW(fill_payoff_table(t, g, set, set, FillMode::sampled(0, 0)), InvalidArgument);
}

TEST(Gamescape, HullMembership)
{
   PayoffTable t;
   t.resize(3, 2);
   const std::array<Vector, 2> cols{Vector::Unit(3, 0), Vector::Unit(3, 1)};
   for(Index j = 0; j < 2; ++j) {
      for(Index i = 0; i < 3; ++i) {
         t.set_exact(i, j, cols[static_cast<std::size_t>(j)][i]);
      }
   }
   const double tol = 1e-7;
   EXPECT_TRUE(in_gamescape(t, cols[0], tol));
   EXPECT_TRUE(in_gamescape(t, Vector(0.5 * (cols[0] + cols[1])), tol));
   Vector over = cols[0];
   over[0] += 10. * tol;
   EXPECT_FALSE(in_gamescape(t, over, tol));
   Vector outside(3);
   outside << 0.5, 0.5, 0.4;
   EXPECT_NEAR(gamescape_distance(t, outside), 0.4, 1e-9);
}

TEST(ZeroSumLp, SmallGames)
{
   Matrix one(1, 1);
   one << 0.7;
   const auto s1 = solve_zero_sum(one);
   EXPECT_DOUBLE_EQ(s1.row[0], 1.);
   EXPECT_NEAR(s1.value, 0.7, 1e-12);

   const auto mp = meta_solver_lp(matching_pennies().payoff());
   EXPECT_NEAR(mp.row[0], 0.5, 1e-12);
   EXPECT_NEAR(mp.col[0], 0.5, 1e-12);
   EXPECT_NEAR(mp.value, 0., 1e-12);

   for(std::uint64_t seed = 0; seed < 10; ++seed) {
      const MatrixGame g = random_zero_sum(5, 5, seed);
      const auto sol = meta_solver_lp(g.payoff());
      EXPECT_NEAR(nash_conv(g, sol.row, sol.col), 0., 1e-7);
      EXPECT_NEAR(utility(g, sol.row, sol.col), sol.value, 1e-9);
   }
}

TEST(ZeroSumLp, DegenerateAndRectangular)
{
   // dominated duplicates and a constant game
   Matrix m(3, 2);
   m << 1, -1, 1, -1, -1, 1;
   const auto s = solve_zero_sum(m);
   EXPECT_NEAR(s.value, 0., 1e-12);
   EXPECT_NEAR(s.col[0], 0.5, 1e-12);
   const auto c = solve_zero_sum(Matrix::Constant(4, 3, 2.));
   EXPECT_NEAR(c.value, 2., 1e-12);
}

TEST(RestrictedSet, OrderingAndPromotion)
{
   RestrictedPolicySet<int> s({10, 11});
   EXPECT_EQ(s.n_fixed(), 2u);
   const auto a = s.add_active(12);
   const auto b = s.add_active(13);
   EXPECT_EQ(s.level(b), s.level(a) + 1);
   EXPECT_THROW(s.add_fixed(99), InvalidArgument);
   EXPECT_THROW(s.promote(b), InvalidArgument);
   EXPECT_THROW(s.update_active(0, 5), InvalidArgument);
   s.update_active(b, 23);
   EXPECT_EQ(s[b], 23);
   EXPECT_EQ(s.below(s.level(b)).size(), 3u);
   s.promote(a);
   EXPECT_EQ(s.lowest_active(), b);
   EXPECT_TRUE(s.invariants_hold());
   EXPECT_EQ(s.fixed_entries().size(), 3u);
}
