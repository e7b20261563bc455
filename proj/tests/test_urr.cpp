#include <gtest/gtest.h>

#include "epsro/game_gen.hpp"
#include "epsro/kuhn.hpp"
#include "epsro/urr_solver.hpp"

using namespace epsro;

namespace {

std::vector<MixedStrategy> pures(Index n)
{
   std::vector<MixedStrategy> out;
   for(Index i = 0; i < n; ++i) {
      out.push_back(MixedStrategy::pure(n, i));
   }
   return out;
}

}  // namespace

TEST(SolveUrr, SingletonRestrictionFindsTheCounter)
{
   const MatrixGame rps = rock_paper_scissors();
   UrrConfig cfg;
   cfg.max_iters = 2000;
   cfg.eps_target = 0.;
   const MatrixUrr ctx(rps, Player::row, {MixedStrategy::pure(3, 0)});
   const auto res = solve_urr(ctx, MixedStrategy::uniform(3), MixedStrategy::uniform(1), cfg);
   EXPECT_DOUBLE_EQ(res.meta[0], 1.);
   EXPECT_GT(res.responder[1], 0.99);
   EXPECT_GT(utility(rps, res.responder, MixedStrategy::pure(3, 0)), 0.99);
   EXPECT_EQ(res.iterations, 2000u);
}

TEST(SolveUrr, MatchingPenniesConvergesAtTheRate)
{
   const MatrixGame mp = matching_pennies();
   for(const std::size_t t : {std::size_t{200}, std::size_t{5000}}) {
      UrrConfig cfg;
      cfg.max_iters = t;
      cfg.eps_target = 0.;
      cfg.check_every = t;
      const MatrixUrr ctx(mp, Player::row, pures(2));
      const auto res = solve_urr(ctx, MixedStrategy::uniform(2), MixedStrategy::uniform(2), cfg);
      const double eps = 2. * regret_bound(2, t);
      EXPECT_LE(res.exploitability, eps) << t;
      EXPECT_NEAR(res.responder[0], 0.5, eps);
      EXPECT_NEAR(res.meta[0], 0.5, eps);
   }
}

TEST(SolveUrr, RandomGamesStayWithinTheRate)
{
   // uniform starts, as the regret bound assumes
   for(std::uint64_t seed = 0; seed < 5; ++seed) {
      const MatrixGame g = random_zero_sum(5, 5, 100 + seed);
      for(const std::size_t t : {std::size_t{200}, std::size_t{2000}}) {
         UrrConfig cfg;
         cfg.max_iters = t;
         cfg.eps_target = 0.;
         cfg.check_every = t;
         const MatrixUrr ctx(g, Player::row, pures(5));
         const auto res = solve_urr(ctx, MixedStrategy::uniform(5), MixedStrategy::uniform(5), cfg);
         EXPECT_LE(res.exploitability, 2. * regret_bound(5, t) * 2.) << seed << ' ' << t;
      }
   }
}

TEST(SolveUrr, StopsAtTarget)
{
   const MatrixGame g = random_zero_sum(6, 6, 2);
   UrrConfig cfg;
   cfg.max_iters = 100000;
   cfg.eps_target = 1e-2;
   const MatrixUrr ctx(g, Player::col, pures(6));
   const auto res = solve_urr(ctx, MixedStrategy::uniform(6), MixedStrategy::uniform(6), cfg);
   EXPECT_TRUE(res.converged);
   EXPECT_LE(res.exploitability, 1e-2);
   EXPECT_LT(res.iterations, 100000u);
   // the URR game here is the whole game, so the averages are near-Nash
   EXPECT_LE(nash_conv(g, res.meta, res.responder), 2e-2);
}

TEST(SolveUrr, KuhnResponderBeatsGameValue)
{
   const GameTree t = build_kuhn();
   const BehaviorPolicy u = BehaviorPolicy::uniform(t, Player::col);
   UrrConfig cfg;
   cfg.max_iters = 3000;
   cfg.eps_target = 1e-3;
   const KuhnUrr ctx(t, Player::row, {u});
   const auto res = solve_urr(ctx, BehaviorPolicy::uniform(t, Player::row), MixedStrategy::uniform(1), cfg);
   const double br = exact_best_response(t, Player::row, std::span(&u, 1), Vector::Ones(1)).value;
   const double v = expected_value(t, res.responder, u);
   EXPECT_GE(v, -1. / 18.);
   EXPECT_NEAR(v, br, 1e-2);
}

TEST(ResponderStep, BrMixWithFullRateIsPureBestResponse)
{
   const MatrixGame g = random_zero_sum(5, 4, 1);
   const auto entries = pures(4);
   const MatrixUrr ctx(g, Player::row, entries);
   UrrConfig cfg;
   cfg.rule = ResponderRule::br_mix;
   cfg.br_rate = 1.;
   const MixedStrategy meta = MixedStrategy::from_weights(Vector::LinSpaced(4, 1., 4.));
   const MixedStrategy next = responder_step(ctx, MixedStrategy::uniform(5), meta, cfg);
   const auto br = best_response(g, Player::row, meta);
   EXPECT_EQ(next.probs(), MixedStrategy::pure(5, br.action).probs());
}

TEST(ResponderStep, MwuWithEqualGainsIsIdentity)
{
   const MatrixGame rps = rock_paper_scissors();
   const MatrixUrr ctx(rps, Player::row, pures(3));
   const MixedStrategy start = MixedStrategy::from_weights(Vector::LinSpaced(3, 1., 2.));
   const MixedStrategy next = responder_step(ctx, start, MixedStrategy::uniform(3), UrrConfig{});
   EXPECT_LT((next.probs() - start.probs()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ResponderStep, GradientClimbsTowardsTheBeatenHump)
{
   const MixtureGame g;
   const MixtureUrr ctx(g, Player::row, {g.centers()[0]});
   UrrConfig cfg;
   cfg.rule = ResponderRule::gradient;
   cfg.eta_responder = 0.01;
   Point2D p{0., 0.};
   double prev = mixture_payoff(g, p, g.centers()[0]);
   for(int t = 0; t < 100; ++t) {
      p = responder_step(ctx, p, MixedStrategy::uniform(1), cfg);
      const double now = mixture_payoff(g, p, g.centers()[0]);
      EXPECT_GT(now, prev) << t;
      prev = now;
   }
   cfg.rule = ResponderRule::mwu;
   EXPECT_THROW(responder_step(ctx, p, MixedStrategy::uniform(1), cfg), InvalidArgument);
}

TEST(UrrExploitability, ZeroCases)
{
   const MatrixGame rps = rock_paper_scissors();
   const MatrixUrr single(rps, Player::row, {MixedStrategy::pure(3, 2)});
   EXPECT_NEAR(urr_exploitability(single, MixedStrategy::pure(3, 0), MixedStrategy::uniform(1)), 0., 1e-15);
   const MatrixGame mp = matching_pennies();
   const MatrixUrr both(mp, Player::row, pures(2));
   EXPECT_NEAR(urr_exploitability(both, MixedStrategy::uniform(2), MixedStrategy::uniform(2)), 0., 1e-15);
   EXPECT_THROW(urr_exploitability(both, MixedStrategy::uniform(2), MixedStrategy::uniform(3)), InvalidArgument);
}

TEST(UrrExploitability, MatchesPureDeviationScan)
{
   Rng rng(31);
   const auto random_mix = [&](Index n) {
      Vector w(n);
      for(Index a = 0; a < n; ++a) {
         w[a] = rng.uniform();
      }
      return MixedStrategy::from_weights(w);
   };
   for(std::uint64_t seed = 0; seed < 20; ++seed) {
      const MatrixGame g = random_zero_sum(4, 5, seed);
      // the column seat is the full side: its utilities are -payoff
      std::vector<MixedStrategy> rows;
      for(int k = 0; k < 3; ++k) {
         rows.push_back(random_mix(4));
      }
      const MatrixUrr ctx(g, Player::col, rows);
      const MixedStrategy resp = random_mix(5);
      const MixedStrategy meta = random_mix(3);
      double dev = -1e300;
      for(Index j = 0; j < 5; ++j) {
         double v = 0.;
         for(std::size_t k = 0; k < 3; ++k) {
            for(Index i = 0; i < 4; ++i) {
               v -= meta[static_cast<Index>(k)] * rows[k][i] * g(i, j);
            }
         }
         dev = std::max(dev, v);
      }
      double worst = 1e300;
      for(std::size_t k = 0; k < 3; ++k) {
         worst = std::min(worst, -utility(g, rows[k], resp));
      }
      EXPECT_NEAR(urr_exploitability(ctx, resp, meta), std::max(0., dev - worst), 1e-12);
   }
}

TEST(UrrSolver, ExtendGrowsMetaAndKeepsUtility)
{
   const MatrixGame g = random_symmetric(10, 4);
   UrrConfig cfg;
   cfg.eps_target = 0.;
   const std::vector<MixedStrategy> start{MixedStrategy::pure(10, 0), MixedStrategy::pure(10, 1)};
   UrrSolver<MatrixUrr> solver(MatrixUrr(g, Player::row, start), MixedStrategy::uniform(10), BoltzmannMeta::uniform(2), cfg);
   solver.advance(500);
   const MixedStrategy pi_bar = solver.responder_average();
   const MixedStrategy sigma_bar = solver.meta_average();
   ExtendOptions opt;
   opt.tau = 1e-9;
   opt.safeguard = false;
   solver.extend(MixedStrategy::pure(10, 2), opt);
   ASSERT_EQ(solver.meta().size(), 3);
   ASSERT_TRUE(solver.last_warm_start().has_value());
   // owner utility against the old responder average is preserved
   const auto owner = [&](const MixedStrategy& s, std::size_t k) {
      double v = 0.;
      for(std::size_t j = 0; j < k; ++j) {
         v -= s[static_cast<Index>(j)] * utility(g, pi_bar, MixedStrategy::pure(10, static_cast<Index>(j)));
      }
      return v;
   };
   EXPECT_NEAR(owner(solver.meta().sigma(), 3), owner(sigma_bar, 2), 1e-8);
   solver.advance(100);
   EXPECT_EQ(solver.segment_iterations(), 100u);
   ASSERT_EQ(solver.segments().size(), 2u);
   EXPECT_EQ(solver.segments()[1].size(), 100u);
}

TEST(UrrSolver, SampledModeCountsEpisodes)
{
   const MatrixGame g = random_zero_sum(4, 4, 9);
   UrrConfig cfg;
   cfg.mode = UrrConfig::Mode::sampled;
   cfg.window = 50;
   cfg.eps_target = 0.;
   UrrSolver<MatrixUrr> solver(MatrixUrr(g, Player::row, pures(4)), MixedStrategy::uniform(4), BoltzmannMeta::uniform(4), cfg);
   solver.advance(1000);
   EXPECT_EQ(solver.records().size(), 1000u / 50u);
   EXPECT_GT(solver.episodes(), 0u);
}
