#include <gtest/gtest.h>

#include <sstream>

#include "epsro/game_gen.hpp"
#include "epsro/game_ops.hpp"
#include "epsro/psro.hpp"

using namespace epsro;

namespace {

MatrixGame transitive()
{
   // action 0 strictly dominates for both seats
   Matrix a(2, 2);
   a << 0., 1., -1., 0.;
   return MatrixGame(a, true);
}

std::string csv(const RunLedger& l)
{
   std::ostringstream os;
   write_ledger_csv(os, l);
   return os.str();
}

}  // namespace

TEST(MetaSolver, PointMassesAndUniform)
{
   Matrix one(1, 1);
   one << -0.3;
   const auto s = meta_solver_lp(one);
   EXPECT_DOUBLE_EQ(s.row[0], 1.);
   EXPECT_DOUBLE_EQ(s.col[0], 1.);
   const auto u = meta_solver_lp(Matrix::Zero(3, 2), MetaSolverKind::uniform);
   EXPECT_NEAR(u.row[2], 1. / 3., 1e-15);
   EXPECT_THROW(parse_meta_solver("alpharank"), InvalidArgument);
}

TEST(Psro, RpsReachesZeroWithinThreeEpochs)
{
   const MatrixGame rps = rock_paper_scissors();
   PsroOptions opt;
   opt.run.epochs = 3;
   opt.run.sim_episodes = 0;
   const auto r = run_psro(MatrixOps(rps), opt);
   ASSERT_EQ(r.ledger.rows().size(), 4u);
   EXPECT_NEAR(r.ledger.back().nashconv, 0., 1e-12);
   // one entry per epoch, duplicates included; all three actions are present
   EXPECT_EQ(r.sets[0].size(), 4u);
   Vector seen = Vector::Zero(3);
   for(const auto& s : r.sets[0]) {
      seen += s.probs();
   }
   EXPECT_GT(seen.minCoeff(), 0.);
}

TEST(Psro, EpisodeCountEqualsTableCells)
{
   const MatrixGame g = random_symmetric(12, 3);
   PsroOptions opt;
   opt.run.epochs = 6;
   opt.run.sim_episodes = 50;
   const auto r = run_psro(MatrixOps(g), opt);
   for(const auto& row : r.ledger.rows()) {
      EXPECT_EQ(row.sim_episodes, 50u * row.set_size_p1 * row.set_size_p2);
   }
}

TEST(Psro, FinalNashConvBelowInitial)
{
   const MatrixGame g = random_symmetric(15, 2);
   PsroOptions opt;
   opt.run.epochs = 20;
   const auto r = run_psro(MatrixOps(g), opt);
   EXPECT_LT(r.ledger.back().nashconv, r.ledger.rows().front().nashconv);
}

TEST(SelfPlay, TransitiveGameConverges)
{
   PsroOptions opt;
   opt.run.epochs = 4;
   const auto r = run_self_play(MatrixOps(transitive()), opt);
   EXPECT_NEAR(r.ledger.back().nashconv, 0., 1e-15);
   EXPECT_NEAR(flatten(r.sets[0], r.final_meta[0])[0], 1., 1e-15);
}

TEST(SelfPlay, RpsCyclesAndUsesNoTable)
{
   PsroOptions opt;
   opt.run.epochs = 12;
   const auto r = run_self_play(MatrixOps(rock_paper_scissors()), opt);
   for(std::size_t e = 1; e < r.ledger.rows().size(); ++e) {
      EXPECT_GT(r.ledger.rows()[e].nashconv, 0.3) << e;
      EXPECT_EQ(r.ledger.rows()[e].sim_episodes, 0u);
   }
}

TEST(PsroRn, GrowsAtLeastAsFastAsPsro)
{
   const MatrixGame g = random_symmetric(30, 6);
   PsroOptions opt;
   opt.run.epochs = 8;
   const auto rn = run_psro_rn(MatrixOps(g), opt);
   const auto ps = run_psro(MatrixOps(g), opt);
   for(std::size_t e = 0; e < rn.ledger.rows().size(); ++e) {
      EXPECT_GE(rn.ledger.rows()[e].set_size_p1, ps.ledger.rows()[e].set_size_p1) << e;
   }
}

TEST(PPsro, SingleWorkerMatchesPsro)
{
   const MatrixGame g = random_symmetric(15, 4);
   PsroOptions p;
   p.run.epochs = 10;
   PPsroOptions pp;
   pp.run = p.run;
   pp.workers = 1;
   const auto a = run_psro(MatrixOps(g), p);
   const auto b = run_p_psro(MatrixOps(g), pp);
   ASSERT_EQ(a.ledger.rows().size(), b.ledger.rows().size());
   for(std::size_t e = 0; e < a.ledger.rows().size(); ++e) {
      EXPECT_NEAR(a.ledger.rows()[e].nashconv, b.ledger.rows()[e].nashconv, 1e-12) << e;
      EXPECT_EQ(a.ledger.rows()[e].set_size_p1, b.ledger.rows()[e].set_size_p1) << e;
   }
}

TEST(PPsro, DeterministicAndCountsTableEpisodes)
{
   const MatrixGame g = random_symmetric(15, 5);
   PPsroOptions pp;
   pp.run.epochs = 6;
   const auto a = run_p_psro(MatrixOps(g), pp);
   EXPECT_EQ(csv(a.ledger), csv(run_p_psro(MatrixOps(g), pp).ledger));
   EXPECT_GT(a.ledger.back().sim_episodes, 0u);
}

TEST(Epsro, NeverSimulatesTables)
{
   const MatrixGame g = random_symmetric(15, 8);
   EpsroOptions e;
   e.run.epochs = 6;
   e.run.sim_episodes = 100;
   const auto r = run_epsro(MatrixOps(g), e);
   for(const auto& row : r.ledger.rows()) {
      EXPECT_EQ(row.sim_episodes, 0u);
   }
   EXPECT_GT(r.ledger.back().meta_iters, 0u);
}

TEST(Epsro, SingleColdWorkerIsSequential)
{
   // one worker without warm starts adds exactly one policy per seat and epoch
   const MatrixGame g = random_symmetric(20, 1);
   EpsroOptions e;
   e.run.epochs = 8;
   e.workers = 1;
   e.warm_start = false;
   const auto r = run_epsro(MatrixOps(g), e);
   for(std::size_t i = 0; i < r.ledger.rows().size(); ++i) {
      EXPECT_EQ(r.ledger.rows()[i].set_size_p1, i + 1);
      EXPECT_EQ(r.ledger.rows()[i].set_size_p2, i + 1);
   }
}

TEST(Epsro, ThreadsReproduceSerialSchedule)
{
   const MatrixGame g = random_symmetric(15, 12);
   EpsroOptions e;
   e.run.epochs = 5;
   EpsroOptions t = e;
   t.threads = true;
   EXPECT_EQ(csv(run_epsro(MatrixOps(g), e).ledger), csv(run_epsro(MatrixOps(g), t).ledger));
}

TEST(Epsro, BeatsPsroOnLargerGames)
{
   const MatrixGame g = random_symmetric(60, 0);
   EpsroOptions e;
   e.run.epochs = 20;
   PsroOptions p;
   p.run = e.run;
   EXPECT_LE(run_epsro(MatrixOps(g), e).ledger.back().nashconv, run_psro(MatrixOps(g), p).ledger.back().nashconv);
}

TEST(Epsro, KuhnAndMixtureRun)
{
   const GameTree t = build_kuhn();
   EpsroOptions e;
   e.run.epochs = 3;
   const auto k = run_epsro(KuhnOps(t), e);
   EXPECT_EQ(k.ledger.rows().size(), 4u);
   EXPECT_GE(k.ledger.back().nashconv, 0.);
   const MixtureGame mg;
   EpsroOptions m = e;
   m.urr.rule = ResponderRule::gradient;
   m.urr.eta_responder = 0.05;
   m.urr.check_every = 50;
   m.urr.respond_to_average = true;
   const auto r = run_epsro(MixtureOps(mg), m);
   for(const auto& p : r.sets[0]) {
      EXPECT_TRUE(mg.in_arena(p));
   }
}

TEST(Ledger, CsvRoundTrip)
{
   const MatrixGame g = random_symmetric(10, 3);
   PsroOptions opt;
   opt.run.epochs = 4;
   const auto r = run_psro(MatrixOps(g), opt);
   std::istringstream is(csv(r.ledger));
   const auto back = read_ledger_csv(is);
   ASSERT_EQ(back.size(), 1u);
   EXPECT_EQ(csv(back[0]), csv(r.ledger));
}
