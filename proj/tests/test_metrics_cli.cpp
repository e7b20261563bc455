#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "epsro/epsro.hpp"

using namespace epsro;
namespace fs = std::filesystem;

namespace {

int positive_eigenvalues(const Matrix& m)
{
   Eigen::SelfAdjointEigenSolver<Matrix> eig(m * m.transpose(), Eigen::EigenvaluesOnly);
   return static_cast<int>((eig.eigenvalues().array() > 1e-9).count());
}

fs::path scratch(const std::string& name)
{
   const fs::path p = fs::temp_directory_path() / ("epsro_test_" + name);
   fs::remove_all(p);
   return p;
}

std::string slurp(const fs::path& p)
{
   std::ifstream is(p, std::ios::binary);
   std::ostringstream os;
   os << is.rdbuf();
   return os.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& dir)
{
   std::map<std::string, std::string> out;
   for(const auto& e : fs::recursive_directory_iterator(dir)) {
      if(e.is_regular_file()) {
         out[fs::relative(e.path(), dir).string()] = slurp(e.path());
      }
   }
   return out;
}

int run_cli(const std::string& args)
{
   const std::string cmd = std::string(EPSRO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
   const int status = std::system(cmd.c_str());
   return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text)
{
   fs::create_directories(p.parent_path());
   std::ofstream(p) << text;
}

}  // namespace

TEST(Cardinality, ClosedFormCases)
{
   EXPECT_EQ(expected_cardinality(Matrix(Matrix::Zero(3, 4))), 0.);
   EXPECT_NEAR(expected_cardinality(Matrix(Matrix::Identity(4, 4))), 2.0, 1e-12);
   // rows scaled by sqrt(3): lambda = 3 gives 3/4 per row
   EXPECT_NEAR(expected_cardinality(Matrix(std::sqrt(3.) * Matrix::Identity(2, 2))), 1.5, 1e-12);
}

TEST(Cardinality, DuplicateRowPreservesRank)
{
   Rng rng(4);
   Matrix m(4, 6);
   for(Index i = 0; i < 4; ++i) {
      for(Index j = 0; j < 6; ++j) {
         m(i, j) = rng.uniform(-1., 1.);
      }
   }
   Matrix dup(5, 6);
   dup.topRows(4) = m;
   dup.row(4) = m.row(1);
   EXPECT_EQ(positive_eigenvalues(dup), positive_eigenvalues(m));
   const double before = expected_cardinality(m);
   const double after = expected_cardinality(dup);
   // the value stays below the rank and never drops
   EXPECT_LE(after, 4.);
   EXPECT_GE(after, before - 1e-12);
}

TEST(Cardinality, MonotoneInIndependentRows)
{
   Rng rng(6);
   Matrix m(0, 5);
   double prev = 0.;
   for(int r = 0; r < 5; ++r) {
      Matrix grown(m.rows() + 1, 5);
      grown.topRows(m.rows()) = m;
      for(Index j = 0; j < 5; ++j) {
         grown(m.rows(), j) = rng.uniform(-1., 1.);
      }
      m = grown;
      const double now = expected_cardinality(m);
      EXPECT_GE(now, prev);
      EXPECT_LE(now, static_cast<double>(m.rows()));
      prev = now;
   }
}

TEST(Coverage, CountsCenters)
{
   const MixtureGame g;
   const std::vector<Point2D> at0(5, g.centers()[0]);
   EXPECT_EQ(center_coverage(at0, g), 1);
   EXPECT_EQ(center_coverage(g.centers(), g, 0.1), 7);
   const std::vector<Point2D> origin{{0., 0.}};
   EXPECT_EQ(center_coverage(origin, g), 0);
   EXPECT_THROW(center_coverage(std::vector<Point2D>{}, g), InvalidArgument);
}

TEST(ScoreEval, SelfPlayScoresZeroOnSymmetricGame)
{
   const MatrixGame g = random_symmetric(6, 2);
   const std::vector<MixedStrategy> set{MixedStrategy::pure(6, 0), MixedStrategy::uniform(6), MixedStrategy::pure(6, 4)};
   Vector meta(3);
   meta << 0.2, 0.5, 0.3;
   const auto metas = prefix_metas(meta);
   const auto scores = score_eval(
      std::span<const MixedStrategy>(set), std::span<const Vector>(metas), std::span<const MixedStrategy>(set), meta, FillMode::exact(),
      [&](const MixedStrategy& a, const MixedStrategy& b) { return utility(g, a, b); },
      [&](const MixedStrategy& a, const MixedStrategy& b, Rng& rng) { return play_matrix_episode(g, a, b, rng); });
   ASSERT_EQ(scores.size(), 3u);
   EXPECT_NEAR(scores.back(), 0., 1e-15);
}

TEST(ScoreEval, LengthOnePrefixByHand)
{
   Matrix cross(1, 2);
   cross << 0.6, -0.2;
   Vector ref(2);
   ref << 0.25, 0.75;
   const std::vector<Vector> metas{Vector::Ones(1)};
   const auto s = score_eval(cross, metas, ref);
   ASSERT_EQ(s.size(), 1u);
   EXPECT_NEAR(s[0], 0.6 * 0.25 - 0.2 * 0.75, 1e-15);
}

TEST(ScoreEval, SampledAgreesWithExact)
{
   const MatrixGame g = random_zero_sum(5, 5, 13);
   Rng rng(13);
   std::vector<MixedStrategy> test;
   std::vector<MixedStrategy> ref;
   for(int k = 0; k < 4; ++k) {
      Vector a(5);
      Vector b(5);
      for(Index i = 0; i < 5; ++i) {
         a[i] = rng.uniform();
         b[i] = rng.uniform();
      }
      test.push_back(MixedStrategy::from_weights(a));
      ref.push_back(MixedStrategy::from_weights(b));
   }
   const Vector meta = Vector::Constant(4, 0.25);
   const auto metas = prefix_metas(meta);
   const auto run = [&](const FillMode& mode) {
      return score_eval(
         std::span<const MixedStrategy>(test), std::span<const Vector>(metas), std::span<const MixedStrategy>(ref), meta, mode,
         [&](const MixedStrategy& a, const MixedStrategy& b) { return utility(g, a, b); },
         [&](const MixedStrategy& a, const MixedStrategy& b, Rng& r) { return play_matrix_episode(g, a, b, r); });
   };
   const auto exact = run(FillMode::exact());
   const auto sampled = run(FillMode::sampled(50, 3));
   for(std::size_t i = 0; i < exact.size(); ++i) {
      EXPECT_NEAR(exact[i], sampled[i], 0.1) << i;
   }
}

TEST(ScoreEval, PrefixMetasRenormalize)
{
   Vector meta(3);
   meta << 0., 0.25, 0.75;
   const auto m = prefix_metas(meta);
   ASSERT_EQ(m.size(), 3u);
   EXPECT_DOUBLE_EQ(m[0][0], 1.);  // zero-mass prefix falls back to uniform
   EXPECT_DOUBLE_EQ(m[1][1], 1.);
   EXPECT_DOUBLE_EQ(m[2][2], 0.75);
}

TEST(Config, ParsesAndRejects)
{
   const Config c = Config::parse_string("game.kind = rps  # trailing comment\nrun.epochs = 4\nrun.algorithms = psro, epsro\n");
   const ExperimentConfig x = parse_experiment(c);
   EXPECT_EQ(x.game.kind, "rps");
   EXPECT_EQ(x.run.epochs, 4u);
   EXPECT_EQ(x.algorithms, (std::vector<std::string>{"psro", "epsro"}));
   for(const char* bad : {"game.kind = rps\ngame.colour = red\n", "run.epochs = -3\n", "run.epochs = 4\nrun.epochs = 5\n", "nodot = 1\n", "run.epochs =\n",
                          "game.kind = chess\n", "run.algorithms = psro, psro\n", "epsro.rule = gradient\n", "run.deterministic = maybe\n"}) {
      EXPECT_THROW(parse_experiment(Config::parse_string(bad)), FormatError) << bad;
   }
}

TEST(Config, MixtureDefaultsFollowTheOracle)
{
   const ExperimentConfig x = parse_experiment(Config::parse_string("game.kind = mixture\noracle.steps = 300\noracle.eta = 0.02\n"));
   EXPECT_EQ(x.epsro.level_budget, 300u);
   EXPECT_DOUBLE_EQ(x.epsro.urr.eta_responder, 0.02);
   EXPECT_EQ(x.epsro.urr.rule, ResponderRule::gradient);
   EXPECT_TRUE(x.epsro.urr.respond_to_average);
}

TEST(PolicySets, CsvRoundTrip)
{
   const MatrixGame g = rock_paper_scissors();
   const std::vector<MixedStrategy> set{MixedStrategy::pure(3, 1), MixedStrategy::uniform(3)};
   Vector w(2);
   w << 0.4, 0.6;
   std::stringstream ss;
   write_policy_set(ss, Player::col, std::span<const MixedStrategy>(set), MixedStrategy(w));
   const PolicySetFile f = read_policy_set(ss);
   EXPECT_EQ(f.seat, Player::col);
   ASSERT_EQ(f.policies.size(), 2u);
   EXPECT_EQ(policy_from_fields(g, Player::col, f.policies[1]).probs(), set[1].probs());
   EXPECT_EQ(f.weights, w);
   std::stringstream bad("# seat col\nweight,v0,v1,v2\n0.4,0,1\n");
   EXPECT_THROW(read_policy_set(bad), FormatError);
}

TEST(Experiment, RpsPsroReachesZero)
{
   const ExperimentConfig x = parse_experiment(Config::parse_string("game.kind = rps\nrun.algorithms = psro\nrun.epochs = 5\nrun.sim_episodes = 0\n"));
   const ExperimentOutput out = run_experiment(x);
   ASSERT_EQ(out.ledgers.size(), 1u);
   EXPECT_GE(out.ledgers[0].rows().size(), 1u);
   EXPECT_NEAR(out.ledgers[0].back().nashconv, 0., 1e-12);
   ASSERT_EQ(out.summary.size(), 1u);
   EXPECT_EQ(out.summary[0].algo, "psro");
}

TEST(Experiment, EvalScoresSavedSets)
{
   const ExperimentConfig x = parse_experiment(Config::parse_string("game.kind = rps\nrun.algorithms = psro\nrun.epochs = 3\nrun.sim_episodes = 0\n"));
   const ExperimentOutput out = run_experiment(x);
   ASSERT_FALSE(out.policy_files.empty());
   std::vector<PolicySetFile> sets;
   for(const auto& [name, contents] : out.policy_files) {
      std::istringstream is(contents);
      sets.push_back(read_policy_set(is, name));
   }
   ASSERT_EQ(sets.size(), 2u);
   const AnyGame game = make_game(x.game);
   const auto scores = eval_policy_sets(game, sets[0], sets[1], 0, 0);
   EXPECT_EQ(scores.size(), sets[0].policies.size());
   // the full equilibrium population scores the game value against itself
   EXPECT_NEAR(scores.back(), 0., 1e-9);
   EXPECT_THROW(eval_policy_sets(game, sets[0], sets[0], 0, 0), FormatError);
}

TEST(Cli, RunWritesOutputsDeterministically)
{
   const fs::path a = scratch("det_a");
   const fs::path b = scratch("det_b");
   const fs::path cfg = scratch("det_cfg") / "run.cfg";
   write_text(cfg, "game.kind = random_symmetric\ngame.n = 10\nrun.algorithms = self_play, psro, psro_rn, p_psro, epsro\nrun.epochs = 4\n");
   ASSERT_EQ(run_cli("run --config " + cfg.string() + " --deterministic --out-dir " + a.string()), 0);
   ASSERT_EQ(run_cli("run --config " + cfg.string() + " --deterministic --out-dir " + b.string()), 0);
   const auto ca = tree_contents(a);
   EXPECT_EQ(ca, tree_contents(b));
   for(const char* f : {"summary.csv", "ledger_psro.csv", "ledger_epsro.csv", "nashconv_epoch.svg", "nashconv_sim_episodes.svg"}) {
      EXPECT_EQ(ca.count(f), 1u) << f;
   }
   EXPECT_EQ(ca.at("summary.csv").rfind("algo,seed,epochs,final_nashconv", 0), 0u);
}

TEST(Cli, SeedPrecedence)
{
   const fs::path cfg = scratch("seed_cfg") / "run.cfg";
   write_text(cfg, "game.kind = random_symmetric\ngame.n = 8\nrun.algorithms = psro\nrun.epochs = 2\nrun.seed = 1\n");
   const fs::path flag = scratch("seed_flag");
   const fs::path env = scratch("seed_env");
   const fs::path file = scratch("seed_file");
   ASSERT_EQ(run_cli("run --config " + cfg.string() + " --seed 5 --out-dir " + flag.string()), 0);
   ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out-dir " + file.string()), 0);
   ASSERT_EQ(setenv("EPSRO_SEED", "5", 1), 0);
   ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out-dir " + env.string()), 0);
   unsetenv("EPSRO_SEED");
   const std::string s_flag = slurp(flag / "summary.csv");
   EXPECT_NE(s_flag.find("psro,5,"), std::string::npos);
   EXPECT_NE(slurp(file / "summary.csv").find("psro,1,"), std::string::npos);
   EXPECT_EQ(s_flag, slurp(env / "summary.csv"));
}

TEST(Cli, ErrorExitCodesLeaveNoOutputs)
{
   const fs::path out = scratch("bad_out");
   const fs::path unknown = scratch("bad_cfg") / "unknown.cfg";
   write_text(unknown, "game.kind = rps\nrun.epochs = 2\nrun.colour = blue\n");
   EXPECT_EQ(run_cli("run --config " + unknown.string() + " --out-dir " + out.string()), 2);
   EXPECT_FALSE(fs::exists(out));
   const fs::path missing = scratch("bad_cfg2") / "missing.cfg";
   write_text(missing, "game.kind = file\ngame.path = /nonexistent/game.csv\nrun.epochs = 2\n");
   EXPECT_NE(run_cli("run --config " + missing.string() + " --out-dir " + out.string()), 0);
   EXPECT_FALSE(fs::exists(out));
   EXPECT_NE(run_cli("run"), 0);
   EXPECT_NE(run_cli("frobnicate"), 0);
}

TEST(Cli, GenerateEvalAndPlot)
{
   const fs::path dir = scratch("tools");
   fs::create_directories(dir);
   ASSERT_EQ(run_cli("generate --kind random_symmetric --n 6 --seed 3 --out " + (dir / "g.csv").string()), 0);
   EXPECT_TRUE(load_matrix_csv(dir / "g.csv") == random_symmetric(6, 3));
   EXPECT_EQ(run_cli("generate --kind kuhn"), 2);

   const fs::path cfg = dir / "game.cfg";
   write_text(cfg, "game.kind = file\ngame.path = " + (dir / "g.csv").string() + "\nrun.algorithms = psro, epsro\nrun.epochs = 3\n");
   const fs::path out = dir / "out";
   ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out-dir " + out.string()), 0);
   std::vector<fs::path> sets;
   for(const auto& e : fs::directory_iterator(out)) {
      if(e.path().filename().string().rfind("policies_psro", 0) == 0) {
         sets.push_back(e.path());
      }
   }
   std::sort(sets.begin(), sets.end());
   ASSERT_EQ(sets.size(), 2u);
   EXPECT_EQ(run_cli("eval --config " + cfg.string() + " --test " + sets[0].string() + " --ref " + sets[1].string()), 0);
   EXPECT_EQ(run_cli("eval --config " + cfg.string() + " --test " + sets[0].string() + " --ref " + sets[0].string()), 2);

   const fs::path plots = dir / "plots";
   EXPECT_EQ(run_cli("plot --ledger " + (out / "ledger_psro.csv").string() + " --ledger " + (out / "ledger_epsro.csv").string() + " --out-dir " + plots.string()), 0);
   EXPECT_TRUE(fs::exists(plots / "nashconv_epoch.svg"));
   write_text(dir / "broken.csv", "epoch,nope\n1,2\n");
   EXPECT_EQ(run_cli("plot --ledger " + (dir / "broken.csv").string() + " --out-dir " + plots.string()), 2);
}
