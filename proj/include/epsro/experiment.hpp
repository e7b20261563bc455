#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "epsro/config.hpp"
#include "epsro/game_gen.hpp"
#include "epsro/kuhn.hpp"
#include "epsro/ledger.hpp"
#include "epsro/psro.hpp"
#include "epsro/svg.hpp"

namespace epsro {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct GameSpec {
   std::string kind = "random_symmetric";
   Index n = 15;
   Index rows = 10;
   Index cols = 10;
   std::uint64_t seed = 0;
   std::string path;
   MixtureGameParams mixture;
};

inline const std::vector<std::string>& game_kinds()
{
   static const std::vector<std::string> kinds{"random_symmetric", "random_zero_sum", "matching_pennies", "rps", "kuhn", "mixture", "file"};
   return kinds;
}

inline const std::vector<std::string>& algorithm_names()
{
   static const std::vector<std::string> names{"self_play", "psro", "psro_rn", "p_psro", "epsro"};
   return names;
}

struct ExperimentConfig {
   GameSpec game;
   std::vector<std::string> algorithms{"psro", "epsro"};
   std::uint64_t seed = 0;
   std::size_t num_seeds = 1;
   RunOptions run;
   OracleOptions oracle;
   MetaSolverKind meta_solver = MetaSolverKind::nash_lp;
   PPsroOptions p_psro;
   EpsroOptions epsro;
   double coverage_radius = 0.3;
   bool fresh_starts = true;
   bool save_sets = true;
   std::filesystem::path out_dir = "out";
};

namespace detail {

inline ResponderRule parse_rule(const std::string& s)
{
   for(const auto r : {ResponderRule::mwu, ResponderRule::br_mix, ResponderRule::gradient}) {
      if(s == to_string(r)) {
         return r;
      }
   }
   throw FormatError("unknown responder rule '" + s + "' (expected mwu, br_mix or gradient)");
}

inline void check_config(bool cond, const std::string& what)
{
   if(not cond) {
      throw FormatError("config: " + what);
   }
}

}  // namespace detail

/// Reads every supported key and rejects the rest. Throws FormatError on
/// unknown keys, malformed values or out-of-range settings.
inline ExperimentConfig parse_experiment(const Config& c)
{
   ExperimentConfig x;
   GameSpec& g = x.game;
   g.kind = c.get_string("game.kind", g.kind);
   detail::check_config(std::find(game_kinds().begin(), game_kinds().end(), g.kind) != game_kinds().end(), "unknown game.kind '" + g.kind + "'");
   g.n = static_cast<Index>(c.get_uint("game.n", static_cast<std::uint64_t>(g.n)));
   g.rows = static_cast<Index>(c.get_uint("game.rows", static_cast<std::uint64_t>(g.rows)));
   g.cols = static_cast<Index>(c.get_uint("game.cols", static_cast<std::uint64_t>(g.cols)));
   g.seed = c.get_uint("game.seed", g.seed);
   g.path = c.get_string("game.path", g.path);
   g.mixture.center_radius = c.get_double("game.center_radius", g.mixture.center_radius);
   g.mixture.bandwidth = c.get_double("game.bandwidth", g.mixture.bandwidth);
   g.mixture.arena_radius = c.get_double("game.arena_radius", g.mixture.arena_radius);
   detail::check_config(g.n > 0 and g.rows > 0 and g.cols > 0, "game dimensions must be positive");
   detail::check_config(g.kind != "file" or not g.path.empty(), "game.kind = file needs game.path");
   detail::check_config(g.mixture.bandwidth > 0. and g.mixture.arena_radius > 0., "mixture sizes must be positive");

   x.algorithms = c.get_list("run.algorithms", x.algorithms);
   for(const auto& a : x.algorithms) {
      detail::check_config(std::find(algorithm_names().begin(), algorithm_names().end(), a) != algorithm_names().end(), "unknown algorithm '" + a + "'");
   }
   {
      auto sorted = x.algorithms;
      std::sort(sorted.begin(), sorted.end());
      detail::check_config(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "run.algorithms lists an algorithm twice");
   }
   x.seed = c.get_uint("run.seed", x.seed);
   x.num_seeds = c.get_uint("run.num_seeds", x.num_seeds);
   detail::check_config(x.num_seeds > 0, "run.num_seeds must be positive");
   x.run.epochs = c.get_uint("run.epochs", x.run.epochs);
   x.run.sim_episodes = c.get_uint("run.sim_episodes", x.run.sim_episodes);
   x.run.deterministic = c.get_bool("run.deterministic", x.run.deterministic);

   x.oracle.steps = c.get_uint("oracle.steps", x.oracle.steps);
   x.oracle.eta = c.get_double("oracle.eta", x.oracle.eta);
   x.fresh_starts = c.get_bool("oracle.fresh_starts", x.fresh_starts);
   detail::check_config(x.oracle.eta > 0., "oracle.eta must be positive");

   try {
      x.meta_solver = parse_meta_solver(c.get_string("psro.meta_solver", "nash_lp"));
   } catch(const InvalidArgument& e) {
      throw FormatError(std::string("config: ") + e.what());
   }

   x.p_psro.workers = c.get_uint("p_psro.workers", x.p_psro.workers);
   x.p_psro.br_rate = c.get_double("p_psro.br_rate", x.p_psro.br_rate);
   x.p_psro.steps_per_level = c.get_uint("p_psro.steps_per_level", x.p_psro.steps_per_level);
   detail::check_config(x.p_psro.workers > 0 and x.p_psro.steps_per_level > 0, "p_psro workers and steps must be positive");
   detail::check_config(x.p_psro.br_rate > 0. and x.p_psro.br_rate <= 1., "p_psro.br_rate must lie in (0, 1]");

   EpsroOptions& e = x.epsro;
   e.workers = c.get_uint("epsro.workers", e.workers);
   e.round_iters = c.get_uint("epsro.round_iters", e.round_iters);
   e.plateau_tol = c.get_double("epsro.plateau_tol", e.plateau_tol);
   e.plateau_window = c.get_uint("epsro.plateau_window", e.plateau_window);
   e.warm_start = c.get_bool("epsro.warm_start", e.warm_start);
   e.threads = c.get_bool("epsro.threads", e.threads);
   // point responders default to the oracle's step size and budget, a
   // sparser exploitability check and steps against the average meta
   const bool points = g.kind == "mixture";
   if(points) {
      e.urr.eta_responder = x.oracle.eta;
      e.level_budget = x.oracle.steps;
      e.urr.check_every = 50;
      e.urr.respond_to_average = true;
   }
   e.level_budget = c.get_uint("epsro.level_budget", e.level_budget);
   e.urr.eta_responder = c.get_double("epsro.eta_responder", e.urr.eta_responder);
   e.urr.eta_meta = c.get_double("epsro.eta_meta", e.urr.eta_meta);
   e.urr.eps_target = c.get_double("epsro.eps_target", e.urr.eps_target);
   e.urr.check_every = c.get_uint("epsro.check_every", e.urr.check_every);
   e.urr.respond_to_average = c.get_bool("epsro.respond_to_average", e.urr.respond_to_average);
   e.urr.br_rate = c.get_double("epsro.br_rate", e.urr.br_rate);
   e.urr.window = c.get_uint("epsro.window", e.urr.window);
   const std::string rule = c.get_string("epsro.rule", points ? "gradient" : "mwu");
   e.urr.rule = detail::parse_rule(rule);
   const std::string mode = c.get_string("epsro.mode", "exact");
   detail::check_config(mode == "exact" or mode == "sampled", "epsro.mode must be exact or sampled");
   e.urr.mode = mode == "exact" ? UrrConfig::Mode::exact : UrrConfig::Mode::sampled;
   const std::string method = c.get_string("epsro.warm_method", "max_entropy");
   detail::check_config(method == "gradient" or method == "max_entropy", "epsro.warm_method must be gradient or max_entropy");
   e.extend.method = method == "gradient" ? ExtendOptions::Method::gradient : ExtendOptions::Method::max_entropy;
   e.extend.meta_smoothing = c.get_double("epsro.meta_smoothing", e.extend.meta_smoothing);
   e.extend.safeguard = c.get_bool("epsro.safeguard", e.extend.safeguard);
   e.extend.lambda = c.get_double("epsro.warm_lambda", e.extend.lambda);
   detail::check_config(e.workers > 0 and e.level_budget > 0 and e.round_iters > 0, "epsro workers and budgets must be positive");
   detail::check_config(e.extend.meta_smoothing >= 0. and e.extend.meta_smoothing <= 1., "epsro.meta_smoothing must lie in [0, 1]");
   try {
      e.urr.validate();
   } catch(const InvalidArgument& err) {
      throw FormatError(std::string("config: ") + err.what());
   }
   detail::check_config(g.kind != "mixture" or e.urr.rule == ResponderRule::gradient, "the mixture game needs epsro.rule = gradient");
   detail::check_config(g.kind == "mixture" or e.urr.rule != ResponderRule::gradient, "epsro.rule = gradient is only defined for the mixture game");

   x.coverage_radius = c.get_double("metrics.coverage_radius", x.coverage_radius);
   detail::check_config(x.coverage_radius > 0., "metrics.coverage_radius must be positive");
   x.out_dir = c.get_string("output.dir", x.out_dir.string());
   x.save_sets = c.get_bool("output.save_sets", x.save_sets);
   c.check_all_used();
   return x;
}

// ---------------------------------------------------------------------------
// Games
// ---------------------------------------------------------------------------

/// A constructed game of any supported kind.
using AnyGame = std::variant<MatrixGame, GameTree, MixtureGame>;

inline AnyGame make_game(const GameSpec& g)
{
   if(g.kind == "random_symmetric") {
      return random_symmetric(g.n, g.seed);
   }
   if(g.kind == "random_zero_sum") {
      return random_zero_sum(g.rows, g.cols, g.seed);
   }
   if(g.kind == "matching_pennies") {
      return matching_pennies();
   }
   if(g.kind == "rps") {
      return rock_paper_scissors();
   }
   if(g.kind == "kuhn") {
      return build_kuhn();
   }
   if(g.kind == "mixture") {
      return MixtureGame(g.mixture);
   }
   if(g.kind == "file") {
      return load_matrix_csv(g.path);
   }
   throw FormatError("unknown game kind '" + g.kind + "'");
}

// ---------------------------------------------------------------------------
// Policy-set files: `# seat row|col`, header `weight,v0,v1,...`, one policy
// per line. Kuhn policies are flattened infoset by infoset.
// ---------------------------------------------------------------------------

inline std::vector<double> policy_fields(const MixedStrategy& s) { return {s.probs().begin(), s.probs().end()}; }

inline std::vector<double> policy_fields(const Point2D& p) { return {p.x, p.y}; }

inline std::vector<double> policy_fields(const BehaviorPolicy& b)
{
   std::vector<double> out;
   for(const auto& v : b.table()) {
      out.insert(out.end(), v.begin(), v.end());
   }
   return out;
}

template <typename Policy>
void write_policy_set(std::ostream& os, Player seat, std::span<const Policy> set, const MixedStrategy& meta)
{
   detail::require(static_cast<std::size_t>(meta.size()) == set.size(), "write_policy_set: meta size mismatch");
   os << "# seat " << to_string(seat) << '\n';
   const std::size_t width = policy_fields(set.front()).size();
   os << "weight";
   for(std::size_t k = 0; k < width; ++k) {
      os << ",v" << k;
   }
   os << '\n';
   for(std::size_t i = 0; i < set.size(); ++i) {
      os << detail::format_double(meta[static_cast<Index>(i)]);
      for(const double v : policy_fields(set[i])) {
         os << ',' << detail::format_double(v);
      }
      os << '\n';
   }
}

struct PolicySetFile {
   Player seat = Player::row;
   Vector weights;
   std::vector<std::vector<double>> policies;
};

inline PolicySetFile read_policy_set(std::istream& is, const std::string& source = "<policies>")
{
   PolicySetFile out;
   std::vector<double> weights;
   std::string line;
   std::size_t line_no = 0;
   bool header = false;
   std::size_t width = 0;
   while(std::getline(is, line)) {
      ++line_no;
      const std::string ctx = source + ":" + std::to_string(line_no);
      if(not line.empty() and line.back() == '\r') {
         line.pop_back();
      }
      if(line.empty()) {
         continue;
      }
      if(line.front() == '#') {
         if(line.find("seat col") != std::string::npos) {
            out.seat = Player::col;
         }
         continue;
      }
      const auto fields = detail::split(line, ',');
      if(not header) {
         if(fields.size() < 2 or fields.front() != "weight") {
            throw FormatError(ctx + ": header must start with 'weight'");
         }
         width = fields.size() - 1;
         header = true;
         continue;
      }
      if(fields.size() != width + 1) {
         throw FormatError(ctx + ": expected " + std::to_string(width + 1) + " fields");
      }
      weights.push_back(detail::parse_double(fields[0], ctx));
      std::vector<double> v;
      for(std::size_t k = 1; k < fields.size(); ++k) {
         v.push_back(detail::parse_double(fields[k], ctx));
      }
      out.policies.push_back(std::move(v));
   }
   if(out.policies.empty()) {
      throw FormatError(source + ": no policies");
   }
   out.weights = Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size()));
   if(not((out.weights.array() >= 0.).all() and std::abs(out.weights.sum() - 1.) <= 1e-6)) {
      throw FormatError(source + ": weights must form a probability vector");
   }
   out.weights /= out.weights.sum();
   return out;
}

inline MixedStrategy policy_from_fields(const MatrixGame& game, Player seat, const std::vector<double>& v)
{
   if(static_cast<Index>(v.size()) != game.n_actions(seat)) {
      throw FormatError("policy has " + std::to_string(v.size()) + " entries, the game has " + std::to_string(game.n_actions(seat)) + " actions");
   }
   return MixedStrategy(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()))));
}

inline Point2D policy_from_fields(const MixtureGame& game, Player, const std::vector<double>& v)
{
   if(v.size() != 2) {
      throw FormatError("mixture-game policies have two coordinates");
   }
   const Point2D p{v[0], v[1]};
   game.check(p);
   return p;
}

inline BehaviorPolicy policy_from_fields(const GameTree& tree, Player seat, const std::vector<double>& v)
{
   std::vector<Vector> probs;
   std::size_t at = 0;
   for(const auto& is : tree.infosets(seat)) {
      const auto n = static_cast<std::size_t>(is.n_actions);
      if(at + n > v.size()) {
         throw FormatError("behavior policy is too short for the game tree");
      }
      probs.emplace_back(Eigen::Map<const Vector>(v.data() + at, static_cast<Index>(n)));
      at += n;
   }
   if(at != v.size()) {
      throw FormatError("behavior policy is too long for the game tree");
   }
   return {seat, std::move(probs)};
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct SummaryRow {
   std::string algo;
   std::uint64_t seed = 0;
   LedgerRow last;
   /// covered hump centers (mixture game only, else -1)
   int coverage = -1;
};

struct ExperimentOutput {
   std::vector<RunLedger> ledgers;
   std::vector<SummaryRow> summary;
   std::vector<Trajectory> trajectories;
   /// file name -> contents of saved policy sets
   std::map<std::string, std::string> policy_files;
};

namespace detail {

template <typename Ops>
RunResult<typename Ops::Policy> run_named(const Ops& ops, const std::string& algo, const ExperimentConfig& x, std::uint64_t seed)
{
   RunOptions run = x.run;
   run.seed = seed;
   if(algo == "epsro") {
      EpsroOptions o = x.epsro;
      o.run = run;
      return run_epsro(ops, o);
   }
   if(algo == "p_psro") {
      PPsroOptions o = x.p_psro;
      o.run = run;
      o.oracle = x.oracle;
      return run_p_psro(ops, o);
   }
   PsroOptions o;
   o.run = run;
   o.meta_solver = x.meta_solver;
   o.oracle = x.oracle;
   if(algo == "psro") {
      return run_psro(ops, o);
   }
   if(algo == "self_play") {
      return run_self_play(ops, o);
   }
   if(algo == "psro_rn") {
      return run_psro_rn(ops, o);
   }
   throw InvalidArgument("unknown algorithm '" + algo + "'");
}

template <typename Ops>
void run_all(const Ops& ops, const ExperimentConfig& x, const MixtureGame* mixture, ExperimentOutput& out)
{
   using Policy = typename Ops::Policy;
   for(const auto& algo : x.algorithms) {
      for(std::size_t s = 0; s < x.num_seeds; ++s) {
         const std::uint64_t seed = x.seed + s;
         auto r = run_named(ops, algo, x, seed);
         SummaryRow row{algo, seed, r.ledger.back(), -1};
         if constexpr(std::is_same_v<Policy, Point2D>) {
            row.coverage = center_coverage(std::span<const Point2D>(r.sets[0]), *mixture, x.coverage_radius);
            if(s == 0) {
               out.trajectories.push_back({algo, r.sets[0]});
            }
         }
         if(x.save_sets) {
            for(const Player p : {Player::row, Player::col}) {
               const int pi = index_of(p);
               // entries newer than the last solved meta get weight 0
               Vector w = Vector::Zero(static_cast<Index>(r.sets[pi].size()));
               w.head(r.final_meta[pi].size()) = r.final_meta[pi].probs();
               std::ostringstream os;
               write_policy_set(os, p, std::span<const Policy>(r.sets[pi]), MixedStrategy(w));
               out.policy_files["policies_" + algo + "_seed" + std::to_string(seed) + "_" + to_string(p) + ".csv"] = os.str();
            }
         }
         out.summary.push_back(std::move(row));
         out.ledgers.push_back(std::move(r.ledger));
      }
   }
   (void)mixture;
}

}  // namespace detail

/// Runs every configured algorithm for every seed. Nothing is written.
inline ExperimentOutput run_experiment(const ExperimentConfig& x)
{
   const AnyGame game = make_game(x.game);
   ExperimentOutput out;
   std::visit(
      [&](const auto& g) {
         using G = std::decay_t<decltype(g)>;
         if constexpr(std::is_same_v<G, MatrixGame>) {
            detail::run_all(MatrixOps(g), x, nullptr, out);
         } else if constexpr(std::is_same_v<G, GameTree>) {
            detail::run_all(KuhnOps(g), x, nullptr, out);
         } else {
            detail::run_all(MixtureOps(g, x.fresh_starts), x, &g, out);
         }
      },
      game);
   return out;
}

inline const char* summary_header() { return "algo,seed,epochs,final_nashconv,final_cardinality,set_size_p1,set_size_p2,sim_episodes,meta_iters,coverage"; }

inline void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows)
{
   os << summary_header() << '\n';
   for(const auto& r : rows) {
      os << r.algo << ',' << r.seed << ',' << r.last.epoch << ',' << detail::format_double(r.last.nashconv) << ','
         << detail::format_double(r.last.cardinality) << ',' << r.last.set_size_p1 << ',' << r.last.set_size_p2 << ','
         << r.last.sim_episodes << ',' << r.last.meta_iters << ',';
      if(r.coverage >= 0) {
         os << r.coverage;
      }
      os << '\n';
   }
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& contents)
{
   std::ofstream os(path, std::ios::binary);
   if(not os) {
      throw std::runtime_error("cannot open '" + path.string() + "' for writing");
   }
   os << contents;
   if(not os) {
      throw std::runtime_error("failed writing '" + path.string() + "'");
   }
}

}  // namespace detail

/// NashConv-vs-epoch and NashConv-vs-episodes plots, keyed by file name.
inline std::map<std::string, std::string> render_plots(std::span<const RunLedger> ledgers)
{
   std::map<std::string, std::string> files;
   std::ostringstream by_epoch;
   write_line_plot(by_epoch, nashconv_plot(ledgers, LedgerAxis::epoch));
   files["nashconv_epoch.svg"] = by_epoch.str();
   std::ostringstream by_episodes;
   write_line_plot(by_episodes, nashconv_plot(ledgers, LedgerAxis::sim_episodes));
   files["nashconv_sim_episodes.svg"] = by_episodes.str();
   return files;
}

inline void write_files(const std::filesystem::path& dir, const std::map<std::string, std::string>& files)
{
   std::filesystem::create_directories(dir);
   for(const auto& [name, contents] : files) {
      detail::write_file(dir / name, contents);
   }
}

/// Writes ledgers (one CSV per algorithm), the summary, plots and saved
/// policy sets. All contents are rendered before the first file is created.
inline void write_experiment(const std::filesystem::path& dir, const ExperimentOutput& out, const MixtureGame* mixture, double coverage_radius)
{
   std::map<std::string, std::string> files;
   std::map<std::string, std::vector<const RunLedger*>> by_algo;
   std::vector<std::string> order;
   for(const auto& l : out.ledgers) {
      if(by_algo.count(l.algo()) == 0) {
         order.push_back(l.algo());
      }
      by_algo[l.algo()].push_back(&l);
   }
   for(const auto& algo : order) {
      std::ostringstream os;
      os << ledger_header << '\n';
      for(const auto* l : by_algo[algo]) {
         write_ledger_rows(os, *l);
      }
      files["ledger_" + algo + ".csv"] = os.str();
   }
   {
      std::ostringstream os;
      write_summary_csv(os, out.summary);
      files["summary.csv"] = os.str();
   }
   files.merge(render_plots(out.ledgers));
   if(mixture != nullptr and not out.trajectories.empty()) {
      std::ostringstream os;
      write_trajectory_svg(os, *mixture, out.trajectories, coverage_radius);
      files["trajectories.svg"] = os.str();
   }
   for(const auto& [name, contents] : out.policy_files) {
      files[name] = contents;
   }
   write_files(dir, files);
}

/// Prefix scores of a saved test set against a saved reference set.
/// `episodes` = 0 evaluates the cross table exactly.
inline std::vector<double> eval_policy_sets(
   const AnyGame& game, const PolicySetFile& test, const PolicySetFile& ref, std::uint64_t episodes, std::uint64_t seed)
{
   if(test.seat == ref.seat) {
      throw FormatError("eval: test and reference sets must belong to opposite seats");
   }
   const FillMode mode = episodes == 0 ? FillMode::exact() : FillMode::sampled(episodes, seed);
   const std::vector<Vector> metas = prefix_metas(test.weights);
   return std::visit(
      [&](const auto& g) {
         using G = std::decay_t<decltype(g)>;
         using Ops = std::conditional_t<std::is_same_v<G, MatrixGame>, MatrixOps, std::conditional_t<std::is_same_v<G, GameTree>, KuhnOps, MixtureOps>>;
         using Policy = typename Ops::Policy;
         const Ops ops(g);
         std::vector<Policy> t;
         std::vector<Policy> r;
         for(const auto& v : test.policies) {
            t.push_back(policy_from_fields(g, test.seat, v));
         }
         for(const auto& v : ref.policies) {
            r.push_back(policy_from_fields(g, ref.seat, v));
         }
         // scores are from the test seat's perspective
         const bool test_is_row = test.seat == Player::row;
         return score_eval(
            std::span<const Policy>(t),
            std::span<const Vector>(metas),
            std::span<const Policy>(r),
            ref.weights,
            mode,
            [&](const Policy& a, const Policy& b) { return test_is_row ? ops.utility(a, b) : -ops.utility(b, a); },
            [&](const Policy& a, const Policy& b, Rng& rng) { return test_is_row ? ops.episode(a, b, rng) : -ops.episode(b, a, rng); });
      },
      game);
}

}  // namespace epsro
