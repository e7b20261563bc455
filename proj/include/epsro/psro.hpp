#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "epsro/game_ops.hpp"
#include "epsro/ledger.hpp"
#include "epsro/lp.hpp"
#include "epsro/metrics.hpp"
#include "epsro/payoff_table.hpp"
#include "epsro/restricted_set.hpp"
#include "epsro/urr_solver.hpp"

namespace epsro {

enum class MetaSolverKind { nash_lp, uniform };

inline MetaSolverKind parse_meta_solver(const std::string& s)
{
   if(s == "nash_lp") {
      return MetaSolverKind::nash_lp;
   }
   if(s == "uniform") {
      return MetaSolverKind::uniform;
   }
   throw InvalidArgument("unknown meta solver '" + s + "' (expected nash_lp or uniform)");
}

/// Meta-strategies of a complete meta-game table. The LP solution is an
/// exact equilibrium; `uniform` gives fictitious-play style mixing.
inline ZeroSumSolution meta_solver_lp(const Matrix& table, MetaSolverKind kind = MetaSolverKind::nash_lp)
{
   if(kind == MetaSolverKind::uniform) {
      ZeroSumSolution s{MixedStrategy::uniform(table.rows()), MixedStrategy::uniform(table.cols()), 0.};
      s.value = s.row.probs().dot(table * s.col.probs());
      return s;
   }
   return solve_zero_sum(table);
}

/// Per-epoch SolveURR outputs of the EPSRO runner; `meta[p]` is the
/// mixture over p's restricted entries (the opponent solver's meta).
template <typename Policy>
struct EpochSolve {
   int epoch = 0;
   std::array<Policy, 2> responder;
   std::array<MixedStrategy, 2> meta;
   std::array<double, 2> exploitability{};
   std::array<std::size_t, 2> iterations{};
};

template <typename Policy>
struct RunResult {
   RunLedger ledger;
   std::array<std::vector<Policy>, 2> sets;
   std::array<MixedStrategy, 2> final_meta;
   std::vector<EpochSolve<Policy>> solves;
   /// loss histories of every SolveURR segment, one per restricted-set state
   std::vector<std::vector<LossRecord>> meta_runs;
};

struct RunOptions {
   /// number of epochs after the initial one
   std::size_t epochs = 20;
   std::uint64_t seed = 0;
   /// wall-clock timing is reported only when false
   bool deterministic = true;
   /// episodes per meta-game table cell; 0 fills tables exactly
   std::uint64_t sim_episodes = 100;
};

struct PsroOptions {
   RunOptions run;
   MetaSolverKind meta_solver = MetaSolverKind::nash_lp;
   OracleOptions oracle;
};

struct PPsroOptions {
   RunOptions run;
   std::size_t workers = 4;
   /// br_mix rate of each active-policy step
   double br_rate = 1.0;
   /// steps the lowest active policy takes before promotion
   std::size_t steps_per_level = 1;
   OracleOptions oracle;
};

struct EpsroOptions {
   RunOptions run;
   std::size_t workers = 4;
   UrrConfig urr;
   /// SolveURR iteration budget of one level
   std::size_t level_budget = 1000;
   /// iterations every worker advances between synchronizations
   std::size_t round_iters = 100;
   /// promote when exploitability improved less than this over the window
   double plateau_tol = 1e-4;
   std::size_t plateau_window = 100;
   bool warm_start = true;
   ExtendOptions extend;
   bool threads = false;
};

namespace detail {

inline std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start, bool deterministic)
{
   if(deterministic) {
      return 0;
   }
   return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

inline FillMode table_mode(const RunOptions& run, bool sampled_tables)
{
   if(run.sim_episodes == 0 or not sampled_tables) {
      return FillMode::exact();
   }
   return FillMode::sampled(run.sim_episodes, mix_seed(run.seed, 0x7ab1e));
}

template <typename Ops>
Matrix exact_table(const Ops& ops, std::span<const typename Ops::Policy> rows, std::span<const typename Ops::Policy> cols)
{
   Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
   for(std::size_t i = 0; i < rows.size(); ++i) {
      for(std::size_t j = 0; j < cols.size(); ++j) {
         m(static_cast<Index>(i), static_cast<Index>(j)) = ops.utility(rows[i], cols[j]);
      }
   }
   return m;
}

template <typename Ops>
void fill_table(const Ops& ops, PayoffTable& table, std::span<const typename Ops::Policy> rows, std::span<const typename Ops::Policy> cols, const FillMode& mode)
{
   fill_missing(
      table,
      static_cast<Index>(rows.size()),
      static_cast<Index>(cols.size()),
      mode,
      [&](Index i, Index j) { return ops.utility(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]); },
      [&](Index i, Index j, Rng& rng) { return ops.episode(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)], rng); });
}

/// Dense copy of the table's top-left n x m corner (cells must be filled).
inline Matrix table_corner(const PayoffTable& table, Index n, Index m)
{
   Matrix out(n, m);
   for(Index i = 0; i < n; ++i) {
      for(Index j = 0; j < m; ++j) {
         out(i, j) = table.at(i, j);
      }
   }
   return out;
}

template <typename Ops>
LedgerRow make_row(
   const Ops& ops,
   int epoch,
   std::span<const typename Ops::Policy> rows,
   const MixedStrategy& meta_row,
   std::span<const typename Ops::Policy> cols,
   const MixedStrategy& meta_col)
{
   LedgerRow r;
   r.epoch = epoch;
   // clamp round-off below the exact lower bound of 0
   r.nashconv = std::max(0., ops.nash_conv(rows, meta_row, cols, meta_col));
   r.cardinality = expected_cardinality(exact_table(ops, rows, cols));
   r.set_size_p1 = rows.size();
   r.set_size_p2 = cols.size();
   return r;
}

/// Start point of the oracle producing `p`'s policy at `level`: the
/// adapter's seeded restart when it has one, else `last`.
template <typename Ops>
typename Ops::Policy oracle_start(const Ops& ops, Player p, const typename Ops::Policy& last, std::uint64_t seed, std::size_t level)
{
   auto fresh = ops.fresh_start(p, mix_seed(seed, static_cast<std::uint64_t>(level), 2 + static_cast<std::uint64_t>(index_of(p))));
   return fresh ? std::move(*fresh) : last;
}

}  // namespace detail

/// PSRO: best responses against the meta-game equilibrium of a simulated
/// payoff table.
template <typename Ops>
RunResult<typename Ops::Policy> run_psro(const Ops& ops, const PsroOptions& opt, const std::string& algo = "psro")
{
   using Policy = typename Ops::Policy;
   const auto start = std::chrono::steady_clock::now();
   const FillMode mode = detail::table_mode(opt.run, Ops::sampled_tables);
   RunResult<Policy> out;
   out.ledger = RunLedger(algo, opt.run.seed);
   auto& sets = out.sets;
   sets[0] = {ops.initial(Player::row, opt.run.seed)};
   sets[1] = {ops.initial(Player::col, opt.run.seed)};
   PayoffTable table;
   for(std::size_t e = 0;; ++e) {
      detail::fill_table(ops, table, std::span<const Policy>(sets[0]), std::span<const Policy>(sets[1]), mode);
      const ZeroSumSolution sol = meta_solver_lp(table.matrix(), opt.meta_solver);
      LedgerRow row = detail::make_row(ops, static_cast<int>(e), std::span<const Policy>(sets[0]), sol.row, std::span<const Policy>(sets[1]), sol.col);
      row.sim_episodes = table.episode_cost();
      row.wall_ms = detail::elapsed_ms(start, opt.run.deterministic);
      out.ledger.add(row);
      out.final_meta = {sol.row, sol.col};
      if(e == opt.run.epochs) {
         break;
      }
      const std::size_t level = sets[0].size();
      Policy br_row = ops.best_response(Player::row, sets[1], sol.col.probs(), detail::oracle_start(ops, Player::row, sets[0].back(), opt.run.seed, level), opt.oracle);
      Policy br_col = ops.best_response(Player::col, sets[0], sol.row.probs(), detail::oracle_start(ops, Player::col, sets[1].back(), opt.run.seed, level), opt.oracle);
      sets[0].push_back(std::move(br_row));
      sets[1].push_back(std::move(br_col));
   }
   return out;
}

/// Self-play: each seat best-responds to the opponent's latest policy. The
/// ledger scores the latest pair.
template <typename Ops>
RunResult<typename Ops::Policy> run_self_play(const Ops& ops, const PsroOptions& opt)
{
   using Policy = typename Ops::Policy;
   const auto start = std::chrono::steady_clock::now();
   RunResult<Policy> out;
   out.ledger = RunLedger("self_play", opt.run.seed);
   auto& sets = out.sets;
   sets[0] = {ops.initial(Player::row, opt.run.seed)};
   sets[1] = {ops.initial(Player::col, opt.run.seed)};
   const Vector one = Vector::Ones(1);
   const MixedStrategy pure = MixedStrategy::uniform(1);
   for(std::size_t e = 0;; ++e) {
      const std::span<const Policy> last_row(&sets[0].back(), 1);
      const std::span<const Policy> last_col(&sets[1].back(), 1);
      LedgerRow row = detail::make_row(ops, static_cast<int>(e), last_row, pure, last_col, pure);
      row.wall_ms = detail::elapsed_ms(start, opt.run.deterministic);
      out.ledger.add(row);
      if(e == opt.run.epochs) {
         break;
      }
      const std::size_t level = sets[0].size();
      Policy br_row = ops.best_response(Player::row, last_col, one, detail::oracle_start(ops, Player::row, sets[0].back(), opt.run.seed, level), opt.oracle);
      Policy br_col = ops.best_response(Player::col, last_row, one, detail::oracle_start(ops, Player::col, sets[1].back(), opt.run.seed, level), opt.oracle);
      sets[0].push_back(std::move(br_row));
      sets[1].push_back(std::move(br_col));
   }
   out.final_meta = {MixedStrategy::pure(static_cast<Index>(sets[0].size()), static_cast<Index>(sets[0].size()) - 1),
                     MixedStrategy::pure(static_cast<Index>(sets[1].size()), static_cast<Index>(sets[1].size()) - 1)};
   return out;
}

/// PSRO-rN: every supported policy best-responds to the equilibrium mass of
/// the opponents it beats or ties.
template <typename Ops>
RunResult<typename Ops::Policy> run_psro_rn(const Ops& ops, const PsroOptions& opt)
{
   using Policy = typename Ops::Policy;
   const auto start = std::chrono::steady_clock::now();
   const FillMode mode = detail::table_mode(opt.run, Ops::sampled_tables);
   RunResult<Policy> out;
   out.ledger = RunLedger("psro_rn", opt.run.seed);
   auto& sets = out.sets;
   sets[0] = {ops.initial(Player::row, opt.run.seed)};
   sets[1] = {ops.initial(Player::col, opt.run.seed)};
   PayoffTable table;
   for(std::size_t e = 0;; ++e) {
      detail::fill_table(ops, table, std::span<const Policy>(sets[0]), std::span<const Policy>(sets[1]), mode);
      const Matrix& m = table.matrix();
      const ZeroSumSolution sol = meta_solver_lp(m, opt.meta_solver);
      LedgerRow row = detail::make_row(ops, static_cast<int>(e), std::span<const Policy>(sets[0]), sol.row, std::span<const Policy>(sets[1]), sol.col);
      row.sim_episodes = table.episode_cost();
      row.wall_ms = detail::elapsed_ms(start, opt.run.deterministic);
      out.ledger.add(row);
      out.final_meta = {sol.row, sol.col};
      if(e == opt.run.epochs) {
         break;
      }
      std::array<std::vector<Policy>, 2> fresh;
      for(const Player p : {Player::row, Player::col}) {
         const int pi = index_of(p);
         const MixedStrategy& own = p == Player::row ? sol.row : sol.col;
         const MixedStrategy& opp = p == Player::row ? sol.col : sol.row;
         for(std::size_t j = 0; j < sets[pi].size(); ++j) {
            if(own[static_cast<Index>(j)] <= 1e-9) {
               continue;
            }
            Vector w = opp.probs();
            for(Index k = 0; k < w.size(); ++k) {
               const double u = p == Player::row ? m(static_cast<Index>(j), k) : -m(k, static_cast<Index>(j));
               if(u < 0.) {
                  w[k] = 0.;
               }
            }
            if(not(w.sum() > 0.)) {
               w = opp.probs();
            }
            const std::size_t level = sets[pi].size() + fresh[pi].size();
            fresh[pi].push_back(ops.best_response(p, sets[1 - pi], w, detail::oracle_start(ops, p, sets[pi][j], opt.run.seed, level), opt.oracle));
         }
      }
      for(int pi = 0; pi < 2; ++pi) {
         for(auto& f : fresh[pi]) {
            sets[pi].push_back(std::move(f));
         }
      }
   }
   return out;
}

/// Pipeline PSRO: `workers` active policies per seat, each training against
/// the equilibrium of the table below its level. With one worker and the
/// default rates this reproduces PSRO.
template <typename Ops>
RunResult<typename Ops::Policy> run_p_psro(const Ops& ops, const PPsroOptions& opt)
{
   using Policy = typename Ops::Policy;
   detail::require(opt.workers > 0, "p_psro: at least one worker required");
   detail::require(opt.steps_per_level > 0, "p_psro: steps_per_level must be positive");
   detail::require(opt.br_rate > 0. and opt.br_rate <= 1., "p_psro: br_rate must lie in (0, 1]");
   const auto start = std::chrono::steady_clock::now();
   const FillMode mode = detail::table_mode(opt.run, Ops::sampled_tables);
   RunResult<Policy> out;
   out.ledger = RunLedger("p_psro", opt.run.seed);
   std::array<RestrictedPolicySet<Policy>, 2> sets;
   sets[0].add_fixed(ops.initial(Player::row, opt.run.seed));
   sets[1].add_fixed(ops.initial(Player::col, opt.run.seed));
   std::vector<std::size_t> steps;
   const auto spawn = [&] {
      for(auto& s : sets) {
         s.add_active(s[s.size() - 1]);
      }
      steps.push_back(0);
   };
   PayoffTable table;
   const auto fill = [&](std::size_t n) {
      detail::fill_table(ops, table, sets[0].entries().first(n), sets[1].entries().first(n), mode);
   };
   const auto record = [&](std::size_t epoch) {
      const std::size_t n = sets[0].n_fixed();
      fill(std::max(n, static_cast<std::size_t>(table.rows())));
      const ZeroSumSolution sol = meta_solver_lp(detail::table_corner(table, static_cast<Index>(n), static_cast<Index>(n)));
      LedgerRow row = detail::make_row(ops, static_cast<int>(epoch), sets[0].entries().first(n), sol.row, sets[1].entries().first(n), sol.col);
      row.sim_episodes = table.episode_cost();
      row.wall_ms = detail::elapsed_ms(start, opt.run.deterministic);
      out.ledger.add(row);
      out.final_meta = {sol.row, sol.col};
   };
   record(0);
   for(std::size_t w = 0; w < opt.workers; ++w) {
      spawn();
   }
   std::size_t epoch = 0;
   while(epoch < opt.run.epochs) {
      const std::size_t low = sets[0].lowest_active();
      const std::size_t top = sets[0].size() - 1;
      fill(top);
      std::array<std::vector<Policy>, 2> next;
      for(std::size_t j = low; j <= top; ++j) {
         const auto jj = static_cast<Index>(j);
         const ZeroSumSolution sol = meta_solver_lp(detail::table_corner(table, jj, jj));
         for(const Player p : {Player::row, Player::col}) {
            const int pi = index_of(p);
            const auto opp = sets[1 - pi].entries().first(j);
            const MixedStrategy& w = p == Player::row ? sol.col : sol.row;
            // a new level's first step restarts; later steps refine the iterate
            const Policy br = ops.best_response(p, opp, w.probs(), steps[j - low] == 0 ? detail::oracle_start(ops, p, sets[pi][j], opt.run.seed, j) : sets[pi][j], opt.oracle);
            next[pi].push_back(opt.br_rate == 1. ? br : ops.blend(br, sets[pi][j], opt.br_rate));
         }
      }
      for(std::size_t j = low; j <= top; ++j) {
         ++steps[j - low];
         for(int pi = 0; pi < 2; ++pi) {
            sets[pi].update_active(j, next[pi][j - low]);
         }
         const Index n = table.rows();
         if(static_cast<Index>(j) < n) {
            for(Index k = 0; k < n; ++k) {
               table.invalidate(static_cast<Index>(j), k);
               table.invalidate(k, static_cast<Index>(j));
            }
         }
      }
      if(steps.front() >= opt.steps_per_level) {
         for(auto& s : sets) {
            s.promote(low);
         }
         steps.erase(steps.begin());
         ++epoch;
         record(epoch);
         spawn();
      }
   }
   out.sets = {sets[0].fixed_entries(), sets[1].fixed_entries()};
   return out;
}

/// EPSRO: pipelined SolveURR workers with warm-started meta-strategies.
///
/// The worker at level j trains both seats' responders in the URR games
/// against the opponent's entries [0, j). Every round each worker advances
/// `round_iters` iterations, publishes its average responders, and the
/// workers above refresh their snapshots. The lowest worker is promoted
/// once both solvers converged, plateaued or spent the level budget.
template <typename Ops>
RunResult<typename Ops::Policy> run_epsro(const Ops& ops, const EpsroOptions& opt)
{
   using Policy = typename Ops::Policy;
   using Ctx = typename Ops::Context;
   using Solver = UrrSolver<Ctx>;
   detail::require(opt.workers > 0, "epsro: at least one worker required");
   detail::require(opt.round_iters > 0 and opt.level_budget > 0, "epsro: iteration budgets must be positive");
   opt.urr.validate();
   const auto start = std::chrono::steady_clock::now();
   RunResult<Policy> out;
   out.ledger = RunLedger("epsro", opt.run.seed);
   std::array<RestrictedPolicySet<Policy>, 2> sets;
   sets[0].add_fixed(ops.initial(Player::row, opt.run.seed));
   sets[1].add_fixed(ops.initial(Player::col, opt.run.seed));

   struct Worker {
      std::size_t level = 0;
      std::array<std::optional<Solver>, 2> solver;
      std::array<std::vector<double>, 2> history;  // exploitability per round
      std::array<std::uint64_t, 2> episodes_at_spawn{};
   };
   std::vector<Worker> workers;
   std::uint64_t meta_iters = 0;
   ExtendOptions ext = opt.extend;
   ext.warm_start = opt.warm_start;

   {
      const std::span<const Policy> r = sets[0].entries();
      const std::span<const Policy> c = sets[1].entries();
      LedgerRow row = detail::make_row(ops, 0, r, MixedStrategy::uniform(1), c, MixedStrategy::uniform(1));
      out.ledger.add(row);
      out.final_meta = {MixedStrategy::uniform(1), MixedStrategy::uniform(1)};
   }

   // the last promoted worker seeds the next one when the queue runs empty
   std::optional<Worker> retired;
   const auto spawn = [&] {
      Worker w;
      const Worker* base = workers.empty() ? (retired ? &*retired : nullptr) : &workers.back();
      if(base == nullptr) {
         w.level = sets[0].size();
         for(const Player p : {Player::row, Player::col}) {
            const int pi = index_of(p);
            UrrConfig cfg = opt.urr;
            cfg.seed = mix_seed(opt.run.seed, static_cast<std::uint64_t>(pi), w.level);
            const std::vector<Policy> opp(sets[1 - pi].entries().begin(), sets[1 - pi].entries().end());
            w.solver[pi].emplace(ops.context(p, opp), detail::oracle_start(ops, p, ops.urr_start(p, sets[pi][w.level - 1]), opt.run.seed, w.level), cfg);
         }
      } else {
         const Worker& top = *base;
         w.level = top.level + 1;
         for(int pi = 0; pi < 2; ++pi) {
            w.solver[pi].emplace(*top.solver[pi]);
            w.solver[pi]->drop_history();
            const Player p = pi == 0 ? Player::row : Player::col;
            w.solver[pi]->extend(sets[1 - pi][top.level], ext, ops.fresh_start(p, mix_seed(opt.run.seed, static_cast<std::uint64_t>(w.level), 2 + static_cast<std::uint64_t>(pi))));
         }
      }
      for(int pi = 0; pi < 2; ++pi) {
         sets[pi].add_active(w.solver[pi]->responder_average());
         w.episodes_at_spawn[pi] = w.solver[pi]->episodes();
      }
      workers.push_back(std::move(w));
   };

   const auto stop = [&](const Worker& w) {
      for(int pi = 0; pi < 2; ++pi) {
         const Solver& s = *w.solver[pi];
         if(s.converged() or s.segment_iterations() >= opt.level_budget) {
            continue;
         }
         const auto& h = w.history[pi];
         const std::size_t lag = std::max<std::size_t>(1, opt.plateau_window / opt.round_iters);
         if(opt.plateau_window > 0 and h.size() > lag and h[h.size() - 1 - lag] - h.back() < opt.plateau_tol) {
            continue;
         }
         return false;
      }
      return true;
   };

   while(workers.size() < opt.workers) {
      spawn();
   }
   std::size_t epoch = 0;
   while(epoch < opt.run.epochs) {
      // refresh snapshots of entries that are still training
      const std::size_t low = workers.front().level;
      for(auto& w : workers) {
         for(int pi = 0; pi < 2; ++pi) {
            for(std::size_t k = low; k < w.level; ++k) {
               w.solver[pi]->replace_entry(k, sets[1 - pi][k]);
            }
         }
      }
      std::vector<std::size_t> done(workers.size() * 2, 0);
      const auto work = [&](std::size_t i) {
         for(int pi = 0; pi < 2; ++pi) {
            Solver& s = *workers[i].solver[pi];
            // only the lowest worker is held to the level budget
            const std::size_t left = i == 0 ? opt.level_budget - std::min(opt.level_budget, s.segment_iterations()) : opt.round_iters;
            done[2 * i + static_cast<std::size_t>(pi)] = s.advance(std::min(opt.round_iters, left));
         }
      };
      if(opt.threads and workers.size() > 1) {
         std::vector<std::thread> pool;
         for(std::size_t i = 0; i < workers.size(); ++i) {
            pool.emplace_back(work, i);
         }
         for(auto& t : pool) {
            t.join();
         }
      } else {
         for(std::size_t i = 0; i < workers.size(); ++i) {
            work(i);
         }
      }
      for(const auto d : done) {
         meta_iters += d;
      }
      for(auto& w : workers) {
         for(int pi = 0; pi < 2; ++pi) {
            sets[pi].update_active(w.level, w.solver[pi]->responder_average());
            w.history[pi].push_back(w.solver[pi]->exploitability());
         }
      }
      Worker& w = workers.front();
      if(not stop(w)) {
         continue;
      }
      EpochSolve<Policy> solve;
      solve.epoch = static_cast<int>(epoch + 1);
      for(int pi = 0; pi < 2; ++pi) {
         const Solver& s = *w.solver[pi];
         solve.responder[pi] = s.responder_average();
         // the seat's own meta comes from the opponent's solver
         solve.meta[1 - pi] = s.meta_average();
         solve.exploitability[pi] = w.history[pi].back();
         solve.iterations[pi] = s.segment_iterations();
         for(const auto& seg : s.segments()) {
            out.meta_runs.emplace_back(seg.begin(), seg.end());
         }
         out.ledger.urr_episodes += s.episodes() - w.episodes_at_spawn[pi];
      }
      for(auto& s : sets) {
         s.promote(w.level);
      }
      ++epoch;
      const std::size_t n = w.level;
      LedgerRow row = detail::make_row(ops, static_cast<int>(epoch), sets[0].entries().first(n), solve.meta[0], sets[1].entries().first(n), solve.meta[1]);
      const auto fixed_row = sets[0].entries().first(n + 1);
      const auto fixed_col = sets[1].entries().first(n + 1);
      row.cardinality = expected_cardinality(detail::exact_table(ops, fixed_row, fixed_col));
      row.set_size_p1 = row.set_size_p2 = n + 1;
      row.meta_iters = meta_iters;
      row.wall_ms = detail::elapsed_ms(start, opt.run.deterministic);
      out.ledger.add(row);
      out.final_meta = solve.meta;
      out.solves.push_back(std::move(solve));
      retired = std::move(workers.front());
      workers.erase(workers.begin());
      spawn();
   }
   out.sets = {sets[0].fixed_entries(), sets[1].fixed_entries()};
   return out;
}

}  // namespace epsro
