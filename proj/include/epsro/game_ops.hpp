#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "epsro/game_gen.hpp"
#include "epsro/kuhn.hpp"
#include "epsro/matrix_game.hpp"
#include "epsro/rng.hpp"
#include "epsro/urr_solver.hpp"

namespace epsro {

/// Settings of the approximate best-response oracle of the continuous game
/// (finite games use exact oracles and ignore them).
struct OracleOptions {
   std::size_t steps = 1000;
   double eta = 0.05;
};

// ---------------------------------------------------------------------------
// Game adapters. Each exposes the same surface so that every runner is a
// single template:
//   Policy, Context            policy type and SolveURR context type
//   initial(p, seed)           seeded starting policy
//   urr_start(p, last)         responder initialization for a new URR game
//   fresh_start(p, key)        optional seeded restart point of a new policy
//   context(p, opponents)      URR game with p on the full side
//   utility(r, c)              exact row utility
//   episode(r, c, rng)         one sampled row return
//   best_response(p, opp, w, start, oracle)
//   blend(a, b, rate)          rate * a + (1 - rate) * b
//   nash_conv(set_r, meta_r, set_c, meta_c)
// ---------------------------------------------------------------------------

class MatrixOps {
  public:
   using Policy = MixedStrategy;
   using Context = MatrixUrr;
   static constexpr bool sampled_tables = true;

   explicit MatrixOps(const MatrixGame& game) : m_game(&game) {}

   [[nodiscard]] const MatrixGame& game() const noexcept { return *m_game; }

   /// A seeded pure action; symmetric games start both seats on the same one.
   [[nodiscard]] Policy initial(Player p, std::uint64_t seed) const
   {
      Rng rng(mix_seed(seed, 0x1417));
      const double u = rng.uniform();
      const Index n = m_game->n_actions(p);
      return MixedStrategy::pure(n, std::min<Index>(n - 1, static_cast<Index>(u * static_cast<double>(n))));
   }

   [[nodiscard]] Policy urr_start(Player p, const Policy&) const { return MixedStrategy::uniform(m_game->n_actions(p)); }

   [[nodiscard]] std::optional<Policy> fresh_start(Player, std::uint64_t) const { return std::nullopt; }

   [[nodiscard]] Context context(Player p, std::vector<Policy> opponents) const { return {*m_game, p, std::move(opponents)}; }

   [[nodiscard]] double utility(const Policy& r, const Policy& c) const { return epsro::utility(*m_game, r, c); }

   double episode(const Policy& r, const Policy& c, Rng& rng) const { return play_matrix_episode(*m_game, r, c, rng); }

   [[nodiscard]] Policy best_response(Player p, std::span<const Policy> opponents, const Vector& weights, const Policy&, const OracleOptions&) const
   {
      const auto br = epsro::best_response(*m_game, p, flatten(opponents, MixedStrategy::from_weights(weights)));
      return MixedStrategy::pure(m_game->n_actions(p), br.action);
   }

   [[nodiscard]] Policy blend(const Policy& a, const Policy& b, double rate) const { return MixedStrategy::blend(a, b, rate); }

   [[nodiscard]] double nash_conv(std::span<const Policy> set_row, const MixedStrategy& meta_row, std::span<const Policy> set_col, const MixedStrategy& meta_col) const
   {
      return epsro::nash_conv(*m_game, flatten(set_row, meta_row), flatten(set_col, meta_col));
   }

  private:
   const MatrixGame* m_game;
};

class KuhnOps {
  public:
   using Policy = BehaviorPolicy;
   using Context = KuhnUrr;
   static constexpr bool sampled_tables = true;

   explicit KuhnOps(const GameTree& tree) : m_tree(&tree) {}

   [[nodiscard]] const GameTree& tree() const noexcept { return *m_tree; }

   [[nodiscard]] Policy initial(Player p, std::uint64_t) const { return BehaviorPolicy::uniform(*m_tree, p); }

   [[nodiscard]] Policy urr_start(Player p, const Policy&) const { return BehaviorPolicy::uniform(*m_tree, p); }

   [[nodiscard]] std::optional<Policy> fresh_start(Player, std::uint64_t) const { return std::nullopt; }

   [[nodiscard]] Context context(Player p, std::vector<Policy> opponents) const { return {*m_tree, p, std::move(opponents)}; }

   [[nodiscard]] double utility(const Policy& r, const Policy& c) const { return expected_value(*m_tree, r, c); }

   double episode(const Policy& r, const Policy& c, Rng& rng) const { return play_episode(*m_tree, r, c, rng); }

   [[nodiscard]] Policy best_response(Player p, std::span<const Policy> opponents, const Vector& weights, const Policy&, const OracleOptions&) const
   {
      return exact_best_response(*m_tree, p, opponents, weights).policy;
   }

   [[nodiscard]] Policy blend(const Policy& a, const Policy& b, double rate) const
   {
      const std::vector<BehaviorPolicy> parts{a, b};
      Vector w(2);
      w << rate, 1. - rate;
      return mix_behavior(*m_tree, parts, w);
   }

   [[nodiscard]] double nash_conv(std::span<const Policy> set_row, const MixedStrategy& meta_row, std::span<const Policy> set_col, const MixedStrategy& meta_col) const
   {
      return nash_conv_efg(*m_tree, set_row, meta_row.probs(), set_col, meta_col.probs());
   }

  private:
   const GameTree* m_tree;
};

class MixtureOps {
  public:
   using Policy = Point2D;
   using Context = MixtureUrr;
   static constexpr bool sampled_tables = false;

   /// With `fresh_starts` every new policy starts its gradient ascent from
   /// a seeded point inside the initial radius instead of the latest point.
   explicit MixtureOps(const MixtureGame& game, bool fresh_starts = true, double init_radius = 1.0, int br_grid = 41)
       : m_game(&game), m_fresh(fresh_starts), m_init_radius(init_radius), m_grid(br_grid)
   {
      detail::require(init_radius >= 0. and init_radius <= game.arena_radius(), "MixtureOps: initial radius outside the arena");
   }

   [[nodiscard]] const MixtureGame& game() const noexcept { return *m_game; }

   /// A seeded point within the initial radius, shared by both seats.
   [[nodiscard]] Policy initial(Player, std::uint64_t seed) const
   {
      Rng rng(mix_seed(seed, 0x91));
      const double angle = 2. * std::numbers::pi * rng.uniform();
      const double r = m_init_radius * std::sqrt(rng.uniform());
      return {r * std::cos(angle), r * std::sin(angle)};
   }

   /// Gradient responders continue from the seat's latest point.
   [[nodiscard]] Policy urr_start(Player, const Policy& last) const { return last; }

   [[nodiscard]] std::optional<Policy> fresh_start(Player p, std::uint64_t key) const
   {
      if(not m_fresh) {
         return std::nullopt;
      }
      return initial(p, key);
   }

   [[nodiscard]] Context context(Player p, std::vector<Policy> opponents) const { return {*m_game, p, std::move(opponents), m_grid}; }

   [[nodiscard]] double utility(const Policy& r, const Policy& c) const { return mixture_payoff(*m_game, r, c); }

   double episode(const Policy& r, const Policy& c, Rng&) const { return utility(r, c); }

   /// Projected gradient ascent from `start` (both seats share one payoff).
   [[nodiscard]] Policy best_response(Player, std::span<const Policy> opponents, const Vector& weights, const Policy& start, const OracleOptions& oracle) const
   {
      detail::require(static_cast<std::size_t>(weights.size()) == opponents.size(), "best_response: weight count mismatch");
      Point2D p = start;
      const double total = weights.sum();
      for(std::size_t it = 0; it < oracle.steps; ++it) {
         Point2D g{};
         for(std::size_t k = 0; k < opponents.size(); ++k) {
            const double w = weights[static_cast<Index>(k)] / total;
            if(w > 0.) {
               g = g + w * mixture_payoff_gradient(*m_game, p, opponents[k]);
            }
         }
         p = m_game->project(p + oracle.eta * g);
      }
      return p;
   }

   [[nodiscard]] Policy blend(const Policy& a, const Policy& b, double rate) const
   {
      detail::require(rate == 1., "MixtureOps: points cannot be blended; use a rate of 1");
      (void)b;
      return a;
   }

   [[nodiscard]] double nash_conv(std::span<const Policy> set_row, const MixedStrategy& meta_row, std::span<const Policy> set_col, const MixedStrategy& meta_col) const
   {
      double u = 0.;
      for(std::size_t a = 0; a < set_row.size(); ++a) {
         for(std::size_t b = 0; b < set_col.size(); ++b) {
            u += meta_row[static_cast<Index>(a)] * meta_col[static_cast<Index>(b)] * utility(set_row[a], set_col[b]);
         }
      }
      // the column seat's utility is -phi(x, y) = phi(y, x)
      const double row_br = mixture_best_response(*m_game, set_col, meta_col.probs(), m_grid).value;
      const double col_br = mixture_best_response(*m_game, set_row, meta_row.probs(), m_grid).value;
      return std::max(0., row_br - u) + std::max(0., col_br + u);
   }

  private:
   const MixtureGame* m_game;
   bool m_fresh;
   double m_init_radius;
   int m_grid;
};

}  // namespace epsro
