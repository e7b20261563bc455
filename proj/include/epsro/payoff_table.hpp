#pragma once

#include <cstdint>
#include <functional>

#include "epsro/lp.hpp"
#include "epsro/matrix_game.hpp"
#include "epsro/restricted_set.hpp"
#include "epsro/rng.hpp"
#include "epsro/strategy.hpp"

namespace epsro {

/// Empirical meta-game payoffs between two restricted sets (row perspective).
class PayoffTable {
  public:
   PayoffTable() = default;

   PayoffTable(Index rows, Index cols)
       : m_table(Matrix::Zero(rows, cols)), m_filled(Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false))
   {
   }

   /// Wraps a fully known matrix (every cell marked filled, zero cost).
   static PayoffTable from_matrix(Matrix m)
   {
      PayoffTable t;
      t.m_filled = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m.rows(), m.cols(), true);
      t.m_table = std::move(m);
      return t;
   }

   [[nodiscard]] Index rows() const noexcept { return m_table.rows(); }
   [[nodiscard]] Index cols() const noexcept { return m_table.cols(); }
   [[nodiscard]] bool filled(Index i, Index j) const { return m_filled(i, j); }
   [[nodiscard]] bool complete() const { return m_filled.size() > 0 and m_filled.all(); }
   [[nodiscard]] std::uint64_t episode_cost() const noexcept { return m_episode_cost; }
   [[nodiscard]] std::uint64_t exact_evaluations() const noexcept { return m_exact_evaluations; }
   [[nodiscard]] std::uint64_t cells_filled() const noexcept { return m_cells_filled; }

   [[nodiscard]] double at(Index i, Index j) const
   {
      detail::require(i >= 0 and i < rows() and j >= 0 and j < cols(), "PayoffTable: index out of range");
      detail::require(m_filled(i, j), "PayoffTable: read of unfilled cell");
      return m_table(i, j);
   }

   /// Dense view; requires every cell to be filled.
   [[nodiscard]] const Matrix& matrix() const
   {
      detail::require(complete(), "PayoffTable: table has unfilled cells");
      return m_table;
   }

   /// Grows the table, keeping existing cells; new cells start unfilled.
   void resize(Index rows, Index cols)
   {
      detail::require(rows >= this->rows() and cols >= this->cols(), "PayoffTable: tables never shrink");
      Matrix t = Matrix::Zero(rows, cols);
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> f =
         Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false);
      t.topLeftCorner(this->rows(), this->cols()) = m_table;
      f.topLeftCorner(this->rows(), this->cols()) = m_filled;
      m_table = std::move(t);
      m_filled = std::move(f);
   }

   void set_exact(Index i, Index j, double value)
   {
      m_table(i, j) = value;
      m_filled(i, j) = true;
      ++m_exact_evaluations;
      ++m_cells_filled;
   }

   void set_sampled(Index i, Index j, double value, std::uint64_t episodes)
   {
      m_table(i, j) = value;
      m_filled(i, j) = true;
      m_episode_cost += episodes;
      ++m_cells_filled;
   }

   /// Marks a cell stale so the next fill recomputes it (pipeline entries
   /// whose policy changed).
   void invalidate(Index i, Index j) { m_filled(i, j) = false; }

  private:
   Matrix m_table;
   Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> m_filled;
   std::uint64_t m_episode_cost = 0;
   std::uint64_t m_exact_evaluations = 0;
   std::uint64_t m_cells_filled = 0;
};

struct FillMode {
   enum class Kind { exact, sampled };
   Kind kind = Kind::exact;
   std::uint64_t episodes = 0;
   std::uint64_t seed = 0;

   static FillMode exact() { return {}; }
   static FillMode sampled(std::uint64_t m, std::uint64_t seed)
   {
      return {Kind::sampled, m, seed};
   }
};

/// Fills every missing cell of `table` (grown to the set sizes first).
///
/// `exact(i, j)` returns the exact utility; `episode(i, j, rng)` plays one
/// seeded stochastic episode. Sampled cells average `mode.episodes` episodes
/// from an RNG derived from (seed, i, j), so results do not depend on fill
/// order.
template <typename ExactFn, typename EpisodeFn>
void fill_missing(PayoffTable& table, Index rows, Index cols, const FillMode& mode, ExactFn&& exact, EpisodeFn&& episode)
{
   detail::require(rows > 0 and cols > 0, "fill_payoff_table: restricted sets must be nonempty");
   if(mode.kind == FillMode::Kind::sampled) {
      detail::require(mode.episodes > 0, "fill_payoff_table: sampled mode needs M > 0");
   }
   if(rows != table.rows() or cols != table.cols()) {
      table.resize(rows, cols);
   }
   for(Index i = 0; i < rows; ++i) {
      for(Index j = 0; j < cols; ++j) {
         if(table.filled(i, j)) {
            continue;
         }
         if(mode.kind == FillMode::Kind::exact) {
            table.set_exact(i, j, exact(i, j));
         } else {
            Rng rng(mix_seed(mode.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)));
            double total = 0.;
            for(std::uint64_t e = 0; e < mode.episodes; ++e) {
               total += episode(i, j, rng);
            }
            table.set_sampled(i, j, total / static_cast<double>(mode.episodes), mode.episodes);
         }
      }
   }
}

/// One simulated matrix-game episode: each side draws a pure action from its
/// mixture and the payoff is the matrix entry.
inline double play_matrix_episode(const MatrixGame& game, const MixedStrategy& row, const MixedStrategy& col, Rng& rng)
{
   const auto i = static_cast<Index>(rng.categorical(row.probs()));
   const auto j = static_cast<Index>(rng.categorical(col.probs()));
   return game(i, j);
}

inline void fill_payoff_table(
   PayoffTable& table,
   const MatrixGame& game,
   std::span<const MixedStrategy> set_row,
   std::span<const MixedStrategy> set_col,
   const FillMode& mode)
{
   fill_missing(
      table,
      static_cast<Index>(set_row.size()),
      static_cast<Index>(set_col.size()),
      mode,
      [&](Index i, Index j) { return utility(game, set_row[static_cast<std::size_t>(i)], set_col[static_cast<std::size_t>(j)]); },
      [&](Index i, Index j, Rng& rng) {
         return play_matrix_episode(game, set_row[static_cast<std::size_t>(i)], set_col[static_cast<std::size_t>(j)], rng);
      });
}

inline PayoffTable fill_payoff_table(
   const MatrixGame& game,
   const RestrictedPolicySet<MixedStrategy>& set_row,
   const RestrictedPolicySet<MixedStrategy>& set_col,
   const FillMode& mode)
{
   PayoffTable table;
   fill_payoff_table(table, game, set_row.entries(), set_col.entries(), mode);
   return table;
}

/// L-infinity distance from `candidate` to the convex hull of the table's
/// columns. Solved as the value of the zero-sum game whose rows are
/// +/-(U w - c) per coordinate: the column player picks w on the simplex.
inline double gamescape_distance(const Matrix& columns, const Vector& candidate)
{
   detail::require(columns.rows() > 0 and columns.cols() > 0, "in_gamescape: empty table");
   detail::require(candidate.size() == columns.rows(), "in_gamescape: candidate length must equal table rows");
   const Index r = columns.rows();
   Matrix game(2 * r, columns.cols());
   const Matrix diff = columns.colwise() - candidate;
   game.topRows(r) = diff;
   game.bottomRows(r) = -diff;
   return std::max(0., solve_zero_sum(game).value);
}

inline double gamescape_distance(const PayoffTable& table, const Vector& candidate)
{
   detail::require(table.rows() > 0 and table.cols() > 0, "in_gamescape: empty table");
   return gamescape_distance(table.matrix(), candidate);
}

/// Is `candidate` (a payoff column) inside the empirical gamescape of `table`
/// (convex mixtures of its columns), up to L-infinity tolerance `tol`?
inline bool in_gamescape(const PayoffTable& table, const Vector& candidate, double tol = 1e-7)
{
   return gamescape_distance(table, candidate) <= tol;
}

}  // namespace epsro
