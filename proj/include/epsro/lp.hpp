#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "epsro/strategy.hpp"
#include "epsro/types.hpp"

namespace epsro {

struct ZeroSumSolution {
   MixedStrategy row;
   MixedStrategy col;
   /// row player's equilibrium value
   double value = 0.;
};

namespace detail {

/// Dense primal simplex for `max 1^T z  s.t.  P z <= 1, z >= 0` with P > 0.
/// The slack basis is feasible, so no phase one is needed. Returns the primal
/// solution z and the dual solution w (w^T P >= 1, w >= 0).
class PositiveGameSimplex {
  public:
   explicit PositiveGameSimplex(const Matrix& p) : m_m(p.rows()), m_n(p.cols())
   {
      // tableau: m constraint rows + objective row; columns n structural + m slack + rhs
      m_tab = Matrix::Zero(m_m + 1, m_n + m_m + 1);
      m_tab.topLeftCorner(m_m, m_n) = p;
      m_tab.block(0, m_n, m_m, m_m).setIdentity();
      m_tab.col(m_n + m_m).head(m_m).setOnes();
      // objective row stores reduced costs c_j - z_j; start with c = 1 on structurals
      m_tab.row(m_m).head(m_n).setOnes();
      m_basis.resize(static_cast<std::size_t>(m_m));
      for(Index i = 0; i < m_m; ++i) {
         m_basis[static_cast<std::size_t>(i)] = m_n + i;
      }
   }

   void solve()
   {
      const Index total = m_n + m_m;
      const Index max_pivots = 50 * (total + 10);
      Index degenerate_run = 0;
      for(Index it = 0; it < max_pivots; ++it) {
         const bool bland = degenerate_run > total;
         const Index enter = choose_entering(bland);
         if(enter < 0) {
            return;
         }
         const Index leave = choose_leaving(enter);
         if(leave < 0) {
            // cannot happen for P > 0 (the feasible region is bounded)
            throw std::runtime_error("zero-sum LP: unbounded pivot");
         }
         const double ratio = m_tab(leave, total) / m_tab(leave, enter);
         degenerate_run = ratio <= s_eps ? degenerate_run + 1 : 0;
         pivot(leave, enter);
      }
      throw std::runtime_error("zero-sum LP: pivot limit exceeded");
   }

   [[nodiscard]] Vector primal() const
   {
      Vector z = Vector::Zero(m_n);
      const Index total = m_n + m_m;
      for(Index i = 0; i < m_m; ++i) {
         const Index b = m_basis[static_cast<std::size_t>(i)];
         if(b < m_n) {
            z[b] = std::max(0., m_tab(i, total));
         }
      }
      return z;
   }

   [[nodiscard]] Vector dual() const
   {
      // reduced cost of slack i equals -w_i at optimality
      Vector w(m_m);
      for(Index i = 0; i < m_m; ++i) {
         w[i] = std::max(0., -m_tab(m_m, m_n + i));
      }
      return w;
   }

  private:
   static constexpr double s_eps = 1e-12;

   [[nodiscard]] Index choose_entering(bool bland) const
   {
      const Index total = m_n + m_m;
      Index best = -1;
      double best_val = s_eps;
      for(Index j = 0; j < total; ++j) {
         const double rc = m_tab(m_m, j);
         if(rc > s_eps) {
            if(bland) {
               return j;
            }
            if(rc > best_val) {
               best_val = rc;
               best = j;
            }
         }
      }
      return best;
   }

   [[nodiscard]] Index choose_leaving(Index enter) const
   {
      const Index total = m_n + m_m;
      Index best = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for(Index i = 0; i < m_m; ++i) {
         const double a = m_tab(i, enter);
         if(a > s_eps) {
            const double ratio = m_tab(i, total) / a;
            const bool better = ratio < best_ratio - s_eps
                                or (ratio <= best_ratio + s_eps and best >= 0
                                    and m_basis[static_cast<std::size_t>(i)]
                                           < m_basis[static_cast<std::size_t>(best)]);
            if(best < 0 or better) {
               best = i;
               best_ratio = ratio;
            }
         }
      }
      return best;
   }

   void pivot(Index r, Index c)
   {
      m_tab.row(r) /= m_tab(r, c);
      for(Index i = 0; i <= m_m; ++i) {
         if(i != r) {
            const double f = m_tab(i, c);
            if(f != 0.) {
               m_tab.row(i) -= f * m_tab.row(r);
            }
         }
      }
      m_basis[static_cast<std::size_t>(r)] = c;
   }

   Index m_m;
   Index m_n;
   Matrix m_tab;
   std::vector<Index> m_basis;
};

}  // namespace detail

/// Exact Nash equilibrium of the zero-sum game with row-player payoff
/// `payoff` (row maximizes), via the classic shift-to-positive LP.
inline ZeroSumSolution solve_zero_sum(const Matrix& payoff)
{
   detail::require(payoff.rows() > 0 and payoff.cols() > 0, "solve_zero_sum: empty matrix");
   detail::require(payoff.allFinite(), "solve_zero_sum: non-finite entry");
   const double shift = 1. - payoff.minCoeff();
   const Matrix positive = payoff.array() + shift;
   detail::PositiveGameSimplex lp(positive);
   lp.solve();
   const Vector z = lp.primal();
   const Vector w = lp.dual();
   const double total_z = z.sum();
   const double total_w = w.sum();
   if(not(total_z > 0.) or not(total_w > 0.)) {
      throw std::runtime_error("solve_zero_sum: degenerate LP solution");
   }
   // primal variables live on columns (the minimizer), duals on rows
   ZeroSumSolution sol{MixedStrategy(w / total_w), MixedStrategy(z / total_z), 0.};
   sol.value = 0.5 / total_z + 0.5 / total_w - shift;
   return sol;
}

}  // namespace epsro
