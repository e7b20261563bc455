#pragma once

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "epsro/game_gen.hpp"
#include "epsro/payoff_table.hpp"
#include "epsro/rng.hpp"

namespace epsro {

/// DPP expected cardinality sum_i lambda_i / (1 + lambda_i) over the
/// eigenvalues of the kernel L = M M^T of a payoff matrix.
inline double expected_cardinality(const Matrix& m)
{
   detail::require(m.rows() > 0 and m.cols() > 0, "expected_cardinality: empty table");
   detail::require(m.allFinite(), "expected_cardinality: non-finite entry");
   const Matrix kernel = m * m.transpose();
   Eigen::SelfAdjointEigenSolver<Matrix> eig(kernel, Eigen::EigenvaluesOnly);
   double total = 0.;
   for(Index i = 0; i < eig.eigenvalues().size(); ++i) {
      const double lambda = std::max(0., eig.eigenvalues()[i]);
      total += lambda / (1. + lambda);
   }
   return total;
}

inline double expected_cardinality(const PayoffTable& table) { return expected_cardinality(table.matrix()); }

/// Number of hump centers with at least one policy point within `radius`.
inline int center_coverage(std::span<const Point2D> points, const MixtureGame& game, double radius = 0.3)
{
   detail::require(not points.empty(), "center_coverage: empty trajectory");
   detail::require(radius > 0., "center_coverage: radius must be positive");
   int covered = 0;
   for(const auto& c : game.centers()) {
      for(const auto& p : points) {
         if(distance(p, c) <= radius) {
            ++covered;
            break;
         }
      }
   }
   return covered;
}

/// Prefix scores sigma_{1:i} M_{1:i} sigma_ref^T for i = 1..|test|.
///
/// `cross` is the test-vs-reference payoff matrix and `test_metas[i]` the
/// meta-strategy over the first i+1 test policies.
inline std::vector<double> score_eval(const Matrix& cross, std::span<const Vector> test_metas, const Vector& ref_meta)
{
   detail::require(cross.rows() > 0 and cross.cols() > 0, "score_eval: empty policy sets");
   detail::require(static_cast<Index>(test_metas.size()) == cross.rows(), "score_eval: one meta per test prefix required");
   detail::require(ref_meta.size() == cross.cols(), "score_eval: reference meta size mismatch");
   const Vector against = cross * ref_meta;
   std::vector<double> scores;
   for(std::size_t i = 0; i < test_metas.size(); ++i) {
      const Vector& m = test_metas[i];
      detail::require(m.size() == static_cast<Index>(i + 1), "score_eval: prefix meta has the wrong length");
      detail::require((m.array() >= 0.).all() and std::abs(m.sum() - 1.) <= 1e-9, "score_eval: prefix meta is not a simplex");
      scores.push_back(m.dot(against.head(static_cast<Index>(i + 1))));
   }
   return scores;
}

/// Prefix metas taken from one meta over the whole test set, renormalized
/// on each prefix (a zero-mass prefix falls back to uniform).
inline std::vector<Vector> prefix_metas(const Vector& meta)
{
   std::vector<Vector> out;
   for(Index i = 1; i <= meta.size(); ++i) {
      Vector m = meta.head(i);
      const double s = m.sum();
      if(s > 0.) {
         m /= s;
      } else {
         m = Vector::Constant(i, 1. / static_cast<double>(i));
      }
      out.push_back(std::move(m));
   }
   return out;
}

/// Evaluates the cross table exactly or with `mode.episodes` seeded
/// episodes per cell, then scores every prefix.
template <typename Policy, typename ExactFn, typename EpisodeFn>
std::vector<double> score_eval(
   std::span<const Policy> test_set,
   std::span<const Vector> test_metas,
   std::span<const Policy> ref_set,
   const Vector& ref_meta,
   const FillMode& mode,
   ExactFn&& exact,
   EpisodeFn&& episode)
{
   detail::require(not test_set.empty() and not ref_set.empty(), "score_eval: empty policy sets");
   PayoffTable table;
   fill_missing(
      table,
      static_cast<Index>(test_set.size()),
      static_cast<Index>(ref_set.size()),
      mode,
      [&](Index i, Index j) { return exact(test_set[static_cast<std::size_t>(i)], ref_set[static_cast<std::size_t>(j)]); },
      [&](Index i, Index j, Rng& rng) {
         return episode(test_set[static_cast<std::size_t>(i)], ref_set[static_cast<std::size_t>(j)], rng);
      });
   return score_eval(table.matrix(), test_metas, ref_meta);
}

}  // namespace epsro
