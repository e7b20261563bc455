#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "epsro/types.hpp"

namespace epsro {

/// A probability vector over a finite strategy set.
///
/// Construction validates the simplex invariant (entries >= 0, sum 1 within
/// 1e-9); the stored vector is renormalized so downstream arithmetic sees an
/// exact-as-possible distribution.
class MixedStrategy {
  public:
   static constexpr double sum_tolerance = 1e-9;

   MixedStrategy() = default;

   explicit MixedStrategy(Vector probs) : m_probs(std::move(probs))
   {
      detail::require(m_probs.size() > 0, "MixedStrategy: empty probability vector");
      double total = 0.;
      for(Index i = 0; i < m_probs.size(); ++i) {
         const double p = m_probs[i];
         detail::require(std::isfinite(p), "MixedStrategy: non-finite entry");
         detail::require(p >= 0., "MixedStrategy: negative entry");
         total += p;
      }
      detail::require(
         std::abs(total - 1.) <= sum_tolerance, "MixedStrategy: entries do not sum to 1");
      m_probs /= total;
   }

   MixedStrategy(std::initializer_list<double> probs)
       : MixedStrategy(Vector(Eigen::Map<const Vector>(probs.begin(), static_cast<Index>(probs.size()))))
   {
   }

   static MixedStrategy uniform(Index n)
   {
      detail::require(n > 0, "MixedStrategy::uniform: n must be positive");
      return MixedStrategy(Vector::Constant(n, 1. / static_cast<double>(n)));
   }

   static MixedStrategy pure(Index n, Index i)
   {
      detail::require(i >= 0 and i < n, "MixedStrategy::pure: index out of range");
      Vector v = Vector::Zero(n);
      v[i] = 1.;
      return MixedStrategy(std::move(v));
   }

   /// Normalizes a nonnegative weight vector; throws if the total mass is 0.
   static MixedStrategy from_weights(const Vector& weights)
   {
      detail::require(weights.size() > 0, "MixedStrategy::from_weights: empty");
      detail::require((weights.array() >= 0.).all(), "MixedStrategy::from_weights: negative weight");
      const double total = weights.sum();
      detail::require(total > 0. and std::isfinite(total), "MixedStrategy::from_weights: zero mass");
      return MixedStrategy(weights / total);
   }

   [[nodiscard]] const Vector& probs() const noexcept { return m_probs; }
   [[nodiscard]] Index size() const noexcept { return m_probs.size(); }
   [[nodiscard]] double operator[](Index i) const { return m_probs[i]; }

   [[nodiscard]] std::span<const double> span() const noexcept
   {
      return {m_probs.data(), static_cast<std::size_t>(m_probs.size())};
   }

   [[nodiscard]] double entropy() const noexcept
   {
      double h = 0.;
      for(Index i = 0; i < m_probs.size(); ++i) {
         if(m_probs[i] > 0.) {
            h -= m_probs[i] * std::log(m_probs[i]);
         }
      }
      return h;
   }

   /// Convex combination `weight * a + (1 - weight) * b`.
   static MixedStrategy blend(const MixedStrategy& a, const MixedStrategy& b, double weight)
   {
      detail::require(a.size() == b.size(), "MixedStrategy::blend: size mismatch");
      detail::require(weight >= 0. and weight <= 1., "MixedStrategy::blend: weight outside [0,1]");
      return MixedStrategy(Vector(weight * a.probs() + (1. - weight) * b.probs()));
   }

   bool operator==(const MixedStrategy& other) const { return m_probs == other.m_probs; }

  private:
   Vector m_probs;
};

/// Flattens a meta-strategy over a list of full-space mixtures into a single
/// full-space mixture (one matrix-vector product).
inline MixedStrategy flatten(std::span<const MixedStrategy> entries, const MixedStrategy& meta)
{
   detail::require(not entries.empty(), "flatten: empty entry list");
   detail::require(
      static_cast<std::size_t>(meta.size()) == entries.size(), "flatten: meta size does not match entries");
   Vector out = Vector::Zero(entries.front().size());
   for(std::size_t j = 0; j < entries.size(); ++j) {
      detail::require(entries[j].size() == out.size(), "flatten: entries of differing dimension");
      out.noalias() += meta[static_cast<Index>(j)] * entries[j].probs();
   }
   return MixedStrategy(out / out.sum());
}

/// Column-stacks entries into a dense matrix (full-space dimension x entries).
inline Matrix stack_columns(std::span<const MixedStrategy> entries)
{
   detail::require(not entries.empty(), "stack_columns: empty entry list");
   Matrix out(entries.front().size(), static_cast<Index>(entries.size()));
   for(std::size_t j = 0; j < entries.size(); ++j) {
      detail::require(entries[j].size() == out.rows(), "stack_columns: entries of differing dimension");
      out.col(static_cast<Index>(j)) = entries[j].probs();
   }
   return out;
}

}  // namespace epsro
