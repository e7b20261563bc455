#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "epsro/matrix_game.hpp"
#include "epsro/strategy.hpp"
#include "epsro/types.hpp"

namespace epsro {

/// Overflow-safe softmax.
inline MixedStrategy sigma_from_beta(const Vector& beta)
{
   detail::require(beta.size() > 0, "sigma_from_beta: empty weight vector");
   detail::require(beta.allFinite(), "sigma_from_beta: non-finite weight");
   const double top = beta.maxCoeff();
   Vector e = (beta.array() - top).exp();
   return MixedStrategy(e / e.sum());
}

/// Boltzmann-parameterized meta-strategy: sigma(j) = exp(beta_j) / sum exp(beta).
class BoltzmannMeta {
  public:
   BoltzmannMeta() = default;

   explicit BoltzmannMeta(Vector beta) : m_beta(std::move(beta))
   {
      detail::require(m_beta.size() > 0, "BoltzmannMeta: empty weight vector");
      detail::require(m_beta.allFinite(), "BoltzmannMeta: non-finite weight");
   }

   static BoltzmannMeta uniform(Index k) { return BoltzmannMeta(Vector::Zero(k)); }

   /// Logits reproducing `sigma`; zero-mass entries get log(floor).
   static BoltzmannMeta from_sigma(const MixedStrategy& sigma, double floor = 1e-300)
   {
      return BoltzmannMeta(Vector(sigma.probs().array().max(floor).log()));
   }

   [[nodiscard]] const Vector& beta() const noexcept { return m_beta; }
   [[nodiscard]] Index size() const noexcept { return m_beta.size(); }
   [[nodiscard]] MixedStrategy sigma() const { return sigma_from_beta(m_beta); }

  private:
   Vector m_beta;
};

/// One multiplicative-weights step in logit space: beta' = beta - eta * loss,
/// so that sigma'(j) is proportional to sigma(j) * exp(-eta * loss_j).
inline BoltzmannMeta mwu_step(const BoltzmannMeta& meta, const Vector& loss, double eta)
{
   detail::require(loss.size() == meta.size(), "mwu_step: loss length does not match meta size");
   detail::require(eta > 0., "mwu_step: eta must be positive");
   detail::require(loss.allFinite(), "mwu_step: non-finite loss");
   Vector beta = meta.beta() - eta * loss;
   // keep logits bounded; softmax is shift invariant
   beta.array() -= beta.maxCoeff();
   return BoltzmannMeta(std::move(beta));
}

/// A meta-owner loss vector together with the strategy that faced it.
struct LossRecord {
   Vector sigma;
   Vector loss;
};

/// Bookkeeping for windowed meta-strategy optimization: the episode buffer,
/// per-support sample counters and the loss histories of both players.
class LossBuffer {
  public:
   explicit LossBuffer(std::size_t window_size = 100) : m_window(window_size)
   {
      detail::require(window_size > 0, "LossBuffer: window size must be positive");
   }

   [[nodiscard]] std::size_t window_size() const noexcept { return m_window; }
   [[nodiscard]] std::size_t pending() const noexcept { return m_returns.size(); }
   [[nodiscard]] const std::vector<std::uint64_t>& counters() const noexcept { return m_counts; }
   [[nodiscard]] const std::vector<LossRecord>& records() const noexcept { return m_records; }
   /// losses attributed to the responder side (`l_i = r_bar`)
   [[nodiscard]] const std::vector<Vector>& responder_losses() const noexcept { return m_responder_losses; }

   void push_episode(double episode_return, std::size_t support, std::size_t n_supports)
   {
      detail::require(support < n_supports, "LossBuffer: sampled support out of range");
      if(m_counts.size() < n_supports) {
         m_counts.resize(n_supports, 0);
         m_sums.resize(n_supports, 0.);
      }
      m_returns.push_back(episode_return);
      m_supports.push_back(support);
      m_counts[support] += 1;
      m_sums[support] += episode_return;
   }

   /// Per-support average returns of the window (0 where nothing was sampled).
   [[nodiscard]] Vector average_returns(std::size_t n_supports) const
   {
      Vector r = Vector::Zero(static_cast<Index>(n_supports));
      for(std::size_t k = 0; k < std::min(n_supports, m_counts.size()); ++k) {
         if(m_counts[k] > 0) {
            r[static_cast<Index>(k)] = m_sums[k] / static_cast<double>(m_counts[k]);
         }
      }
      return r;
   }

   void record(LossRecord rec)
   {
      m_responder_losses.push_back(-rec.loss);
      m_records.push_back(std::move(rec));
   }

   void reset_window()
   {
      m_returns.clear();
      m_supports.clear();
      std::fill(m_counts.begin(), m_counts.end(), 0);
      std::fill(m_sums.begin(), m_sums.end(), 0.);
   }

   void clear_history()
   {
      m_records.clear();
      m_responder_losses.clear();
   }

  private:
   std::size_t m_window;
   std::vector<double> m_returns;
   std::vector<std::size_t> m_supports;
   std::vector<std::uint64_t> m_counts;
   std::vector<double> m_sums;
   std::vector<LossRecord> m_records;
   std::vector<Vector> m_responder_losses;
};

/// Closes the current window: averages returns per support, applies an MWU
/// step with loss -r_bar and records both players' loss vectors.
inline std::pair<BoltzmannMeta, LossRecord> flush_window(LossBuffer& buffer, const BoltzmannMeta& meta, double eta)
{
   detail::require(buffer.pending() > 0, "flush_window: episode buffer is empty");
   const auto k = static_cast<std::size_t>(meta.size());
   LossRecord rec{meta.sigma().probs(), -buffer.average_returns(k)};
   BoltzmannMeta next = mwu_step(meta, rec.loss, eta);
   buffer.record(rec);
   buffer.reset_window();
   return {std::move(next), std::move(rec)};
}

/// Adds one episode (return of the meta owner against support
/// `sampled_support`) and flushes when the window is full.
inline std::pair<BoltzmannMeta, std::optional<LossRecord>> windowed_update(
   LossBuffer& buffer, const BoltzmannMeta& meta, double episode_return, std::size_t sampled_support, double eta)
{
   buffer.push_episode(episode_return, sampled_support, static_cast<std::size_t>(meta.size()));
   if(buffer.pending() < buffer.window_size()) {
      return {meta, std::nullopt};
   }
   auto [next, rec] = flush_window(buffer, meta, eta);
   return {std::move(next), std::move(rec)};
}

/// Exact meta-owner losses in a matrix game: l[k] = -u_{-i}(responder, entry_k)
/// = u_i(responder, entry_k), where i is the responder's seat.
inline Vector exact_loss_vector(
   const MatrixGame& game, Player responder_side, const MixedStrategy& responder, std::span<const MixedStrategy> set)
{
   detail::require(not set.empty(), "exact_loss_vector: empty restricted set");
   detail::require(responder.size() == game.n_actions(responder_side), "exact_loss_vector: responder dimension mismatch");
   const Vector values = action_values(game, other(responder_side), responder);  // opponent's utilities
   Vector l(static_cast<Index>(set.size()));
   for(std::size_t k = 0; k < set.size(); ++k) {
      detail::require(set[k].size() == values.size(), "exact_loss_vector: entry dimension mismatch");
      l[static_cast<Index>(k)] = -values.dot(set[k].probs());
   }
   return l;
}

struct RegretReport {
   double average_regret = 0.;
   double bound = 0.;
   std::size_t T = 0;
   std::size_t k = 0;
};

/// Average-regret bound sqrt(log[(k+1)k/2] / (2T)).
inline double regret_bound(std::size_t k, std::size_t T)
{
   detail::require(T > 0 and k > 0, "regret_bound: T and k must be positive");
   const double kk = static_cast<double>(k);
   return std::sqrt(std::log((kk + 1.) * kk / 2.) / (2. * static_cast<double>(T)));
}

/// Average regret of a loss history against the best fixed support in
/// hindsight. Shorter (earlier) loss vectors are zero-padded: a support's
/// losses count from its introduction onward.
inline RegretReport measure_regret(std::span<const LossRecord> records)
{
   detail::require(not records.empty(), "measure_regret: empty history");
   std::size_t k = 0;
   for(const auto& r : records) {
      detail::require(r.sigma.size() == r.loss.size(), "measure_regret: sigma/loss length mismatch");
      k = std::max(k, static_cast<std::size_t>(r.loss.size()));
   }
   Vector cumulative = Vector::Zero(static_cast<Index>(k));
   double realized = 0.;
   for(const auto& r : records) {
      realized += r.sigma.dot(r.loss);
      cumulative.head(r.loss.size()) += r.loss;
   }
   const auto T = records.size();
   return {(realized - cumulative.minCoeff()) / static_cast<double>(T), regret_bound(k, T), T, k};
}

inline RegretReport measure_regret(const LossBuffer& buffer) { return measure_regret(buffer.records()); }

/// Regret report of every prefix of `records` (T = 1..size), computed
/// incrementally.
inline std::vector<RegretReport> regret_trace(std::span<const LossRecord> records)
{
   std::vector<RegretReport> out;
   out.reserve(records.size());
   Vector cumulative;
   double realized = 0.;
   for(std::size_t t = 0; t < records.size(); ++t) {
      const auto& r = records[t];
      if(r.loss.size() > cumulative.size()) {
         Vector grown = Vector::Zero(r.loss.size());
         grown.head(cumulative.size()) = cumulative;
         cumulative = std::move(grown);
      }
      realized += r.sigma.dot(r.loss);
      cumulative.head(r.loss.size()) += r.loss;
      const auto k = static_cast<std::size_t>(cumulative.size());
      out.push_back({(realized - cumulative.minCoeff()) / static_cast<double>(t + 1), regret_bound(k, t + 1), t + 1, k});
   }
   return out;
}

/// Loss-history CSV for offline regret audits: `t,k,sigma_1..sigma_k,loss_1..loss_k`.
inline void write_loss_history_csv(std::ostream& os, std::span<const LossRecord> records)
{
   os << "t,k,sigma...,loss...\n";
   for(std::size_t t = 0; t < records.size(); ++t) {
      const auto& r = records[t];
      os << t + 1 << ',' << r.loss.size();
      for(Index j = 0; j < r.sigma.size(); ++j) {
         os << ',' << detail::format_double(r.sigma[j]);
      }
      for(Index j = 0; j < r.loss.size(); ++j) {
         os << ',' << detail::format_double(r.loss[j]);
      }
      os << '\n';
   }
}

}  // namespace epsro
