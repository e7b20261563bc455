#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "epsro/kuhn.hpp"
#include "epsro/matrix_game.hpp"
#include "epsro/meta_opt.hpp"
#include "epsro/payoff_table.hpp"

namespace epsro {

/// Re-initialization of a meta-strategy whose support grew from k-1 to k.
///
/// `avg_loss[j]` is the meta owner's averaged loss against support j and
/// `new_policy_payoff` the owner's utility of the new support against the
/// responder average. A substitute sigma' preserves the owner's average
/// utility when (x - sigma_bar) . l_bar == sigma'_k * u_new, where x is
/// sigma' restricted to the old supports.
struct WarmStartProblem {
   Vector old_sigma_bar;
   Vector avg_loss;
   double new_policy_payoff = 0.;
   double lambda = 1e-2;
   double tau = 1e-6;

   [[nodiscard]] Index k() const noexcept { return old_sigma_bar.size() + 1; }

   void validate() const
   {
      detail::require(old_sigma_bar.size() > 0, "WarmStartProblem: empty previous meta-strategy");
      detail::require(avg_loss.size() == old_sigma_bar.size(), "WarmStartProblem: loss length mismatch");
      detail::require(old_sigma_bar.allFinite() and avg_loss.allFinite() and std::isfinite(new_policy_payoff),
                      "WarmStartProblem: non-finite input");
      detail::require(lambda >= 0. and tau >= 0., "WarmStartProblem: lambda and tau must be nonnegative");
   }
};

struct WarmStartResult {
   Vector beta;
   double xi2 = 0.;
   std::size_t iterations = 0;
   /// best-seen xi2 after each iteration (index 0 is the initial point)
   std::vector<double> trace;
};

namespace detail {

inline void check_beta(const WarmStartProblem& p, const Vector& beta)
{
   require(beta.size() == p.k(), "warm start: beta must have one entry per support (k)");
   require(beta.allFinite(), "warm start: non-finite beta");
}

/// Signed utility drift d(sigma') = (x - sigma_bar) . l_bar - sigma'_k u_new.
inline double utility_drift(const WarmStartProblem& p, const Vector& sigma)
{
   const Index m = p.old_sigma_bar.size();
   return (sigma.head(m) - p.old_sigma_bar).dot(p.avg_loss) - sigma[m] * p.new_policy_payoff;
}

inline double entropy_of(const Vector& sigma)
{
   double h = 0.;
   for(Index j = 0; j < sigma.size(); ++j) {
      if(sigma[j] > 0.) {
         h -= sigma[j] * std::log(sigma[j]);
      }
   }
   return h;
}

}  // namespace detail

/// Unregularized error xi2 = |(x - sigma_bar) . l_bar - sigma'_k u_new|.
inline double warm_start_error(const WarmStartProblem& p, const Vector& beta)
{
   p.validate();
   detail::check_beta(p, beta);
   return std::abs(detail::utility_drift(p, sigma_from_beta(beta).probs()));
}

inline double warm_start_objective(const WarmStartProblem& p, const Vector& beta)
{
   p.validate();
   detail::check_beta(p, beta);
   const Vector sigma = sigma_from_beta(beta).probs();
   return std::abs(detail::utility_drift(p, sigma)) - p.lambda * detail::entropy_of(sigma);
}

/// Gradient of the objective in beta (subgradient 0 for |.| at the kink).
inline Vector warm_start_gradient(const WarmStartProblem& p, const Vector& beta)
{
   const Vector sigma = sigma_from_beta(beta).probs();
   const Index m = p.old_sigma_bar.size();
   Vector g(m + 1);
   g.head(m) = p.avg_loss;
   g[m] = -p.new_policy_payoff;
   const double d = detail::utility_drift(p, sigma);
   const double s = d > 0. ? 1. : (d < 0. ? -1. : 0.);
   // softmax Jacobian: d sigma / d beta = diag(sigma) - sigma sigma^T
   const Vector grad_drift = (sigma.array() * (g.array() - sigma.dot(g))).matrix();
   const Vector log_sigma = sigma.array().max(1e-300).log();
   const Vector grad_entropy = (sigma.array() * (sigma.dot(log_sigma) - log_sigma.array())).matrix();
   Vector out = s * grad_drift - p.lambda * grad_entropy;
   if(not out.allFinite()) {
      throw std::runtime_error("warm_start_beta: non-finite gradient");
   }
   return out;
}

/// Default starting point: the old average scaled by (k-1)/k with the new
/// support at mass 1/k.
inline Vector warm_start_initial_beta(const WarmStartProblem& p)
{
   p.validate();
   const Index m = p.old_sigma_bar.size();
   const double fresh = 1. / static_cast<double>(m + 1);
   Vector sigma(m + 1);
   sigma.head(m) = (1. - fresh) * p.old_sigma_bar / p.old_sigma_bar.sum();
   sigma[m] = fresh;
   return sigma.array().max(1e-12).log();
}

/// Gradient descent on the regularized objective until xi2 <= tau or
/// `max_iters`. When a step crosses the zero level set of the utility drift
/// the crossing point is located by bisection along the step, which is where
/// the nonsmooth |.| term attains its minimum. Returns the best-seen iterate.
inline WarmStartResult warm_start_beta(
   const WarmStartProblem& p, const Vector& init_beta, double step = 0.1, std::size_t max_iters = 10000, std::size_t stall_iters = 50)
{
   p.validate();
   detail::check_beta(p, init_beta);
   detail::require(step > 0. and std::isfinite(step), "warm_start_beta: step must be positive");

   const auto drift_at = [&](const Vector& b) { return detail::utility_drift(p, sigma_from_beta(b).probs()); };

   WarmStartResult res{init_beta, std::abs(drift_at(init_beta)), 0, {}};
   res.trace.push_back(res.xi2);
   Vector beta = init_beta;
   double d = drift_at(beta);
   // the entropy term can hold the regularized minimizer away from zero
   // drift when the losses are nearly flat; halve lambda whenever the best
   // error stalls
   WarmStartProblem q = p;
   std::size_t last_gain = 0;
   double rate = step;
   while(res.xi2 > p.tau and res.iterations < max_iters) {
      if(stall_iters > 0 and res.iterations - last_gain >= stall_iters) {
         q.lambda *= 0.5;
         last_gain = res.iterations;
      }
      const Vector g = warm_start_gradient(q, beta);
      Vector next = beta - rate * g;
      double d_next = drift_at(next);
      if(d != 0. and d_next != 0. and std::signbit(d) != std::signbit(d_next)) {
         double lo = 0.;
         double hi = 1.;
         for(int it = 0; it < 200 and std::abs(d_next) > 0.25 * p.tau; ++it) {
            const double mid = 0.5 * (lo + hi);
            next = beta - (mid * rate) * g;
            d_next = drift_at(next);
            if(std::signbit(d_next) == std::signbit(d)) {
               lo = mid;
            } else {
               hi = mid;
            }
         }
         rate = step;
      } else {
         // flat losses give tiny gradients; grow the step until the drift
         // changes sign, where the bisection above takes over
         rate = std::min(rate * 1.5, 1e6 * step);
      }
      beta = std::move(next);
      d = d_next;
      beta.array() -= beta.maxCoeff();
      ++res.iterations;
      if(std::abs(d) < res.xi2) {
         // count only real progress as a gain
         if(std::abs(d) < 0.99 * res.xi2) {
            last_gain = res.iterations;
         }
         res.xi2 = std::abs(d);
         res.beta = beta;
      }
      res.trace.push_back(res.xi2);
   }
   return res;
}

inline WarmStartResult warm_start_beta(const WarmStartProblem& p, double step = 0.1, std::size_t max_iters = 10000)
{
   return warm_start_beta(p, warm_start_initial_beta(p), step, max_iters);
}

/// Closed-form minimizer of the objective as lambda -> 0+: the maximum
/// entropy sigma' with zero utility drift. The drift is linear in sigma', so
/// that point is the Gibbs distribution sigma' ~ exp(-mu c) over the drift
/// coefficients c; the scalar mu is found by bisection.
inline WarmStartResult warm_start_max_entropy(const WarmStartProblem& p, std::size_t max_iters = 200)
{
   p.validate();
   const Index m = p.old_sigma_bar.size();
   Vector c(m + 1);
   c.head(m) = p.avg_loss;
   c[m] = -p.new_policy_payoff;
   const double target = p.old_sigma_bar.dot(p.avg_loss) / p.old_sigma_bar.sum();
   const auto drift = [&](double mu) { return sigma_from_beta(Vector(-mu * c)).probs().dot(c) - target; };
   WarmStartResult res{Vector::Zero(m + 1), std::abs(drift(0.)), 0, {}};
   res.trace.push_back(res.xi2);
   if(res.xi2 <= 0.25 * p.tau or c.maxCoeff() - c.minCoeff() <= 0.) {
      return res;
   }
   // the drift decreases in mu; bracket the root by doubling
   const double dir = drift(0.) > 0. ? 1. : -1.;
   double lo = 0.;
   double hi = 1.;
   while(dir * drift(dir * hi) > 0. and hi < 1e12) {
      lo = hi;
      hi *= 2.;
   }
   for(; res.iterations < max_iters; ++res.iterations) {
      const double mid = 0.5 * (lo + hi);
      const double d = drift(dir * mid);
      if(std::abs(d) < res.xi2) {
         res.xi2 = std::abs(d);
         res.beta = -dir * mid * c;
         res.beta.array() -= res.beta.maxCoeff();
      }
      res.trace.push_back(res.xi2);
      if(res.xi2 <= 0.25 * p.tau) {
         ++res.iterations;
         break;
      }
      if(dir * d > 0.) {
         lo = mid;
      } else {
         hi = mid;
      }
   }
   return res;
}

/// Utility of the meta owner (seat `owner`) for `new_policy` against the
/// responder average `pi_bar`. Sampled mode adds its episodes to
/// `episode_counter` when one is given.
inline double estimate_new_entry(
   const MatrixGame& game,
   Player owner,
   const MixedStrategy& pi_bar,
   const MixedStrategy& new_policy,
   const FillMode& mode,
   std::uint64_t* episode_counter = nullptr)
{
   const MixedStrategy& row = owner == Player::row ? new_policy : pi_bar;
   const MixedStrategy& col = owner == Player::row ? pi_bar : new_policy;
   const double sign = owner == Player::row ? 1. : -1.;
   if(mode.kind == FillMode::Kind::exact) {
      return sign * utility(game, row, col);
   }
   detail::require(mode.episodes > 0, "estimate_new_entry: sampled mode needs at least one episode");
   Rng rng(mode.seed);
   double total = 0.;
   for(std::uint64_t e = 0; e < mode.episodes; ++e) {
      total += play_matrix_episode(game, row, col, rng);
   }
   if(episode_counter != nullptr) {
      *episode_counter += mode.episodes;
   }
   return sign * total / static_cast<double>(mode.episodes);
}

inline double estimate_new_entry(
   const GameTree& tree,
   Player owner,
   const BehaviorPolicy& pi_bar,
   const BehaviorPolicy& new_policy,
   const FillMode& mode,
   std::uint64_t* episode_counter = nullptr)
{
   const BehaviorPolicy& row = owner == Player::row ? new_policy : pi_bar;
   const BehaviorPolicy& col = owner == Player::row ? pi_bar : new_policy;
   const double sign = owner == Player::row ? 1. : -1.;
   if(mode.kind == FillMode::Kind::exact) {
      return sign * expected_value(tree, row, col);
   }
   detail::require(mode.episodes > 0, "estimate_new_entry: sampled mode needs at least one episode");
   Rng rng(mode.seed);
   double total = 0.;
   for(std::uint64_t e = 0; e < mode.episodes; ++e) {
      total += play_episode(tree, row, col, rng);
   }
   if(episode_counter != nullptr) {
      *episode_counter += mode.episodes;
   }
   return sign * total / static_cast<double>(mode.episodes);
}

}  // namespace epsro
