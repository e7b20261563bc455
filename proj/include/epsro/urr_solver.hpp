#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "epsro/game_gen.hpp"
#include "epsro/kuhn.hpp"
#include "epsro/matrix_game.hpp"
#include "epsro/meta_opt.hpp"
#include "epsro/payoff_table.hpp"
#include "epsro/rng.hpp"
#include "epsro/warm_start.hpp"

namespace epsro {

enum class ResponderRule { mwu, br_mix, gradient };

inline const char* to_string(ResponderRule r) noexcept
{
   switch(r) {
      case ResponderRule::mwu: return "mwu";
      case ResponderRule::br_mix: return "br_mix";
      case ResponderRule::gradient: return "gradient";
   }
   return "?";
}

struct UrrConfig {
   enum class Mode { exact, sampled };
   Mode mode = Mode::exact;
   /// episodes per meta update in sampled mode
   std::size_t window = 100;
   std::uint64_t seed = 0;
   double eta_responder = 1.0;
   double eta_meta = 1.0;
   /// responder steps against the running average meta instead of the
   /// current one (fictitious-play style; stabilizes point responders)
   bool respond_to_average = false;
   ResponderRule rule = ResponderRule::mwu;
   double br_rate = 1.0;
   std::size_t max_iters = 20000;
   double eps_target = 1e-3;
   /// exploitability is evaluated every `check_every` iterations
   std::size_t check_every = 1;

   void validate() const
   {
      detail::require(eta_responder > 0. and eta_meta > 0., "UrrConfig: step sizes must be positive");
      detail::require(br_rate > 0. and br_rate <= 1., "UrrConfig: br_mix rate must lie in (0, 1]");
      detail::require(window > 0, "UrrConfig: window must be positive");
      detail::require(check_every > 0, "UrrConfig: check_every must be positive");
      detail::require(eps_target >= 0., "UrrConfig: eps_target must be nonnegative");
   }
};

// ---------------------------------------------------------------------------
// Game contexts. Each binds a game, the seat that optimizes over its full
// strategy space and the opponent's restricted entries. Losses are the meta
// owner's: l[k] = u_i(responder, entry_k).
// ---------------------------------------------------------------------------

/// Normal-form context; the responder is a mixed strategy over all pure
/// actions and restricted entries are full-space mixtures.
class MatrixUrr {
  public:
   using policy_type = MixedStrategy;

   struct state_type {
      Vector theta;
      MixedStrategy pi;
   };

   class averager_type {
     public:
      void add(const MixedStrategy& pi)
      {
         if(m_sum.size() == 0) {
            m_sum = Vector::Zero(pi.size());
         }
         m_sum += pi.probs();
         m_weight += 1.;
      }
      void scale(double f)
      {
         m_sum *= f;
         m_weight *= f;
      }
      [[nodiscard]] bool empty() const noexcept { return m_weight <= 0.; }
      [[nodiscard]] MixedStrategy average() const
      {
         detail::require(not empty(), "MatrixUrr: empty average");
         return MixedStrategy(Vector(m_sum / m_sum.sum()));
      }

     private:
      Vector m_sum;
      double m_weight = 0.;
   };

   MatrixUrr(const MatrixGame& game, Player full_side, std::vector<MixedStrategy> restricted)
       : m_game(&game), m_side(full_side), m_payoff(game.payoff_for(full_side)), m_entries(std::move(restricted))
   {
      detail::require(not m_entries.empty(), "URR game: restricted set must be nonempty");
      rebuild();
   }

   [[nodiscard]] Player full_side() const noexcept { return m_side; }
   [[nodiscard]] std::size_t size() const noexcept { return m_entries.size(); }
   [[nodiscard]] const std::vector<MixedStrategy>& entries() const noexcept { return m_entries; }
   [[nodiscard]] const MatrixGame& game() const noexcept { return *m_game; }
   /// responder utility of each pure action (rows) against each entry (columns)
   [[nodiscard]] const Matrix& utilities() const noexcept { return m_u; }

   void add_entry(MixedStrategy p)
   {
      check_entry(p);
      m_entries.push_back(std::move(p));
      Matrix grown(m_u.rows(), m_u.cols() + 1);
      grown.leftCols(m_u.cols()) = m_u;
      grown.col(m_u.cols()) = m_payoff * m_entries.back().probs();
      m_u = std::move(grown);
   }

   void set_entry(std::size_t k, MixedStrategy p)
   {
      detail::require(k < m_entries.size(), "URR game: entry index out of range");
      check_entry(p);
      m_entries[k] = std::move(p);
      m_u.col(static_cast<Index>(k)) = m_payoff * m_entries[k].probs();
   }

   [[nodiscard]] Vector losses(const MixedStrategy& pi) const
   {
      detail::require(pi.size() == m_u.rows(), "URR game: responder dimension mismatch");
      return m_u.transpose() * pi.probs();
   }

   [[nodiscard]] double best_response_value(const Vector& sigma) const { return (m_u * sigma).maxCoeff(); }

   [[nodiscard]] state_type make_state(const MixedStrategy& init) const
   {
      detail::require(init.size() == m_u.rows(), "URR game: responder dimension mismatch");
      return {init.probs().array().max(1e-300).log(), init};
   }

   [[nodiscard]] const MixedStrategy& policy(const state_type& s) const noexcept { return s.pi; }

   void respond(state_type& s, const Vector& sigma, const UrrConfig& cfg) const { apply(s, m_u * sigma, cfg); }

   /// One full-information step against a single sampled opponent action.
   void respond_sampled(state_type& s, const Vector& sigma, const UrrConfig& cfg, Rng& rng) const
   {
      const std::size_t k = rng.categorical(sigma);
      const auto j = static_cast<Index>(rng.categorical(m_entries[k].probs()));
      apply(s, m_payoff.col(j), cfg);
   }

   /// One episode's return for the meta owner when it plays entry k.
   [[nodiscard]] double sample_owner_return(const MixedStrategy& pi, std::size_t k, Rng& rng) const
   {
      const auto a = static_cast<Index>(rng.categorical(pi.probs()));
      const auto j = static_cast<Index>(rng.categorical(m_entries[k].probs()));
      return -m_payoff(a, j);
   }

   [[nodiscard]] double owner_utility(const MixedStrategy& pi_bar, std::size_t k, const FillMode& mode, std::uint64_t* counter) const
   {
      return estimate_new_entry(*m_game, other(m_side), pi_bar, m_entries.at(k), mode, counter);
   }

   /// Mixes the responder with uniform so a continued run can move again.
   void refresh(state_type& s, double delta) const
   {
      if(delta <= 0.) {
         return;
      }
      s.pi = MixedStrategy::blend(s.pi, MixedStrategy::uniform(s.pi.size()), 1. - delta);
      s.theta = s.pi.probs().array().max(1e-300).log();
   }

  private:
   void check_entry(const MixedStrategy& p) const
   {
      detail::require(p.size() == m_payoff.cols(), "URR game: restricted entry dimension mismatch");
   }

   void rebuild()
   {
      for(const auto& e : m_entries) {
         check_entry(e);
      }
      m_u = m_payoff * stack_columns(m_entries);
   }

   void apply(state_type& s, const Vector& gains, const UrrConfig& cfg) const
   {
      switch(cfg.rule) {
         case ResponderRule::mwu: {
            s.theta += cfg.eta_responder * gains;
            s.theta.array() -= s.theta.maxCoeff();
            s.pi = sigma_from_beta(s.theta);
            return;
         }
         case ResponderRule::br_mix: {
            Index best = 0;
            for(Index a = 1; a < gains.size(); ++a) {
               if(gains[a] > gains[best]) {
                  best = a;
               }
            }
            s.pi = MixedStrategy::blend(MixedStrategy::pure(gains.size(), best), s.pi, cfg.br_rate);
            s.theta = s.pi.probs().array().max(1e-300).log();
            return;
         }
         case ResponderRule::gradient: break;
      }
      throw InvalidArgument("URR game: gradient responder rule needs the continuous mixture game");
   }

   const MatrixGame* m_game;
   Player m_side;
   Matrix m_payoff;  // responder-perspective payoff, responder actions x opponent actions
   std::vector<MixedStrategy> m_entries;
   Matrix m_u;
};

/// Kuhn poker context; the responder is a behavior policy trained by
/// per-infoset MWU on counterfactual values.
class KuhnUrr {
  public:
   using policy_type = BehaviorPolicy;

   struct state_type {
      std::vector<Vector> theta;
      BehaviorPolicy pi;
   };

   class averager_type {
     public:
      averager_type() = default;
      explicit averager_type(const GameTree& tree) : m_tree(&tree) {}
      void add(const BehaviorPolicy& pi) { m_avg.add(*m_tree, pi); }
      void scale(double f) { m_avg.scale(f); }
      [[nodiscard]] bool empty() const noexcept { return m_avg.count() == 0; }
      [[nodiscard]] BehaviorPolicy average() const { return m_avg.average(); }

     private:
      const GameTree* m_tree = nullptr;
      BehaviorAverager m_avg;
   };

   KuhnUrr(const GameTree& tree, Player full_side, std::vector<BehaviorPolicy> restricted)
       : m_tree(&tree), m_side(full_side), m_entries(std::move(restricted))
   {
      detail::require(not m_entries.empty(), "URR game: restricted set must be nonempty");
      for(const auto& e : m_entries) {
         m_reach.push_back(entry_reach(e));
      }
   }

   [[nodiscard]] Player full_side() const noexcept { return m_side; }
   [[nodiscard]] std::size_t size() const noexcept { return m_entries.size(); }
   [[nodiscard]] const std::vector<BehaviorPolicy>& entries() const noexcept { return m_entries; }
   [[nodiscard]] const GameTree& tree() const noexcept { return *m_tree; }

   [[nodiscard]] averager_type make_averager() const { return averager_type(*m_tree); }

   void add_entry(BehaviorPolicy p)
   {
      m_reach.push_back(entry_reach(p));
      m_entries.push_back(std::move(p));
   }

   void set_entry(std::size_t k, BehaviorPolicy p)
   {
      detail::require(k < m_entries.size(), "URR game: entry index out of range");
      m_reach[k] = entry_reach(p);
      m_entries[k] = std::move(p);
   }

   [[nodiscard]] Vector losses(const BehaviorPolicy& pi) const
   {
      Vector l(static_cast<Index>(m_entries.size()));
      for(std::size_t k = 0; k < m_entries.size(); ++k) {
         l[static_cast<Index>(k)] = value_against_reach(*m_tree, m_side, pi, m_reach[k]);
      }
      return l;
   }

   [[nodiscard]] std::vector<double> reach_of(const Vector& sigma) const
   {
      std::vector<double> r(m_tree->nodes().size(), 0.);
      for(std::size_t k = 0; k < m_entries.size(); ++k) {
         const double w = sigma[static_cast<Index>(k)];
         if(w == 0.) {
            continue;
         }
         for(std::size_t n = 0; n < r.size(); ++n) {
            r[n] += w * m_reach[k][n];
         }
      }
      return r;
   }

   [[nodiscard]] double best_response_value(const Vector& sigma) const
   {
      return best_response_to_reach(*m_tree, m_side, reach_of(sigma)).value;
   }

   [[nodiscard]] state_type make_state(const BehaviorPolicy& init) const
   {
      detail::require(init.seat() == m_side, "URR game: responder policy for the wrong seat");
      return {log_table(init), init};
   }

   [[nodiscard]] const BehaviorPolicy& policy(const state_type& s) const noexcept { return s.pi; }

   void respond(state_type& s, const Vector& sigma, const UrrConfig& cfg) const { apply(s, reach_of(sigma), cfg); }

   void respond_sampled(state_type& s, const Vector& sigma, const UrrConfig& cfg, Rng& rng) const
   {
      apply(s, m_reach[rng.categorical(sigma)], cfg);
   }

   [[nodiscard]] double sample_owner_return(const BehaviorPolicy& pi, std::size_t k, Rng& rng) const
   {
      const double row_chips = m_side == Player::row ? play_episode(*m_tree, pi, m_entries[k], rng)
                                                     : play_episode(*m_tree, m_entries[k], pi, rng);
      return m_side == Player::row ? -row_chips : row_chips;
   }

   [[nodiscard]] double owner_utility(const BehaviorPolicy& pi_bar, std::size_t k, const FillMode& mode, std::uint64_t* counter) const
   {
      return estimate_new_entry(*m_tree, other(m_side), pi_bar, m_entries.at(k), mode, counter);
   }

   void refresh(state_type& s, double delta) const
   {
      if(delta <= 0.) {
         return;
      }
      std::vector<Vector> probs = s.pi.table();
      for(auto& v : probs) {
         v = (1. - delta) * v + Vector::Constant(v.size(), delta / static_cast<double>(v.size()));
      }
      s.pi = BehaviorPolicy(m_side, std::move(probs));
      s.theta = log_table(s.pi);
   }

  private:
   [[nodiscard]] std::vector<double> entry_reach(const BehaviorPolicy& p) const
   {
      detail::require(p.seat() == other(m_side), "URR game: restricted entry for the wrong seat");
      const std::vector<BehaviorPolicy> one{p};
      return mixture_reach(*m_tree, one, Vector::Ones(1));
   }

   static std::vector<Vector> log_table(const BehaviorPolicy& p)
   {
      std::vector<Vector> t;
      for(const auto& v : p.table()) {
         t.push_back(v.array().max(1e-300).log());
      }
      return t;
   }

   void apply(state_type& s, const std::vector<double>& opp_reach, const UrrConfig& cfg) const
   {
      switch(cfg.rule) {
         case ResponderRule::mwu: {
            const auto cfv = counterfactual_values(*m_tree, m_side, s.pi, opp_reach);
            std::vector<Vector> probs;
            for(std::size_t i = 0; i < cfv.size(); ++i) {
               s.theta[i] += cfg.eta_responder * cfv[i];
               s.theta[i].array() -= s.theta[i].maxCoeff();
               probs.push_back(sigma_from_beta(s.theta[i]).probs());
            }
            s.pi = BehaviorPolicy(m_side, std::move(probs));
            return;
         }
         case ResponderRule::br_mix: {
            const auto br = best_response_to_reach(*m_tree, m_side, opp_reach).policy;
            const std::vector<BehaviorPolicy> parts{br, s.pi};
            Vector w(2);
            w << cfg.br_rate, 1. - cfg.br_rate;
            s.pi = mix_behavior(*m_tree, parts, w);
            s.theta = log_table(s.pi);
            return;
         }
         case ResponderRule::gradient: break;
      }
      throw InvalidArgument("URR game: gradient responder rule needs the continuous mixture game");
   }

   const GameTree* m_tree;
   Player m_side;
   std::vector<BehaviorPolicy> m_entries;
   std::vector<std::vector<double>> m_reach;
};

struct PointResponse {
   Point2D point;
   double value = 0.;
};

/// Global best point against a weighted set of opponent points: grid search
/// over the arena followed by projected gradient polishing of the best cells.
inline PointResponse mixture_best_response(
   const MixtureGame& game, std::span<const Point2D> opponents, const Vector& weights, int grid = 41)
{
   detail::require(not opponents.empty(), "mixture_best_response: empty opponent set");
   detail::require(static_cast<std::size_t>(weights.size()) == opponents.size(), "mixture_best_response: weight count mismatch");
   const int n = game.n_humps();
   Vector b = Vector::Zero(n);
   for(std::size_t k = 0; k < opponents.size(); ++k) {
      b += weights[static_cast<Index>(k)] * density_vector(game, opponents[k]);
   }
   const Vector w = game.skew() * b + Vector::Ones(n);
   const double offset = b.sum();
   const double h2 = game.params().bandwidth * game.params().bandwidth;
   const auto value = [&](Point2D p) { return density_vector(game, p).dot(w) - offset; };
   const auto grad = [&](Point2D p) {
      const Vector a = density_vector(game, p);
      Point2D g{};
      for(int k = 0; k < n; ++k) {
         g = g + (-w[k] * a[k] / h2) * (p - game.centers()[static_cast<std::size_t>(k)]);
      }
      return g;
   };
   const double r = game.arena_radius();
   std::vector<std::pair<double, Point2D>> cells;
   for(int ix = 0; ix < grid; ++ix) {
      for(int iy = 0; iy < grid; ++iy) {
         const Point2D p{-r + 2. * r * ix / (grid - 1), -r + 2. * r * iy / (grid - 1)};
         if(p.norm() <= r) {
            cells.emplace_back(value(p), p);
         }
      }
   }
   // the centers are the natural candidates for local maxima
   for(const auto& c : game.centers()) {
      cells.emplace_back(value(c), c);
   }
   std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
   PointResponse best{cells.front().second, cells.front().first};
   const std::size_t n_polish = std::min<std::size_t>(cells.size(), 8);
   for(std::size_t c = 0; c < n_polish; ++c) {
      Point2D p = cells[c].second;
      double v = cells[c].first;
      double step = 0.05;
      for(int it = 0; it < 200 and step > 1e-9; ++it) {
         const Point2D q = game.project(p + step * grad(p));
         const double vq = value(q);
         if(vq > v) {
            p = q;
            v = vq;
            step *= 1.2;
         } else {
            step *= 0.5;
         }
      }
      if(v > best.value) {
         best = {p, v};
      }
   }
   return best;
}

/// Continuous mixture-game context; the responder is a single point moved
/// by projected gradient ascent.
class MixtureUrr {
  public:
   using policy_type = Point2D;

   struct state_type {
      Point2D p;
   };

   /// Points do not average; the "average" is the latest iterate.
   class averager_type {
     public:
      void add(const Point2D& p)
      {
         m_last = p;
         m_has = true;
      }
      void scale(double) {}
      [[nodiscard]] bool empty() const noexcept { return not m_has; }
      [[nodiscard]] Point2D average() const
      {
         detail::require(m_has, "MixtureUrr: empty average");
         return m_last;
      }

     private:
      Point2D m_last{};
      bool m_has = false;
   };

   MixtureUrr(const MixtureGame& game, Player full_side, std::vector<Point2D> restricted, int br_grid = 41)
       : m_game(&game), m_side(full_side), m_entries(std::move(restricted)), m_grid(br_grid)
   {
      detail::require(not m_entries.empty(), "URR game: restricted set must be nonempty");
      for(const auto& p : m_entries) {
         game.check(p);
      }
   }

   [[nodiscard]] Player full_side() const noexcept { return m_side; }
   [[nodiscard]] std::size_t size() const noexcept { return m_entries.size(); }
   [[nodiscard]] const std::vector<Point2D>& entries() const noexcept { return m_entries; }
   [[nodiscard]] const MixtureGame& game() const noexcept { return *m_game; }

   void add_entry(Point2D p)
   {
      m_game->check(p);
      m_entries.push_back(p);
   }

   void set_entry(std::size_t k, Point2D p)
   {
      detail::require(k < m_entries.size(), "URR game: entry index out of range");
      m_game->check(p);
      m_entries[k] = p;
   }

   [[nodiscard]] Vector losses(const Point2D& p) const
   {
      Vector l(static_cast<Index>(m_entries.size()));
      for(std::size_t k = 0; k < m_entries.size(); ++k) {
         l[static_cast<Index>(k)] = mixture_payoff(*m_game, p, m_entries[k]);
      }
      return l;
   }

   [[nodiscard]] double best_response_value(const Vector& sigma) const
   {
      return mixture_best_response(*m_game, m_entries, sigma, m_grid).value;
   }

   [[nodiscard]] state_type make_state(const Point2D& init) const
   {
      m_game->check(init);
      return {init};
   }

   [[nodiscard]] const Point2D& policy(const state_type& s) const noexcept { return s.p; }

   void respond(state_type& s, const Vector& sigma, const UrrConfig& cfg) const
   {
      check_rule(cfg);
      Point2D g{};
      for(std::size_t k = 0; k < m_entries.size(); ++k) {
         const double w = sigma[static_cast<Index>(k)];
         if(w > 0.) {
            g = g + w * mixture_payoff_gradient(*m_game, s.p, m_entries[k]);
         }
      }
      s.p = m_game->project(s.p + cfg.eta_responder * g);
   }

   void respond_sampled(state_type& s, const Vector& sigma, const UrrConfig& cfg, Rng& rng) const
   {
      check_rule(cfg);
      const std::size_t k = rng.categorical(sigma);
      s.p = m_game->project(s.p + cfg.eta_responder * mixture_payoff_gradient(*m_game, s.p, m_entries[k]));
   }

   // payoffs are deterministic, so an episode is the exact payoff
   [[nodiscard]] double sample_owner_return(const Point2D& p, std::size_t k, Rng&) const
   {
      return -mixture_payoff(*m_game, p, m_entries[k]);
   }

   [[nodiscard]] double owner_utility(const Point2D& p, std::size_t k, const FillMode& mode, std::uint64_t* counter) const
   {
      if(mode.kind == FillMode::Kind::sampled) {
         detail::require(mode.episodes > 0, "estimate_new_entry: sampled mode needs at least one episode");
         if(counter != nullptr) {
            *counter += mode.episodes;
         }
      }
      return -mixture_payoff(*m_game, p, m_entries.at(k));
   }

   void refresh(state_type&, double) const {}

  private:
   static void check_rule(const UrrConfig& cfg)
   {
      detail::require(cfg.rule == ResponderRule::gradient, "URR game: the mixture game supports only the gradient responder rule");
   }

   const MixtureGame* m_game;
   Player m_side;
   std::vector<Point2D> m_entries;
   int m_grid;
};

namespace detail {

template <typename Ctx>
typename Ctx::averager_type make_averager(const Ctx& ctx)
{
   if constexpr(requires { ctx.make_averager(); }) {
      return ctx.make_averager();
   } else {
      return typename Ctx::averager_type{};
   }
}

}  // namespace detail

/// URR-exploitability of (responder, meta): the full side's best-response
/// gain plus the restricted side's best-support gain. Reduces to
/// BR_i(sigma) - min_k u_i(responder, entry_k).
template <typename Ctx>
double urr_exploitability(const Ctx& ctx, const typename Ctx::policy_type& responder, const MixedStrategy& meta)
{
   detail::require(static_cast<std::size_t>(meta.size()) == ctx.size(), "urr_exploitability: meta size mismatch");
   const Vector l = ctx.losses(responder);
   detail::require(l.allFinite(), "urr_exploitability: non-finite utilities");
   return std::max(0., ctx.best_response_value(meta.probs()) - l.minCoeff());
}

/// One responder update against the meta-mixture.
template <typename Ctx>
typename Ctx::policy_type responder_step(
   const Ctx& ctx, const typename Ctx::policy_type& responder, const MixedStrategy& meta, const UrrConfig& cfg)
{
   auto state = ctx.make_state(responder);
   ctx.respond(state, meta.probs(), cfg);
   return ctx.policy(state);
}

struct ExtendOptions {
   enum class Method { gradient, max_entropy };
   bool warm_start = true;
   Method method = Method::max_entropy;
   double lambda = 1e-2;
   double tau = 1e-6;
   double step = 0.1;
   std::size_t max_iters = 10000;
   /// iterations without progress before lambda is halved (0 keeps it)
   std::size_t stall_iters = 50;
   /// mix of the old average meta with uniform used as the descent start
   double meta_smoothing = 0.5;
   /// keep the warm-started meta only if its URR-exploitability against the
   /// restarted responder is no worse than the uniform meta's
   bool safeguard = true;
   /// keep the running averages, substituting the warm-started meta for the
   /// old average meta (cold starts always reset the averages)
   bool carry_average = false;
   /// fraction of the accumulated averaging weight carried over
   double carry_weight = 1.0;
   /// restart the responder from its running average instead of the
   /// last iterate
   bool responder_from_average = false;
   /// mix of the continued responder with uniform play (1 restarts it)
   double responder_refresh = 1.0;
   FillMode estimate = FillMode::exact();
};

template <typename Policy>
struct UrrResult {
   Policy responder;
   MixedStrategy meta;
   std::size_t iterations = 0;
   double exploitability = 0.;
   bool converged = false;
   std::vector<LossRecord> records;
};

/// SolveURR as a resumable state machine: alternates a responder step
/// against the current meta with an MWU meta step against the updated
/// responder. Output strategies are the running averages.
template <typename Ctx>
class UrrSolver {
  public:
   using Policy = typename Ctx::policy_type;

   UrrSolver(Ctx ctx, const Policy& init_responder, BoltzmannMeta init_meta, UrrConfig cfg)
       : m_ctx(std::move(ctx)),
         m_cfg(cfg),
         m_state(m_ctx.make_state(init_responder)),
         m_meta(std::move(init_meta)),
         m_avg(detail::make_averager(m_ctx)),
         m_buffer(cfg.window),
         m_rng(mix_seed(cfg.seed, 0x5eed))
   {
      m_cfg.validate();
      detail::require(static_cast<std::size_t>(m_meta.size()) == m_ctx.size(), "solve_urr: initial meta does not match the restricted set");
      m_sigma_sum = Vector::Zero(m_meta.size());
      m_segments.push_back(0);
   }

   UrrSolver(Ctx ctx, const Policy& init_responder, UrrConfig cfg)
       : UrrSolver(ctx, init_responder, BoltzmannMeta::uniform(static_cast<Index>(ctx.size())), cfg)
   {
   }

   [[nodiscard]] const Ctx& context() const noexcept { return m_ctx; }
   [[nodiscard]] const UrrConfig& config() const noexcept { return m_cfg; }
   [[nodiscard]] const BoltzmannMeta& meta() const noexcept { return m_meta; }
   [[nodiscard]] const Policy& responder() const noexcept { return m_ctx.policy(m_state); }
   [[nodiscard]] std::size_t iterations() const noexcept { return m_iters; }
   [[nodiscard]] std::size_t segment_iterations() const noexcept { return m_segment_iters; }
   [[nodiscard]] std::uint64_t episodes() const noexcept { return m_episodes; }
   [[nodiscard]] const std::vector<LossRecord>& records() const noexcept { return m_buffer.records(); }
   [[nodiscard]] const LossBuffer& buffer() const noexcept { return m_buffer; }
   [[nodiscard]] const std::optional<WarmStartResult>& last_warm_start() const noexcept { return m_last_warm; }

   /// Loss histories split at every restricted-set change.
   [[nodiscard]] std::vector<std::span<const LossRecord>> segments() const
   {
      std::vector<std::span<const LossRecord>> out;
      const auto& rec = m_buffer.records();
      for(std::size_t s = 0; s < m_segments.size(); ++s) {
         const std::size_t end = s + 1 < m_segments.size() ? m_segments[s + 1] : rec.size();
         if(end > m_segments[s]) {
            out.emplace_back(rec.data() + m_segments[s], end - m_segments[s]);
         }
      }
      return out;
   }

   [[nodiscard]] Policy responder_average() const
   {
      return m_avg.empty() ? m_ctx.policy(m_state) : m_avg.average();
   }

   [[nodiscard]] MixedStrategy meta_average() const
   {
      if(m_weight <= 0.) {
         return m_meta.sigma();
      }
      return MixedStrategy(Vector(m_sigma_sum / m_sigma_sum.sum()));
   }

   [[nodiscard]] double exploitability() const { return urr_exploitability(m_ctx, responder_average(), meta_average()); }

   /// One iteration: responder step, then meta step.
   void iterate()
   {
      const MixedStrategy sigma = m_meta.sigma();
      const Vector target = (m_cfg.respond_to_average and m_weight > 0.) ? Vector(m_sigma_sum / m_weight) : sigma.probs();
      if(m_cfg.mode == UrrConfig::Mode::exact) {
         m_ctx.respond(m_state, target, m_cfg);
         const Vector l = m_ctx.losses(m_ctx.policy(m_state));
         detail::require(l.allFinite(), "solve_urr: non-finite utilities");
         m_buffer.record({sigma.probs(), l});
         m_meta = mwu_step(m_meta, l, m_cfg.eta_meta);
      } else {
         m_ctx.respond_sampled(m_state, target, m_cfg, m_rng);
         const std::size_t k = m_rng.categorical(sigma.probs());
         const double r = m_ctx.sample_owner_return(m_ctx.policy(m_state), k, m_rng);
         m_episodes += 2;
         auto [next, rec] = windowed_update(m_buffer, m_meta, r, k, m_cfg.eta_meta);
         m_meta = std::move(next);
      }
      m_sigma_sum += sigma.probs();
      m_weight += 1.;
      m_avg.add(m_ctx.policy(m_state));
      ++m_iters;
      ++m_segment_iters;
   }

   /// Runs up to `n` iterations, stopping early once the averages are an
   /// eps_target equilibrium. Returns the iterations performed.
   std::size_t advance(std::size_t n)
   {
      std::size_t done = 0;
      while(done < n and not m_converged) {
         iterate();
         ++done;
         if(m_segment_iters % m_cfg.check_every == 0) {
            m_last_exploitability = exploitability();
            if(m_last_exploitability <= m_cfg.eps_target) {
               m_converged = true;
               break;
            }
         }
      }
      return done;
   }

   [[nodiscard]] bool converged() const noexcept { return m_converged; }
   [[nodiscard]] double last_exploitability() const noexcept { return m_last_exploitability; }

   [[nodiscard]] UrrResult<Policy> result() const
   {
      return {responder_average(), meta_average(), m_iters, exploitability(), m_converged, m_buffer.records()};
   }

   /// Grows the restricted set by one entry and re-initializes the meta
   /// strategy: warm (utility-preserving substitute) or uniform. The
   /// responder restarts from `restart` when given.
   void extend(Policy entry, const ExtendOptions& opt, const std::optional<Policy>& restart = std::nullopt)
   {
      const std::size_t old_k = m_ctx.size();
      const Policy pi_bar = responder_average();
      const MixedStrategy sigma_bar = meta_average();
      const Vector l_bar = m_ctx.losses(pi_bar);
      m_ctx.add_entry(std::move(entry));
      m_last_warm.reset();
      if(restart) {
         m_state = m_ctx.make_state(*restart);
      } else {
         if(opt.responder_from_average) {
            m_state = m_ctx.make_state(pi_bar);
         }
         m_ctx.refresh(m_state, opt.responder_refresh);
      }
      const auto uniform = BoltzmannMeta::uniform(static_cast<Index>(m_ctx.size()));
      bool carry = false;
      if(opt.warm_start) {
         WarmStartProblem p{sigma_bar.probs(), l_bar, 0., opt.lambda, opt.tau};
         FillMode est = opt.estimate;
         est.seed = mix_seed(m_cfg.seed, 0xa11, m_iters);
         p.new_policy_payoff = m_ctx.owner_utility(pi_bar, old_k, est, &m_episodes);
         WarmStartProblem start = p;
         if(opt.meta_smoothing > 0.) {
            const auto k = static_cast<double>(old_k);
            start.old_sigma_bar = (1. - opt.meta_smoothing) * p.old_sigma_bar.array() + opt.meta_smoothing / k;
         }
         WarmStartResult ws = opt.method == ExtendOptions::Method::max_entropy
                                 ? warm_start_max_entropy(p)
                                 : warm_start_beta(p, warm_start_initial_beta(start), opt.step, opt.max_iters, opt.stall_iters);
         BoltzmannMeta warm(ws.beta);
         const Policy& pi0 = m_ctx.policy(m_state);
         const bool accept = not opt.safeguard
                             or urr_exploitability(m_ctx, pi0, warm.sigma()) <= urr_exploitability(m_ctx, pi0, uniform.sigma());
         if(accept) {
            m_meta = std::move(warm);
            carry = opt.carry_average and m_weight > 0.;
         } else {
            m_meta = uniform;
            ++m_warm_rejections;
         }
         m_last_warm = std::move(ws);
      } else {
         m_meta = uniform;
      }
      if(carry) {
         const double w = m_weight * opt.carry_weight;
         m_sigma_sum = w * m_meta.sigma().probs();
         m_avg.scale(opt.carry_weight);
         m_weight = w;
      } else {
         reset_averages();
      }
      m_buffer.reset_window();
      start_segment();
   }

   /// Extensions whose warm-started meta lost the safeguard comparison.
   [[nodiscard]] std::size_t warm_rejections() const noexcept { return m_warm_rejections; }

   /// Replaces a (still training) entry's policy; the meta keeps its weights.
   void replace_entry(std::size_t k, Policy entry)
   {
      m_ctx.set_entry(k, std::move(entry));
      m_converged = false;
   }

   /// Drops the stored loss history (the live window and averages stay).
   void drop_history()
   {
      m_buffer.clear_history();
      m_segments.assign(1, 0);
   }

   /// Forgets the running averages (e.g. after the opponent entries moved).
   void reset_averages()
   {
      m_sigma_sum = Vector::Zero(m_meta.size());
      m_weight = 0.;
      m_avg = detail::make_averager(m_ctx);
      m_converged = false;
      m_segment_iters = 0;
   }

  private:
   void start_segment()
   {
      if(m_segments.back() != m_buffer.records().size()) {
         m_segments.push_back(m_buffer.records().size());
      }
      m_converged = false;
      m_segment_iters = 0;
   }

   Ctx m_ctx;
   UrrConfig m_cfg;
   typename Ctx::state_type m_state;
   BoltzmannMeta m_meta;
   typename Ctx::averager_type m_avg;
   Vector m_sigma_sum;
   double m_weight = 0.;
   LossBuffer m_buffer;
   Rng m_rng;
   std::size_t m_iters = 0;
   std::size_t m_segment_iters = 0;
   std::uint64_t m_episodes = 0;
   bool m_converged = false;
   double m_last_exploitability = std::numeric_limits<double>::infinity();
   std::vector<std::size_t> m_segments;
   std::optional<WarmStartResult> m_last_warm;
   std::size_t m_warm_rejections = 0;
};

/// Runs SolveURR to eps_target or max_iters.
template <typename Ctx>
UrrResult<typename Ctx::policy_type> solve_urr(
   Ctx ctx, const typename Ctx::policy_type& init_responder, const MixedStrategy& init_meta, const UrrConfig& cfg)
{
   UrrSolver<Ctx> solver(std::move(ctx), init_responder, BoltzmannMeta::from_sigma(init_meta), cfg);
   solver.advance(cfg.max_iters);
   return solver.result();
}

}  // namespace epsro
