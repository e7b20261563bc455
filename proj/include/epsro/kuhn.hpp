#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epsro/rng.hpp"
#include "epsro/types.hpp"

namespace epsro {

enum class NodeKind { chance, decision, terminal };

struct GameNode {
   NodeKind kind = NodeKind::terminal;
   int player = -1;   // acting seat at decision nodes
   int infoset = -1;  // index into that seat's infoset list
   int parent = -1;
   int parent_action = -1;
   std::vector<int> children;
   std::vector<double> chance_probs;
   double payoff = 0.;  // row player's chips at terminals
};

struct Infoset {
   std::string key;
   int n_actions = 0;
   std::vector<int> nodes;
};

/// Explicit two-player zero-sum game tree with perfect recall.
///
/// Nodes are stored in creation order (parents before children), so a
/// reverse sweep visits children first.
class GameTree {
  public:
   [[nodiscard]] const std::vector<GameNode>& nodes() const noexcept { return m_nodes; }
   [[nodiscard]] const GameNode& node(int i) const { return m_nodes.at(static_cast<std::size_t>(i)); }
   [[nodiscard]] const std::vector<Infoset>& infosets(Player p) const noexcept { return m_infosets[index_of(p)]; }
   [[nodiscard]] std::size_t n_infosets(Player p) const noexcept { return infosets(p).size(); }

   [[nodiscard]] std::size_t n_terminals() const noexcept
   {
      return static_cast<std::size_t>(
         std::count_if(m_nodes.begin(), m_nodes.end(), [](const GameNode& n) { return n.kind == NodeKind::terminal; }));
   }

   int add_node(GameNode n)
   {
      m_nodes.push_back(std::move(n));
      const int id = static_cast<int>(m_nodes.size()) - 1;
      const auto& node = m_nodes.back();
      if(node.parent >= 0) {
         m_nodes[static_cast<std::size_t>(node.parent)].children.push_back(id);
      }
      return id;
   }

   /// Registers a decision node under infoset `key` for `p`, creating the infoset.
   int infoset_for(Player p, const std::string& key, int n_actions)
   {
      auto& sets = m_infosets[index_of(p)];
      for(std::size_t i = 0; i < sets.size(); ++i) {
         if(sets[i].key == key) {
            detail::require(sets[i].n_actions == n_actions, "GameTree: inconsistent action count in infoset");
            return static_cast<int>(i);
         }
      }
      sets.push_back({key, n_actions, {}});
      return static_cast<int>(sets.size()) - 1;
   }

   void set_chance_probs(int node, std::vector<double> probs)
   {
      auto& n = m_nodes.at(static_cast<std::size_t>(node));
      detail::require(n.kind == NodeKind::chance and probs.size() == n.children.size(), "GameTree: chance distribution mismatch");
      n.chance_probs = std::move(probs);
   }

   void attach(Player p, int infoset, int node) { m_infosets[index_of(p)][static_cast<std::size_t>(infoset)].nodes.push_back(node); }

  private:
   std::vector<GameNode> m_nodes;
   std::array<std::vector<Infoset>, 2> m_infosets;
};

namespace detail {

inline void build_kuhn_betting(GameTree& tree, int parent, int parent_action, std::array<int, 2> cards, const std::string& history)
{
   static constexpr const char* names = "JQK";
   const auto showdown = [&](double stake) { return cards[0] > cards[1] ? stake : -stake; };
   // terminal histories: pp, bp, bb, pbp, pbb
   if(history == "pp" or history == "bb" or history == "pbb" or history == "bp" or history == "pbp") {
      GameNode t;
      t.parent = parent;
      t.parent_action = parent_action;
      if(history == "pp") {
         t.payoff = showdown(1.);
      } else if(history == "bp") {
         t.payoff = 1.;
      } else if(history == "pbp") {
         t.payoff = -1.;
      } else {
         t.payoff = showdown(2.);
      }
      tree.add_node(std::move(t));
      return;
   }
   const int seat = static_cast<int>(history.size() % 2);
   const Player p = seat == 0 ? Player::row : Player::col;
   const std::string key = std::string(1, names[cards[static_cast<std::size_t>(seat)]]) + history;
   GameNode d;
   d.kind = NodeKind::decision;
   d.player = seat;
   d.parent = parent;
   d.parent_action = parent_action;
   d.infoset = tree.infoset_for(p, key, 2);
   const int id = tree.add_node(std::move(d));
   tree.attach(p, tree.node(id).infoset, id);
   build_kuhn_betting(tree, id, 0, cards, history + "p");
   build_kuhn_betting(tree, id, 1, cards, history + "b");
}

}  // namespace detail

/// Three-card Kuhn poker (J < Q < K, ante 1, bet 1). Action 0 is pass
/// (check or fold), action 1 is bet (bet or call). Infoset keys are the
/// private card followed by the public betting history, e.g. "Qpb".
inline GameTree build_kuhn()
{
   GameTree tree;
   GameNode root;
   root.kind = NodeKind::chance;
   const int root_id = tree.add_node(std::move(root));
   int deal = 0;
   std::vector<double> probs;
   for(int a = 0; a < 3; ++a) {
      for(int b = 0; b < 3; ++b) {
         if(a != b) {
            detail::build_kuhn_betting(tree, root_id, deal++, {a, b}, "");
            probs.push_back(1. / 6.);
         }
      }
   }
   tree.set_chance_probs(root_id, std::move(probs));
   return tree;
}

/// Per-infoset action distributions for one seat.
class BehaviorPolicy {
  public:
   BehaviorPolicy() = default;

   BehaviorPolicy(Player seat, std::vector<Vector> probs) : m_seat(seat), m_probs(std::move(probs))
   {
      for(auto& v : m_probs) {
         detail::require(v.size() > 0 and v.allFinite() and (v.array() >= 0.).all(), "BehaviorPolicy: invalid distribution");
         const double s = v.sum();
         detail::require(std::abs(s - 1.) <= 1e-9, "BehaviorPolicy: infoset distribution does not sum to 1");
         v /= s;
      }
   }

   static BehaviorPolicy uniform(const GameTree& tree, Player seat)
   {
      std::vector<Vector> probs;
      for(const auto& is : tree.infosets(seat)) {
         probs.push_back(Vector::Constant(is.n_actions, 1. / is.n_actions));
      }
      return {seat, std::move(probs)};
   }

   /// Deterministic policy playing `actions[I]` at infoset I.
   static BehaviorPolicy pure(const GameTree& tree, Player seat, std::span<const int> actions)
   {
      detail::require(actions.size() == tree.n_infosets(seat), "BehaviorPolicy::pure: one action per infoset required");
      std::vector<Vector> probs;
      for(std::size_t i = 0; i < actions.size(); ++i) {
         const int n = tree.infosets(seat)[i].n_actions;
         detail::require(actions[i] >= 0 and actions[i] < n, "BehaviorPolicy::pure: action out of range");
         Vector v = Vector::Zero(n);
         v[actions[i]] = 1.;
         probs.push_back(std::move(v));
      }
      return {seat, std::move(probs)};
   }

   [[nodiscard]] Player seat() const noexcept { return m_seat; }
   [[nodiscard]] std::size_t n_infosets() const noexcept { return m_probs.size(); }
   [[nodiscard]] const Vector& at(std::size_t infoset) const { return m_probs.at(infoset); }
   [[nodiscard]] double prob(std::size_t infoset, int action) const { return m_probs.at(infoset)[action]; }
   [[nodiscard]] const std::vector<Vector>& table() const noexcept { return m_probs; }

   bool operator==(const BehaviorPolicy& o) const
   {
      if(m_seat != o.m_seat or m_probs.size() != o.m_probs.size()) {
         return false;
      }
      for(std::size_t i = 0; i < m_probs.size(); ++i) {
         if(m_probs[i].size() != o.m_probs[i].size() or m_probs[i] != o.m_probs[i]) {
            return false;
         }
      }
      return true;
   }

  private:
   Player m_seat = Player::row;
   std::vector<Vector> m_probs;
};

namespace detail {

inline void check_covers(const GameTree& tree, const BehaviorPolicy& pol, Player seat)
{
   require(pol.seat() == seat, "kuhn: policy for the wrong seat");
   require(pol.n_infosets() == tree.n_infosets(seat), "kuhn: policy does not cover every infoset");
   for(std::size_t i = 0; i < pol.n_infosets(); ++i) {
      require(pol.at(i).size() == tree.infosets(seat)[i].n_actions, "kuhn: infoset action count mismatch");
   }
}

/// Probability that `pol`'s own actions lead to each node.
inline std::vector<double> own_reach(const GameTree& tree, const BehaviorPolicy& pol)
{
   const auto& nodes = tree.nodes();
   std::vector<double> reach(nodes.size(), 1.);
   const int seat = index_of(pol.seat());
   for(std::size_t n = 1; n < nodes.size(); ++n) {
      const auto& node = nodes[n];
      const auto& par = nodes[static_cast<std::size_t>(node.parent)];
      double r = reach[static_cast<std::size_t>(node.parent)];
      if(par.kind == NodeKind::decision and par.player == seat) {
         r *= pol.prob(static_cast<std::size_t>(par.infoset), node.parent_action);
      }
      reach[n] = r;
   }
   return reach;
}

inline std::vector<double> chance_reach(const GameTree& tree)
{
   const auto& nodes = tree.nodes();
   std::vector<double> reach(nodes.size(), 1.);
   for(std::size_t n = 1; n < nodes.size(); ++n) {
      const auto& node = nodes[n];
      const auto& par = nodes[static_cast<std::size_t>(node.parent)];
      double r = reach[static_cast<std::size_t>(node.parent)];
      if(par.kind == NodeKind::chance) {
         r *= par.chance_probs[static_cast<std::size_t>(node.parent_action)];
      }
      reach[n] = r;
   }
   return reach;
}

}  // namespace detail

/// An opponent population: behavior policies with simplex weights.
struct WeightedPolicy {
   const BehaviorPolicy* policy = nullptr;
   double weight = 0.;
};

/// Mixture-weighted reach of the opponent seat at each node. Values are
/// linear in this quantity, so it stands in for the whole mixture.
inline std::vector<double> mixture_reach(const GameTree& tree, std::span<const BehaviorPolicy> policies, const Vector& weights)
{
   detail::require(not policies.empty(), "kuhn: empty opponent mixture");
   detail::require(static_cast<std::size_t>(weights.size()) == policies.size(), "kuhn: mixture weight count mismatch");
   detail::require((weights.array() >= 0.).all() and std::abs(weights.sum() - 1.) <= 1e-9, "kuhn: mixture weights are not a simplex");
   std::vector<double> reach(tree.nodes().size(), 0.);
   for(std::size_t k = 0; k < policies.size(); ++k) {
      if(weights[static_cast<Index>(k)] == 0.) {
         continue;
      }
      detail::check_covers(tree, policies[k], policies.front().seat());
      const auto r = detail::own_reach(tree, policies[k]);
      for(std::size_t n = 0; n < r.size(); ++n) {
         reach[n] += weights[static_cast<Index>(k)] * r[n];
      }
   }
   return reach;
}

/// Exact expected chips of the row player.
inline double expected_value(const GameTree& tree, const BehaviorPolicy& row, const BehaviorPolicy& col)
{
   detail::check_covers(tree, row, Player::row);
   detail::check_covers(tree, col, Player::col);
   const auto rr = detail::own_reach(tree, row);
   const auto rc = detail::own_reach(tree, col);
   const auto ch = detail::chance_reach(tree);
   double v = 0.;
   const auto& nodes = tree.nodes();
   for(std::size_t n = 0; n < nodes.size(); ++n) {
      if(nodes[n].kind == NodeKind::terminal) {
         v += ch[n] * rr[n] * rc[n] * nodes[n].payoff;
      }
   }
   return v;
}

/// Expected utility of `player` playing `pol` against a mixture given by its
/// reach vector.
inline double value_against_reach(const GameTree& tree, Player player, const BehaviorPolicy& pol, const std::vector<double>& opp_reach)
{
   detail::check_covers(tree, pol, player);
   const auto own = detail::own_reach(tree, pol);
   const auto ch = detail::chance_reach(tree);
   const double sign = player == Player::row ? 1. : -1.;
   double v = 0.;
   const auto& nodes = tree.nodes();
   for(std::size_t n = 0; n < nodes.size(); ++n) {
      if(nodes[n].kind == NodeKind::terminal) {
         v += ch[n] * own[n] * opp_reach[n] * nodes[n].payoff;
      }
   }
   return sign * v;
}

/// Counterfactual action values of `player` at each of its infosets when it
/// plays `pol` below the infoset and the opponent reach is `opp_reach`:
/// cfv(I, a) = sum over h in I of chance(h) opp(h) v(h a).
inline std::vector<Vector> counterfactual_values(
   const GameTree& tree, Player player, const BehaviorPolicy& pol, const std::vector<double>& opp_reach)
{
   detail::check_covers(tree, pol, player);
   const auto& nodes = tree.nodes();
   const auto ch = detail::chance_reach(tree);
   const double sign = player == Player::row ? 1. : -1.;
   const int seat = index_of(player);
   // w[n]: chance * opponent reach * own reach from n downward * payoff, summed over leaves
   std::vector<double> w(nodes.size(), 0.);
   std::vector<Vector> cfv;
   for(const auto& is : tree.infosets(player)) {
      cfv.push_back(Vector::Zero(is.n_actions));
   }
   for(std::size_t n = nodes.size(); n-- > 0;) {
      const auto& node = nodes[n];
      if(node.kind == NodeKind::terminal) {
         w[n] = sign * ch[n] * opp_reach[n] * node.payoff;
         continue;
      }
      double total = 0.;
      for(std::size_t a = 0; a < node.children.size(); ++a) {
         const double child = w[static_cast<std::size_t>(node.children[a])];
         if(node.kind == NodeKind::decision and node.player == seat) {
            cfv[static_cast<std::size_t>(node.infoset)][static_cast<Index>(a)] += child;
            total += pol.prob(static_cast<std::size_t>(node.infoset), static_cast<int>(a)) * child;
         } else {
            total += child;
         }
      }
      w[n] = total;
   }
   return cfv;
}

struct EfgBestResponse {
   BehaviorPolicy policy;
   double value = 0.;
};

/// Pure best response against the opponent reach vector by backward
/// induction over infosets (deepest first); ties go to the lowest action.
inline EfgBestResponse best_response_to_reach(const GameTree& tree, Player player, const std::vector<double>& opp_reach)
{
   const auto& sets = tree.infosets(player);
   std::vector<int> actions(sets.size(), 0);
   // infosets are created depth-first, so a later infoset is never an
   // ancestor of an earlier one along the same card; process by node depth
   std::vector<std::pair<int, std::size_t>> order;
   for(std::size_t i = 0; i < sets.size(); ++i) {
      int depth = 0;
      for(int n = sets[i].nodes.front(); n > 0; n = tree.node(n).parent) {
         ++depth;
      }
      order.emplace_back(-depth, i);
   }
   std::sort(order.begin(), order.end());
   BehaviorPolicy current = BehaviorPolicy::pure(tree, player, actions);
   for(const auto& [neg_depth, i] : order) {
      (void)neg_depth;
      const auto cfv = counterfactual_values(tree, player, current, opp_reach);
      Index best = 0;
      for(Index a = 1; a < cfv[i].size(); ++a) {
         if(cfv[i][a] > cfv[i][best] + 1e-15) {
            best = a;
         }
      }
      actions[i] = static_cast<int>(best);
      current = BehaviorPolicy::pure(tree, player, actions);
   }
   const double v = value_against_reach(tree, player, current, opp_reach);
   return {std::move(current), v};
}

inline EfgBestResponse exact_best_response(
   const GameTree& tree, Player player, std::span<const BehaviorPolicy> opponents, const Vector& weights)
{
   detail::require(not opponents.empty(), "exact_best_response: empty opponent mixture");
   return best_response_to_reach(tree, player, mixture_reach(tree, opponents, weights));
}

/// Sum of both seats' best-response gains against the meta-mixtures.
inline double nash_conv_efg(
   const GameTree& tree,
   std::span<const BehaviorPolicy> set_row,
   const Vector& meta_row,
   std::span<const BehaviorPolicy> set_col,
   const Vector& meta_col)
{
   // zero-sum: u_row(sigma) + u_col(sigma) = 0
   const double br_row = exact_best_response(tree, Player::row, set_col, meta_col).value;
   const double br_col = exact_best_response(tree, Player::col, set_row, meta_row).value;
   return br_row + br_col;
}

/// Behavior policy realizing the same sequence-form strategy as the weighted
/// mixture of `policies` (reach-weighted per infoset).
inline BehaviorPolicy mix_behavior(const GameTree& tree, std::span<const BehaviorPolicy> policies, const Vector& weights)
{
   detail::require(not policies.empty(), "mix_behavior: empty mixture");
   const Player seat = policies.front().seat();
   std::vector<Vector> num;
   std::vector<double> den;
   for(const auto& is : tree.infosets(seat)) {
      num.push_back(Vector::Zero(is.n_actions));
      den.push_back(0.);
   }
   for(std::size_t k = 0; k < policies.size(); ++k) {
      const double w = weights[static_cast<Index>(k)];
      if(w == 0.) {
         continue;
      }
      detail::check_covers(tree, policies[k], seat);
      const auto reach = detail::own_reach(tree, policies[k]);
      for(std::size_t i = 0; i < num.size(); ++i) {
         const double r = w * reach[static_cast<std::size_t>(tree.infosets(seat)[i].nodes.front())];
         num[i] += r * policies[k].at(i);
         den[i] += r;
      }
   }
   for(std::size_t i = 0; i < num.size(); ++i) {
      if(den[i] > 0.) {
         num[i] /= num[i].sum();
      } else {
         num[i] = Vector::Constant(num[i].size(), 1. / static_cast<double>(num[i].size()));
      }
   }
   return {seat, std::move(num)};
}

/// Running reach-weighted average of a sequence of behavior policies; the
/// result equals the uniform mixture over the iterates.
class BehaviorAverager {
  public:
   BehaviorAverager() = default;

   void add(const GameTree& tree, const BehaviorPolicy& pol)
   {
      const Player seat = pol.seat();
      if(m_num.empty()) {
         m_seat = seat;
         for(const auto& is : tree.infosets(seat)) {
            m_num.push_back(Vector::Zero(is.n_actions));
            m_den.push_back(0.);
         }
      }
      detail::require(seat == m_seat, "BehaviorAverager: mixed seats");
      const auto reach = detail::own_reach(tree, pol);
      for(std::size_t i = 0; i < m_num.size(); ++i) {
         const double r = reach[static_cast<std::size_t>(tree.infosets(seat)[i].nodes.front())];
         m_num[i] += r * pol.at(i);
         m_den[i] += r;
      }
      ++m_count;
   }

   [[nodiscard]] std::size_t count() const noexcept { return m_count; }

   /// Down-weights the accumulated history (used when carrying averages).
   void scale(double f)
   {
      for(std::size_t i = 0; i < m_num.size(); ++i) {
         m_num[i] *= f;
         m_den[i] *= f;
      }
   }

   [[nodiscard]] BehaviorPolicy average() const
   {
      detail::require(m_count > 0, "BehaviorAverager: no iterates");
      std::vector<Vector> probs = m_num;
      for(std::size_t i = 0; i < probs.size(); ++i) {
         if(m_den[i] > 0.) {
            probs[i] /= probs[i].sum();
         } else {
            probs[i] = Vector::Constant(probs[i].size(), 1. / static_cast<double>(probs[i].size()));
         }
      }
      return {m_seat, std::move(probs)};
   }

  private:
   Player m_seat = Player::row;
   std::vector<Vector> m_num;
   std::vector<double> m_den;
   std::size_t m_count = 0;
};

/// Plays one seeded episode; returns the row player's chips.
inline double play_episode(const GameTree& tree, const BehaviorPolicy& row, const BehaviorPolicy& col, Rng& rng)
{
   int n = 0;
   while(true) {
      const auto& node = tree.node(n);
      switch(node.kind) {
         case NodeKind::terminal: return node.payoff;
         case NodeKind::chance:
            n = node.children[rng.categorical(std::span<const double>(node.chance_probs))];
            break;
         case NodeKind::decision: {
            const auto& pol = node.player == 0 ? row : col;
            n = node.children[rng.categorical(pol.at(static_cast<std::size_t>(node.infoset)))];
            break;
         }
      }
   }
}

/// Every deterministic policy of `seat` (2^6 = 64 in Kuhn poker).
inline std::vector<BehaviorPolicy> enumerate_pure_policies(const GameTree& tree, Player seat)
{
   const auto& sets = tree.infosets(seat);
   std::vector<int> actions(sets.size(), 0);
   std::vector<BehaviorPolicy> out;
   while(true) {
      out.push_back(BehaviorPolicy::pure(tree, seat, actions));
      std::size_t i = 0;
      while(i < actions.size()) {
         if(++actions[i] < sets[i].n_actions) {
            break;
         }
         actions[i] = 0;
         ++i;
      }
      if(i == actions.size()) {
         return out;
      }
   }
}

}  // namespace epsro
