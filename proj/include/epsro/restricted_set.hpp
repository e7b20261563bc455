#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "epsro/types.hpp"

namespace epsro {

enum class EntryStatus { fixed, active };

/// Ordered, append-only population of policies for one player.
///
/// Fixed entries are immutable. Active entries (pipeline workers still being
/// trained) sit above every fixed entry and carry strictly increasing levels.
/// Only the lowest active entry can be promoted.
template <typename Policy>
class RestrictedPolicySet {
  public:
   using policy_type = Policy;

   RestrictedPolicySet() = default;

   explicit RestrictedPolicySet(std::vector<Policy> fixed_entries)
   {
      for(auto& p : fixed_entries) {
         add_fixed(std::move(p));
      }
   }

   [[nodiscard]] std::size_t size() const noexcept { return m_entries.size(); }
   [[nodiscard]] bool empty() const noexcept { return m_entries.empty(); }
   [[nodiscard]] const Policy& operator[](std::size_t i) const { return m_entries.at(i); }
   [[nodiscard]] std::span<const Policy> entries() const noexcept { return m_entries; }
   [[nodiscard]] EntryStatus status(std::size_t i) const { return m_status.at(i); }
   [[nodiscard]] int level(std::size_t i) const { return m_level.at(i); }

   [[nodiscard]] std::size_t n_fixed() const noexcept
   {
      return static_cast<std::size_t>(std::count(m_status.begin(), m_status.end(), EntryStatus::fixed));
   }
   [[nodiscard]] std::size_t n_active() const noexcept { return size() - n_fixed(); }

   /// Appends a fixed entry; only legal while no active entries exist.
   void add_fixed(Policy p)
   {
      detail::require(n_active() == 0, "RestrictedPolicySet: cannot append fixed entry above active entries");
      m_entries.push_back(std::move(p));
      m_status.push_back(EntryStatus::fixed);
      m_level.push_back(static_cast<int>(m_entries.size()) - 1);
   }

   /// Appends an active entry at the next level; returns its index.
   std::size_t add_active(Policy p)
   {
      m_entries.push_back(std::move(p));
      m_status.push_back(EntryStatus::active);
      m_level.push_back(m_level.empty() ? 0 : m_level.back() + 1);
      return m_entries.size() - 1;
   }

   /// Replaces the policy of an active entry (pipeline training updates).
   void update_active(std::size_t i, Policy p)
   {
      detail::require(i < size(), "RestrictedPolicySet: index out of range");
      detail::require(m_status[i] == EntryStatus::active, "RestrictedPolicySet: fixed entries are immutable");
      m_entries[i] = std::move(p);
   }

   /// Index of the lowest active entry, or size() if none exist.
   [[nodiscard]] std::size_t lowest_active() const noexcept
   {
      for(std::size_t i = 0; i < size(); ++i) {
         if(m_status[i] == EntryStatus::active) {
            return i;
         }
      }
      return size();
   }

   /// Promotes entry `i` to fixed. Only the lowest active entry is eligible.
   void promote(std::size_t i)
   {
      detail::require(i < size() and m_status[i] == EntryStatus::active, "RestrictedPolicySet: not an active entry");
      detail::require(i == lowest_active(), "RestrictedPolicySet: only the lowest active entry can be promoted");
      m_status[i] = EntryStatus::fixed;
   }

   /// Entries whose level is strictly below `level` (copy; immutable snapshot).
   [[nodiscard]] std::vector<Policy> below(int level) const
   {
      std::vector<Policy> out;
      for(std::size_t i = 0; i < size(); ++i) {
         if(m_level[i] < level) {
            out.push_back(m_entries[i]);
         }
      }
      return out;
   }

   [[nodiscard]] std::vector<Policy> fixed_entries() const
   {
      std::vector<Policy> out;
      for(std::size_t i = 0; i < size(); ++i) {
         if(m_status[i] == EntryStatus::fixed) {
            out.push_back(m_entries[i]);
         }
      }
      return out;
   }

   /// Checks the ordering invariant; used by tests and debug assertions.
   [[nodiscard]] bool invariants_hold() const noexcept
   {
      int max_fixed_level = -1;
      bool seen_active = false;
      int prev_active = -1;
      for(std::size_t i = 0; i < size(); ++i) {
         if(m_status[i] == EntryStatus::fixed) {
            if(seen_active) {
               return false;
            }
            max_fixed_level = std::max(max_fixed_level, m_level[i]);
         } else {
            if(m_level[i] <= max_fixed_level or m_level[i] <= prev_active) {
               return false;
            }
            prev_active = m_level[i];
            seen_active = true;
         }
      }
      return true;
   }

  private:
   std::vector<Policy> m_entries;
   std::vector<EntryStatus> m_status;
   std::vector<int> m_level;
};

}  // namespace epsro
