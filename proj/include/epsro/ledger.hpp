#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "epsro/matrix_game.hpp"
#include "epsro/types.hpp"

namespace epsro {

struct LedgerRow {
   int epoch = 0;
   double nashconv = 0.;
   double cardinality = 0.;
   std::size_t set_size_p1 = 0;
   std::size_t set_size_p2 = 0;
   /// cumulative meta-game table simulation episodes
   std::uint64_t sim_episodes = 0;
   /// cumulative meta-strategy iterations
   std::uint64_t meta_iters = 0;
   std::int64_t wall_ms = 0;
};

/// Per-epoch record of one run. Epochs strictly increase and the episode and
/// iteration counters never decrease.
class RunLedger {
  public:
   RunLedger() = default;
   RunLedger(std::string algo, std::uint64_t seed) : m_algo(std::move(algo)), m_seed(seed) {}

   [[nodiscard]] const std::string& algo() const noexcept { return m_algo; }
   [[nodiscard]] std::uint64_t seed() const noexcept { return m_seed; }
   [[nodiscard]] const std::vector<LedgerRow>& rows() const noexcept { return m_rows; }
   [[nodiscard]] bool empty() const noexcept { return m_rows.empty(); }
   [[nodiscard]] const LedgerRow& back() const { return m_rows.back(); }
   [[nodiscard]] const LedgerRow& front() const { return m_rows.front(); }

   void add(const LedgerRow& row)
   {
      if(not m_rows.empty()) {
         const auto& last = m_rows.back();
         detail::require(row.epoch > last.epoch, "RunLedger: epochs must strictly increase");
         detail::require(row.sim_episodes >= last.sim_episodes and row.meta_iters >= last.meta_iters,
                         "RunLedger: counters must be monotone");
      }
      m_rows.push_back(row);
   }

   /// episodes spent by the SolveURR windows and warm-start estimates
   /// (not table simulations)
   std::uint64_t urr_episodes = 0;

  private:
   std::string m_algo;
   std::uint64_t m_seed = 0;
   std::vector<LedgerRow> m_rows;
};

inline constexpr const char* ledger_header = "epoch,algo,seed,nashconv,cardinality,set_size_p1,set_size_p2,sim_episodes,meta_iters,wall_ms";

inline void write_ledger_rows(std::ostream& os, const RunLedger& ledger)
{
   for(const auto& r : ledger.rows()) {
      os << r.epoch << ',' << ledger.algo() << ',' << ledger.seed() << ',' << detail::format_double(r.nashconv) << ','
         << detail::format_double(r.cardinality) << ',' << r.set_size_p1 << ',' << r.set_size_p2 << ',' << r.sim_episodes
         << ',' << r.meta_iters << ',' << r.wall_ms << '\n';
   }
}

inline void write_ledger_csv(std::ostream& os, std::span<const RunLedger> ledgers)
{
   os << ledger_header << '\n';
   for(const auto& l : ledgers) {
      write_ledger_rows(os, l);
   }
}

inline void write_ledger_csv(std::ostream& os, const RunLedger& ledger)
{
   write_ledger_csv(os, std::span<const RunLedger>(&ledger, 1));
}

/// Parses ledger CSV text back into one ledger per (algo, seed), in order of
/// first appearance.
inline std::vector<RunLedger> read_ledger_csv(std::istream& is, const std::string& source = "<stream>")
{
   std::string line;
   if(not std::getline(is, line)) {
      throw FormatError(source + ": empty ledger file");
   }
   if(not line.empty() and line.back() == '\r') {
      line.pop_back();
   }
   if(line != ledger_header) {
      throw FormatError(source + ": unexpected ledger header");
   }
   std::vector<RunLedger> out;
   std::map<std::pair<std::string, std::uint64_t>, std::size_t> index;
   std::size_t line_no = 1;
   while(std::getline(is, line)) {
      ++line_no;
      if(not line.empty() and line.back() == '\r') {
         line.pop_back();
      }
      if(line.empty()) {
         continue;
      }
      const std::string ctx = source + ":" + std::to_string(line_no);
      const auto f = detail::split(line, ',');
      if(f.size() != 10) {
         throw FormatError(ctx + ": expected 10 fields");
      }
      const auto integer = [&](std::string_view s) {
         const double v = detail::parse_double(s, ctx);
         if(v != std::floor(v)) {
            throw FormatError(ctx + ": expected an integer");
         }
         return v;
      };
      LedgerRow r;
      r.epoch = static_cast<int>(integer(f[0]));
      const std::string algo(f[1]);
      const auto seed = static_cast<std::uint64_t>(integer(f[2]));
      r.nashconv = detail::parse_double(f[3], ctx);
      r.cardinality = detail::parse_double(f[4], ctx);
      r.set_size_p1 = static_cast<std::size_t>(integer(f[5]));
      r.set_size_p2 = static_cast<std::size_t>(integer(f[6]));
      r.sim_episodes = static_cast<std::uint64_t>(integer(f[7]));
      r.meta_iters = static_cast<std::uint64_t>(integer(f[8]));
      r.wall_ms = static_cast<std::int64_t>(integer(f[9]));
      const auto key = std::make_pair(algo, seed);
      auto it = index.find(key);
      if(it == index.end()) {
         it = index.emplace(key, out.size()).first;
         out.emplace_back(algo, seed);
      }
      try {
         out[it->second].add(r);
      } catch(const InvalidArgument& e) {
         throw FormatError(ctx + ": " + e.what());
      }
   }
   return out;
}

}  // namespace epsro
