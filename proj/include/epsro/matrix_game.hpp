#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "epsro/strategy.hpp"
#include "epsro/types.hpp"

namespace epsro {

/// Two-player zero-sum normal-form game; `payoff(i, j)` is the row player's
/// utility when row plays pure strategy i and column plays j. The column
/// player receives the negation.
class MatrixGame {
  public:
   static constexpr double symmetric_io_tolerance = 1e-12;

   MatrixGame() = default;

   explicit MatrixGame(Matrix payoff, bool symmetric = false)
       : m_payoff(std::move(payoff)), m_symmetric(symmetric)
   {
      detail::require(m_payoff.rows() > 0 and m_payoff.cols() > 0, "MatrixGame: empty payoff matrix");
      detail::require(m_payoff.allFinite(), "MatrixGame: non-finite payoff entry");
      if(m_symmetric) {
         detail::require(is_antisymmetric(m_payoff, 0.), "MatrixGame: symmetric flag on non-antisymmetric matrix");
      }
   }

   [[nodiscard]] Index n_rows() const noexcept { return m_payoff.rows(); }
   [[nodiscard]] Index n_cols() const noexcept { return m_payoff.cols(); }
   [[nodiscard]] Index n_actions(Player p) const noexcept
   {
      return p == Player::row ? n_rows() : n_cols();
   }
   [[nodiscard]] const Matrix& payoff() const noexcept { return m_payoff; }
   [[nodiscard]] double operator()(Index i, Index j) const { return m_payoff(i, j); }
   [[nodiscard]] bool symmetric() const noexcept { return m_symmetric; }

   /// Payoff matrix seen by `p`: rows are p's pure strategies, columns the
   /// opponent's, entries p's utility.
   [[nodiscard]] Matrix payoff_for(Player p) const
   {
      return p == Player::row ? m_payoff : Matrix(-m_payoff.transpose());
   }

   static bool is_antisymmetric(const Matrix& m, double tol)
   {
      if(m.rows() != m.cols()) {
         return false;
      }
      for(Index i = 0; i < m.rows(); ++i) {
         if(std::abs(m(i, i)) > tol) {
            return false;
         }
         for(Index j = i + 1; j < m.cols(); ++j) {
            if(std::abs(m(i, j) + m(j, i)) > tol) {
               return false;
            }
         }
      }
      return true;
   }

   bool operator==(const MatrixGame& other) const
   {
      return m_symmetric == other.m_symmetric and m_payoff.rows() == other.m_payoff.rows()
             and m_payoff.cols() == other.m_payoff.cols() and m_payoff == other.m_payoff;
   }

  private:
   Matrix m_payoff;
   bool m_symmetric = false;
};

struct BestResponse {
   Index action = 0;
   double value = 0.;
};

/// Row player's expected utility `row^T A col`.
inline double utility(const MatrixGame& game, const MixedStrategy& row, const MixedStrategy& col)
{
   detail::require(row.size() == game.n_rows(), "utility: row strategy dimension mismatch");
   detail::require(col.size() == game.n_cols(), "utility: column strategy dimension mismatch");
   return row.probs().dot(game.payoff() * col.probs());
}

/// Expected utility of each of `player`'s pure strategies against `opponent`.
inline Vector action_values(const MatrixGame& game, Player player, const MixedStrategy& opponent)
{
   if(player == Player::row) {
      detail::require(opponent.size() == game.n_cols(), "action_values: opponent dimension mismatch");
      return game.payoff() * opponent.probs();
   }
   detail::require(opponent.size() == game.n_rows(), "action_values: opponent dimension mismatch");
   return -(game.payoff().transpose() * opponent.probs());
}

/// Pure best response of `player` to `opponent`; ties go to the lowest index.
inline BestResponse best_response(const MatrixGame& game, Player player, const MixedStrategy& opponent)
{
   const Vector values = action_values(game, player, opponent);
   BestResponse br{0, values[0]};
   for(Index a = 1; a < values.size(); ++a) {
      if(values[a] > br.value) {
         br = {a, values[a]};
      }
   }
   return br;
}

/// Sum over both players of the best-response gain against the profile.
inline double nash_conv(const MatrixGame& game, const MixedStrategy& sigma_row, const MixedStrategy& sigma_col)
{
   const double u = utility(game, sigma_row, sigma_col);
   const double row_gain = best_response(game, Player::row, sigma_col).value - u;
   const double col_gain = best_response(game, Player::col, sigma_row).value + u;
   return row_gain + col_gain;
}

// ---------------------------------------------------------------------------
// CSV I/O: header `n_rows,n_cols`, then n_rows comma-separated rows. Lines
// starting with '#' are comments; `# symmetric` marks an antisymmetric game.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double x)
{
   char buf[64];
   auto res = std::to_chars(buf, buf + sizeof(buf), x);
   return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view token, const std::string& context)
{
   while(not token.empty() and (token.front() == ' ' or token.front() == '\t')) {
      token.remove_prefix(1);
   }
   while(not token.empty() and (token.back() == ' ' or token.back() == '\t' or token.back() == '\r')) {
      token.remove_suffix(1);
   }
   if(not token.empty() and token.front() == '+') {
      token.remove_prefix(1);
   }
   double value = 0.;
   auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
   if(ec != std::errc{} or ptr != token.data() + token.size() or token.empty()) {
      throw FormatError(context + ": cannot parse number '" + std::string(token) + "'");
   }
   if(not std::isfinite(value)) {
      throw FormatError(context + ": non-finite value '" + std::string(token) + "'");
   }
   return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
   std::vector<std::string_view> out;
   std::size_t start = 0;
   while(true) {
      const auto pos = line.find(sep, start);
      if(pos == std::string_view::npos) {
         out.push_back(line.substr(start));
         return out;
      }
      out.push_back(line.substr(start, pos - start));
      start = pos + 1;
   }
}

}  // namespace detail

inline void write_matrix_csv(std::ostream& os, const MatrixGame& game)
{
   os << game.n_rows() << ',' << game.n_cols() << '\n';
   if(game.symmetric()) {
      os << "# symmetric\n";
   }
   for(Index i = 0; i < game.n_rows(); ++i) {
      for(Index j = 0; j < game.n_cols(); ++j) {
         if(j > 0) {
            os << ',';
         }
         os << detail::format_double(game(i, j));
      }
      os << '\n';
   }
}

inline MatrixGame read_matrix_csv(std::istream& is, const std::string& source = "<stream>")
{
   std::string line;
   bool symmetric = false;
   bool have_header = false;
   Index rows = 0;
   Index cols = 0;
   Matrix payoff;
   Index filled = 0;
   std::size_t line_no = 0;
   while(std::getline(is, line)) {
      ++line_no;
      const std::string ctx = source + ":" + std::to_string(line_no);
      if(not line.empty() and line.back() == '\r') {
         line.pop_back();
      }
      if(line.empty()) {
         continue;
      }
      if(line.front() == '#') {
         if(line.find("symmetric") != std::string::npos) {
            symmetric = true;
         }
         continue;
      }
      const auto fields = detail::split(line, ',');
      if(not have_header) {
         if(fields.size() != 2) {
            throw FormatError(ctx + ": header must be 'n_rows,n_cols'");
         }
         const double r = detail::parse_double(fields[0], ctx);
         const double c = detail::parse_double(fields[1], ctx);
         if(r < 1 or c < 1 or r != std::floor(r) or c != std::floor(c)) {
            throw FormatError(ctx + ": invalid dimensions");
         }
         rows = static_cast<Index>(r);
         cols = static_cast<Index>(c);
         payoff.resize(rows, cols);
         have_header = true;
         continue;
      }
      if(filled >= rows) {
         throw FormatError(ctx + ": more rows than declared");
      }
      if(static_cast<Index>(fields.size()) != cols) {
         throw FormatError(ctx + ": expected " + std::to_string(cols) + " columns");
      }
      for(Index j = 0; j < cols; ++j) {
         payoff(filled, j) = detail::parse_double(fields[static_cast<std::size_t>(j)], ctx);
      }
      ++filled;
   }
   if(not have_header) {
      throw FormatError(source + ": missing header");
   }
   if(filled != rows) {
      throw FormatError(source + ": expected " + std::to_string(rows) + " rows, found " + std::to_string(filled));
   }
   if(symmetric and not MatrixGame::is_antisymmetric(payoff, MatrixGame::symmetric_io_tolerance)) {
      throw FormatError(source + ": marked symmetric but matrix is not antisymmetric");
   }
   if(symmetric) {
      // snap round-off so the in-memory invariant is exact
      for(Index i = 0; i < rows; ++i) {
         payoff(i, i) = 0.;
         for(Index j = i + 1; j < cols; ++j) {
            payoff(j, i) = -payoff(i, j);
         }
      }
   }
   return MatrixGame(std::move(payoff), symmetric);
}

inline void save_matrix_csv(const std::filesystem::path& path, const MatrixGame& game)
{
   std::ofstream os(path);
   if(not os) {
      throw std::runtime_error("cannot open '" + path.string() + "' for writing");
   }
   write_matrix_csv(os, game);
   if(not os) {
      throw std::runtime_error("failed writing '" + path.string() + "'");
   }
}

inline MatrixGame load_matrix_csv(const std::filesystem::path& path)
{
   std::ifstream is(path);
   if(not is) {
      throw std::runtime_error("cannot open '" + path.string() + "'");
   }
   return read_matrix_csv(is, path.string());
}

}  // namespace epsro
