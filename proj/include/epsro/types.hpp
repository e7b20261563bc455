#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace epsro {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// The two seats of a two-player zero-sum game. Payoffs are always stored
/// from the row player's perspective.
enum class Player { row = 0, col = 1 };

constexpr Player other(Player p) noexcept { return p == Player::row ? Player::col : Player::row; }
constexpr int index_of(Player p) noexcept { return static_cast<int>(p); }

inline const char* to_string(Player p) noexcept { return p == Player::row ? "row" : "col"; }

/// Thrown when an argument violates a documented precondition (dimension
/// mismatch, empty set, non-finite value, ...).
class InvalidArgument : public std::invalid_argument {
  public:
   using std::invalid_argument::invalid_argument;
};

/// Thrown for malformed external data (CSV, config files).
class FormatError : public std::runtime_error {
  public:
   using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
   if(not cond) {
      throw InvalidArgument(what);
   }
}

}  // namespace detail
}  // namespace epsro
