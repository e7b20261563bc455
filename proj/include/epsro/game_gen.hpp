#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "epsro/matrix_game.hpp"
#include "epsro/rng.hpp"

namespace epsro {

/// Random antisymmetric zero-sum game: upper triangle ~ Uniform(-1, 1),
/// lower triangle mirrored with opposite sign, zero diagonal.
inline MatrixGame random_symmetric(Index n, std::uint64_t seed)
{
   detail::require(n >= 2, "random_symmetric: n must be at least 2");
   Rng rng(seed);
   Matrix a = Matrix::Zero(n, n);
   for(Index i = 0; i < n; ++i) {
      for(Index j = i + 1; j < n; ++j) {
         const double v = rng.uniform(-1., 1.);
         a(i, j) = v;
         a(j, i) = -v;
      }
   }
   return MatrixGame(std::move(a), true);
}

/// Random (generally asymmetric) zero-sum game with iid Uniform(-1, 1) entries.
inline MatrixGame random_zero_sum(Index rows, Index cols, std::uint64_t seed)
{
   detail::require(rows >= 1 and cols >= 1, "random_zero_sum: empty shape");
   Rng rng(seed);
   Matrix a(rows, cols);
   for(Index i = 0; i < rows; ++i) {
      for(Index j = 0; j < cols; ++j) {
         a(i, j) = rng.uniform(-1., 1.);
      }
   }
   return MatrixGame(std::move(a), false);
}

inline MatrixGame matching_pennies()
{
   Matrix a(2, 2);
   a << 1., -1., -1., 1.;
   return MatrixGame(std::move(a), false);
}

inline MatrixGame rock_paper_scissors()
{
   Matrix a(3, 3);
   // rock, paper, scissors
   a << 0., -1., 1., 1., 0., -1., -1., 1., 0.;
   return MatrixGame(std::move(a), true);
}

// ---------------------------------------------------------------------------
// Non-transitive mixture game on the plane
// ---------------------------------------------------------------------------

struct Point2D {
   double x = 0.;
   double y = 0.;

   [[nodiscard]] double norm() const noexcept { return std::hypot(x, y); }
   friend Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
   friend Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
   friend Point2D operator*(double s, Point2D a) { return {s * a.x, s * a.y}; }
   bool operator==(const Point2D&) const = default;
};

inline double distance(Point2D a, Point2D b) { return (a - b).norm(); }

struct MixtureGameParams {
   int n_humps = 7;
   double center_radius = 2.0;
   double bandwidth = 0.5;
   double arena_radius = 4.0;
};

/// Players each pick a point; the point maps to its vector of (unnormalized)
/// Gaussian densities under the hump centers, and the row payoff is
/// `pi_i^T S pi_j + 1^T (pi_i - pi_j)` with S the cyclic antisymmetric matrix
/// where hump k beats humps k+1..k+3 (mod 7).
class MixtureGame {
  public:
   explicit MixtureGame(MixtureGameParams params = {}) : m_params(params)
   {
      detail::require(params.n_humps >= 3 and params.n_humps % 2 == 1, "MixtureGame: odd hump count >= 3 required");
      detail::require(params.bandwidth > 0. and params.arena_radius > 0., "MixtureGame: positive sizes required");
      const int n = params.n_humps;
      m_centers.resize(static_cast<std::size_t>(n));
      for(int k = 0; k < n; ++k) {
         const double angle = 2. * std::numbers::pi * k / n;
         m_centers[static_cast<std::size_t>(k)] = {params.center_radius * std::cos(angle), params.center_radius * std::sin(angle)};
      }
      m_skew = Matrix::Zero(n, n);
      const int half = n / 2;
      for(int i = 0; i < n; ++i) {
         for(int k = 1; k < n; ++k) {
            m_skew(i, (i + k) % n) = k <= half ? 1. : -1.;
         }
      }
   }

   [[nodiscard]] const MixtureGameParams& params() const noexcept { return m_params; }
   [[nodiscard]] int n_humps() const noexcept { return m_params.n_humps; }
   [[nodiscard]] const std::vector<Point2D>& centers() const noexcept { return m_centers; }
   [[nodiscard]] const Matrix& skew() const noexcept { return m_skew; }
   [[nodiscard]] double arena_radius() const noexcept { return m_params.arena_radius; }

   [[nodiscard]] bool in_arena(Point2D p) const noexcept
   {
      return std::isfinite(p.x) and std::isfinite(p.y) and p.norm() <= m_params.arena_radius * (1. + 1e-12);
   }

   /// Radial projection onto the arena disc.
   [[nodiscard]] Point2D project(Point2D p) const noexcept
   {
      const double r = p.norm();
      if(r <= m_params.arena_radius) {
         return p;
      }
      return (m_params.arena_radius / r) * p;
   }

   void check(Point2D p) const
   {
      detail::require(in_arena(p), "MixtureGame: point outside the arena");
   }

  private:
   MixtureGameParams m_params;
   std::vector<Point2D> m_centers;
   Matrix m_skew;
};

inline Vector density_vector(const MixtureGame& game, Point2D p)
{
   game.check(p);
   const double h2 = game.params().bandwidth * game.params().bandwidth;
   Vector out(game.n_humps());
   for(int k = 0; k < game.n_humps(); ++k) {
      const Point2D d = p - game.centers()[static_cast<std::size_t>(k)];
      out[k] = std::exp(-(d.x * d.x + d.y * d.y) / (2. * h2));
   }
   return out;
}

inline double mixture_payoff(const MixtureGame& game, Point2D p_i, Point2D p_j)
{
   const Vector a = density_vector(game, p_i);
   const Vector b = density_vector(game, p_j);
   // pairing (i, k) with (k, i) keeps the value exactly antisymmetric
   const Matrix& s = game.skew();
   double v = 0.;
   for(Index i = 0; i < a.size(); ++i) {
      for(Index k = i + 1; k < a.size(); ++k) {
         v += s(i, k) * (a[i] * b[k] - a[k] * b[i]);
      }
   }
   return v + (a - b).sum();
}

/// Gradient of `mixture_payoff` in its first argument.
inline Point2D mixture_payoff_gradient(const MixtureGame& game, Point2D p_i, Point2D p_j)
{
   const Vector a = density_vector(game, p_i);
   const Vector weight = game.skew() * density_vector(game, p_j) + Vector::Ones(game.n_humps());
   const double h2 = game.params().bandwidth * game.params().bandwidth;
   Point2D g{};
   for(int k = 0; k < game.n_humps(); ++k) {
      const Point2D d = p_i - game.centers()[static_cast<std::size_t>(k)];
      const double s = -weight[k] * a[k] / h2;
      g = g + s * d;
   }
   return g;
}

}  // namespace epsro
