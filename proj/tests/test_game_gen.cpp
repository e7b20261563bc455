#include <gtest/gtest.h>

#include <algorithm>

#include "epsro/game_gen.hpp"

using namespace epsro;

TEST(RandomSymmetric, InvariantsHoldExactly)
{
   for(const Index n : {Index{2}, Index{5}, Index{30}}) {
      for(std::uint64_t seed = 0; seed < 4; ++seed) {
         const MatrixGame g = random_symmetric(n, seed);
         ASSERT_TRUE(g.symmetric());
         for(Index i = 0; i < n; ++i) {
            EXPECT_EQ(g(i, i), 0.);
            for(Index j = 0; j < n; ++j) {
               EXPECT_EQ(g(i, j), -g(j, i));
               EXPECT_GT(g(i, j), -1.);
               EXPECT_LT(g(i, j), 1.);
            }
         }
      }
   }
   EXPECT_THROW(random_symmetric(1, 0), InvalidArgument);
}

TEST(RandomSymmetric, SeedDeterminism)
{
   EXPECT_TRUE(random_symmetric(3, 0) == random_symmetric(3, 0));
   EXPECT_FALSE(random_symmetric(3, 0) == random_symmetric(3, 1));
}

TEST(RandomSymmetric, UpperTriangleIsUniform)
{
   // Kolmogorov-Smirnov against U(-1, 1); 1.628 is the asymptotic p = 0.01 point
   const Index n = 120;
   const MatrixGame g = random_symmetric(n, 2024);
   std::vector<double> xs;
   for(Index i = 0; i < n; ++i) {
      for(Index j = i + 1; j < n; ++j) {
         xs.push_back(g(i, j));
      }
   }
   std::sort(xs.begin(), xs.end());
   const double m = static_cast<double>(xs.size());
   double d = 0.;
   for(std::size_t k = 0; k < xs.size(); ++k) {
      const double cdf = (xs[k] + 1.) / 2.;
      d = std::max({d, cdf - static_cast<double>(k) / m, static_cast<double>(k + 1) / m - cdf});
   }
   EXPECT_LT(d * std::sqrt(m), 1.628);
}

TEST(RandomZeroSum, ShapeAndRange)
{
   const MatrixGame g = random_zero_sum(3, 7, 4);
   EXPECT_EQ(g.n_rows(), 3);
   EXPECT_EQ(g.n_cols(), 7);
   EXPECT_FALSE(g.symmetric());
   EXPECT_LT(g.payoff().cwiseAbs().maxCoeff(), 1.);
}

TEST(MixtureGame, DensityVector)
{
   const MixtureGame g;
   for(int k = 0; k < 7; ++k) {
      const Vector d = density_vector(g, g.centers()[static_cast<std::size_t>(k)]);
      Index arg = 0;
      d.maxCoeff(&arg);
      EXPECT_EQ(arg, k);
      EXPECT_DOUBLE_EQ(d[k], 1.);
   }
   const Vector o = density_vector(g, {0., 0.});
   EXPECT_NEAR(o.maxCoeff() - o.minCoeff(), 0., 1e-15);
   // the midpoint of centers 0 and 1 is equidistant from both
   const Point2D mid = 0.5 * (g.centers()[0] + g.centers()[1]);
   const Vector dm = density_vector(g, mid);
   EXPECT_NEAR(dm[0], dm[1], 1e-15);
   EXPECT_THROW(density_vector(g, {5., 0.}), InvalidArgument);
}

TEST(MixtureGame, PayoffAntisymmetryAndSign)
{
   const MixtureGame g;
   Rng rng(8);
   for(int t = 0; t < 50; ++t) {
      const Point2D a{rng.uniform(-2., 2.), rng.uniform(-2., 2.)};
      const Point2D b{rng.uniform(-2., 2.), rng.uniform(-2., 2.)};
      EXPECT_NEAR(mixture_payoff(g, a, b), -mixture_payoff(g, b, a), 1e-14);
      EXPECT_EQ(mixture_payoff(g, a, a), 0.);
   }
   // hump 0 beats humps 1..3 and loses to 4..6
   const auto& c = g.centers();
   EXPECT_GT(mixture_payoff(g, c[0], c[1]), 0.);
   EXPECT_GT(mixture_payoff(g, c[0], c[3]), 0.);
   EXPECT_LT(mixture_payoff(g, c[0], c[4]), 0.);
}

TEST(MixtureGame, GradientMatchesFiniteDifferences)
{
   const MixtureGame g;
   Rng rng(9);
   const double h = 1e-6;
   for(int t = 0; t < 30; ++t) {
      const Point2D a{rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5)};
      const Point2D b{rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5)};
      const Point2D grad = mixture_payoff_gradient(g, a, b);
      const double fx = (mixture_payoff(g, a + Point2D{h, 0.}, b) - mixture_payoff(g, a - Point2D{h, 0.}, b)) / (2. * h);
      const double fy = (mixture_payoff(g, a + Point2D{0., h}, b) - mixture_payoff(g, a - Point2D{0., h}, b)) / (2. * h);
      EXPECT_NEAR(grad.x, fx, 1e-7);
      EXPECT_NEAR(grad.y, fy, 1e-7);
   }
}

TEST(MixtureGame, GradientAtOriginIsDensityTermOnly)
{
   const MixtureGame g;
   const Point2D o{0., 0.};
   // equal densities at the origin make S pi_j vanish, leaving d(1^T pi_i)
   const double h2 = g.params().bandwidth * g.params().bandwidth;
   const Vector a = density_vector(g, o);
   Point2D expect{};
   for(int k = 0; k < 7; ++k) {
      expect = expect + (-a[k] / h2) * (o - g.centers()[static_cast<std::size_t>(k)]);
   }
   const Point2D grad = mixture_payoff_gradient(g, o, o);
   EXPECT_NEAR(grad.x, expect.x, 1e-12);
   EXPECT_NEAR(grad.y, expect.y, 1e-12);
   EXPECT_NEAR((g.skew() * a).cwiseAbs().maxCoeff(), 0., 1e-12);
}

TEST(MixtureGame, LocalMaximumHasZeroGradient)
{
   const MixtureGame g;
   // against its own center a player sits on the 1^T pi hump maximum
   Point2D p = g.centers()[2];
   for(int t = 0; t < 2000; ++t) {
      p = g.project(p + 0.05 * mixture_payoff_gradient(g, p, g.centers()[2]));
   }
   EXPECT_LT(mixture_payoff_gradient(g, p, g.centers()[2]).norm(), 1e-6);
}
