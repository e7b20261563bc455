#pragma once

#include <cstdint>
#include <span>

#include "epsro/types.hpp"

namespace epsro {

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept
{
   x += 0x9e3779b97f4a7c15ULL;
   x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
   x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
   return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept
{
   return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept
{
   return mix_seed(mix_seed(a, b), c);
}

/// Small deterministic generator (xoshiro256**). All sampling in the library
/// goes through this type so that results are bit-identical across standard
/// library implementations (std distributions are implementation-defined).
class Rng {
  public:
   explicit Rng(std::uint64_t seed = 0) noexcept
   {
      std::uint64_t s = seed;
      for(auto& word : m_state) {
         s = mix_seed(s);
         word = s;
      }
   }

   std::uint64_t next() noexcept
   {
      const std::uint64_t result = rotl(m_state[1] * 5, 7) * 9;
      const std::uint64_t t = m_state[1] << 17;
      m_state[2] ^= m_state[0];
      m_state[3] ^= m_state[1];
      m_state[1] ^= m_state[2];
      m_state[0] ^= m_state[3];
      m_state[2] ^= t;
      m_state[3] = rotl(m_state[3], 45);
      return result;
   }

   /// uniform on [0, 1) with 53 bits of resolution
   double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

   double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

   /// uniform integer on [0, n)
   std::size_t below(std::size_t n) noexcept
   {
      return static_cast<std::size_t>(uniform() * static_cast<double>(n));
   }

   /// Draws an index from a probability vector by inverse-CDF search.
   std::size_t categorical(std::span<const double> probs) noexcept
   {
      const double u = uniform();
      double acc = 0.;
      std::size_t last_positive = 0;
      for(std::size_t i = 0; i < probs.size(); ++i) {
         if(probs[i] <= 0.) {
            continue;
         }
         last_positive = i;
         acc += probs[i];
         if(u < acc) {
            return i;
         }
      }
      // rounding: total mass slightly below 1
      return last_positive;
   }

   std::size_t categorical(const Vector& probs) noexcept
   {
      return categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
   }

  private:
   static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
   {
      return (x << k) | (x >> (64 - k));
   }

   std::uint64_t m_state[4]{};
};

}  // namespace epsro
