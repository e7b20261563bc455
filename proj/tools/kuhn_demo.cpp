// Library usage without the config layer: EPSRO and PSRO on Kuhn poker.

#include <iostream>

#include "epsro/epsro.hpp"

int main()
{
   const epsro::GameTree tree = epsro::build_kuhn();
   const epsro::KuhnOps ops(tree);

   epsro::EpsroOptions e;
   e.run.epochs = 30;
   const auto ep = epsro::run_epsro(ops, e);

   epsro::PsroOptions p;
   p.run.epochs = 30;
   p.run.sim_episodes = 0;
   const auto ps = epsro::run_psro(ops, p);

   std::cout << "epoch  epsro_nashconv  psro_nashconv\n";
   const std::size_t n = std::min(ep.ledger.rows().size(), ps.ledger.rows().size());
   for(std::size_t i = 0; i < n; i += 5) {
      std::cout << ep.ledger.rows()[i].epoch << "  " << ep.ledger.rows()[i].nashconv << "  " << ps.ledger.rows()[i].nashconv << '\n';
   }
   std::cout << "final: " << ep.ledger.back().nashconv << "  " << ps.ledger.back().nashconv << '\n';
}
