#pragma once

#include "epsro/config.hpp"
#include "epsro/experiment.hpp"
#include "epsro/game_gen.hpp"
#include "epsro/game_ops.hpp"
#include "epsro/kuhn.hpp"
#include "epsro/ledger.hpp"
#include "epsro/lp.hpp"
#include "epsro/matrix_game.hpp"
#include "epsro/meta_opt.hpp"
#include "epsro/metrics.hpp"
#include "epsro/payoff_table.hpp"
#include "epsro/psro.hpp"
#include "epsro/restricted_set.hpp"
#include "epsro/rng.hpp"
#include "epsro/strategy.hpp"
#include "epsro/svg.hpp"
#include "epsro/types.hpp"
#include "epsro/urr_solver.hpp"
#include "epsro/warm_start.hpp"
