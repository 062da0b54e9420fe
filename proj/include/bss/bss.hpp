#pragma once

#include "bss/error.hpp"
#include "bss/experiment.hpp"
#include "bss/factor.hpp"
#include "bss/fredmd.hpp"
#include "bss/gds.hpp"
#include "bss/greedy.hpp"
#include "bss/harness.hpp"
#include "bss/l1.hpp"
#include "bss/linalg.hpp"
#include "bss/oracle_check.hpp"
#include "bss/rng.hpp"
#include "bss/selection.hpp"
#include "bss/simulation.hpp"
#include "bss/smc.hpp"
#include "bss/subset_model.hpp"
#include "bss/vs.hpp"
