#pragma once

#include "lqrl/envs.hpp"
#include "lqrl/harness.hpp"
#include "lqrl/mlp.hpp"
#include "lqrl/numerics.hpp"
#include "lqrl/pg.hpp"
#include "lqrl/qlearn.hpp"
#include "lqrl/sysid.hpp"
