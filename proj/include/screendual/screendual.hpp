#pragma once

#include "screendual/blunt.hpp"
#include "screendual/constraints.hpp"
#include "screendual/dual.hpp"
#include "screendual/fbp_solver.hpp"
#include "screendual/foliation.hpp"
#include "screendual/free_boundary.hpp"
#include "screendual/grid.hpp"
#include "screendual/legendre.hpp"
#include "screendual/market.hpp"
#include "screendual/model.hpp"
#include "screendual/poisson.hpp"
#include "screendual/primal.hpp"
#include "screendual/region.hpp"
