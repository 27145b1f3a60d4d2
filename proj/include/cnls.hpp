#pragma once

#include "cnls/error.hpp"
#include "cnls/model.hpp"
#include "cnls/greens.hpp"
#include "cnls/operator.hpp"
#include "cnls/hypotheses.hpp"
#include "cnls/solver.hpp"
#include "cnls/oracle.hpp"
#include "cnls/continuation.hpp"
#include "cnls/config.hpp"
