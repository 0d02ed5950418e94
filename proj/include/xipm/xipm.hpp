#pragma once

#include "xipm/core.hpp"
#include "xipm/qp_model.hpp"
#include "xipm/kkt.hpp"
#include "xipm/extrapolation.hpp"
#include "xipm/solver.hpp"
#include "xipm/qps.hpp"
#include "xipm/random_qp.hpp"
#include "xipm/bench.hpp"
