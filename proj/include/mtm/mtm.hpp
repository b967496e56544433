#pragma once

#include "errors.hpp"
#include "quadrature.hpp"
#include "models.hpp"
#include "moments.hpp"
#include "matrix2.hpp"
#include "estimators.hpp"
#include "asymptotics.hpp"
#include "simulation.hpp"
#include "gof.hpp"
