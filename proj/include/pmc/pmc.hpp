#pragma once

#include "pmc/config.hpp"
#include "pmc/diagnostics.hpp"
#include "pmc/evolution.hpp"
#include "pmc/expression.hpp"
#include "pmc/fields.hpp"
#include "pmc/l1_scheme.hpp"
#include "pmc/nonlinearity.hpp"
#include "pmc/operators.hpp"
#include "pmc/radial.hpp"
#include "pmc/solver.hpp"
