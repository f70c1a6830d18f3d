#pragma once

// Umbrella header: weighted structures, the aggregation logic, its locality
// transformations and the local-access learners.

#include "fowa/algebra.hpp"
#include "fowa/analyze.hpp"
#include "fowa/cldecomp.hpp"
#include "fowa/clterm.hpp"
#include "fowa/error.hpp"
#include "fowa/eval.hpp"
#include "fowa/expr.hpp"
#include "fowa/gaifman.hpp"
#include "fowa/generator.hpp"
#include "fowa/io.hpp"
#include "fowa/learning.hpp"
#include "fowa/locality.hpp"
#include "fowa/parser.hpp"
#include "fowa/rng.hpp"
#include "fowa/structure.hpp"
