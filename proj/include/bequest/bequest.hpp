#pragma once

// Umbrella header for the bequest-goal solver library.

#include "bequest/analysis.hpp"
#include "bequest/dual.hpp"
#include "bequest/errors.hpp"
#include "bequest/io.hpp"
#include "bequest/mc.hpp"
#include "bequest/model.hpp"
#include "bequest/rng.hpp"
#include "bequest/rootfind.hpp"
#include "bequest/solve.hpp"
#include "bequest/verify.hpp"
