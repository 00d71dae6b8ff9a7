#pragma once

#include "sfb/bounds.hpp"
#include "sfb/ergodic.hpp"
#include "sfb/format.hpp"
#include "sfb/harness.hpp"
#include "sfb/matrix.hpp"
#include "sfb/operators.hpp"
#include "sfb/oracle.hpp"
#include "sfb/point.hpp"
#include "sfb/problem.hpp"
#include "sfb/random.hpp"
#include "sfb/schedule.hpp"
#include "sfb/solver.hpp"
#include "sfb/trajectory.hpp"
#include "sfb/version.hpp"
