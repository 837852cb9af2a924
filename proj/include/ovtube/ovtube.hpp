#pragma once

#include "ovtube/error.hpp"
#include "ovtube/rng.hpp"
#include "ovtube/qp.hpp"
#include "ovtube/geometry.hpp"
#include "ovtube/knots.hpp"
#include "ovtube/pathfinder.hpp"
#include "ovtube/trajopt.hpp"
#include "ovtube/tube.hpp"
#include "ovtube/mpcsim.hpp"
#include "ovtube/scenario_io.hpp"
