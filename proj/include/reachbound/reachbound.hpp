#pragma once

#include "reachbound/analysis.hpp"
#include "reachbound/io.hpp"
#include "reachbound/model.hpp"
#include "reachbound/montecarlo.hpp"
#include "reachbound/platoon.hpp"
#include "reachbound/sdp.hpp"
#include "reachbound/synthesis.hpp"
#include "reachbound/version.hpp"
