#pragma once

#include "error.hpp"
#include "phase_point.hpp"
#include "poly.hpp"
#include "discrete_map.hpp"
#include "flows.hpp"
#include "observable.hpp"
#include "sampler.hpp"
#include "spectral.hpp"
#include "plan.hpp"
#include "averaging.hpp"
#include "discrete.hpp"
#include "diagnostics.hpp"
#include "serialization.hpp"
#include "runner.hpp"
