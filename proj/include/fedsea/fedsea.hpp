#pragma once

#include "fedsea/adversary.hpp"
#include "fedsea/bounds.hpp"
#include "fedsea/config_io.hpp"
#include "fedsea/core.hpp"
#include "fedsea/engine.hpp"
#include "fedsea/experiment.hpp"
#include "fedsea/fit.hpp"
#include "fedsea/geometry.hpp"
#include "fedsea/losses.hpp"
#include "fedsea/oracles.hpp"
#include "fedsea/output.hpp"
#include "fedsea/parallel.hpp"
#include "fedsea/rng.hpp"
