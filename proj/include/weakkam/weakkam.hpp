#pragma once

// Umbrella header for the whole toolkit.

#include "types.hpp"
#include "classical.hpp"
#include "mather.hpp"
#include "model.hpp"
#include "implicit.hpp"
#include "discounted.hpp"
#include "limit.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "cli.hpp"
