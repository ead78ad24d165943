#pragma once

#include "relight/attention.hpp"
#include "relight/config.hpp"
#include "relight/degrade.hpp"
#include "relight/errors.hpp"
#include "relight/image.hpp"
#include "relight/image_io.hpp"
#include "relight/kernels.hpp"
#include "relight/metrics.hpp"
#include "relight/operators.hpp"
#include "relight/retinex.hpp"
#include "relight/rng.hpp"
#include "relight/selfsup.hpp"
#include "relight/solver.hpp"
