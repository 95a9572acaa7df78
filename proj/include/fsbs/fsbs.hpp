#pragma once

// Umbrella header: functional change-point detection via seeded binary
// segmentation, plus the simulation and evaluation harness around it.

#include "detect.hpp"
#include "estimator.hpp"
#include "kernels.hpp"
#include "metrics.hpp"
#include "panel.hpp"
#include "rng.hpp"
#include "seeded.hpp"
#include "simulate.hpp"
#include "threading.hpp"
#include "tuning.hpp"
