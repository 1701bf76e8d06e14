// Umbrella header.

#pragma once

#include "logcon/certificate.hpp"
#include "logcon/density.hpp"
#include "logcon/estimators.hpp"
#include "logcon/fit.hpp"
#include "logcon/gauss.hpp"
#include "logcon/io.hpp"
#include "logcon/kernels.hpp"
#include "logcon/piecewise.hpp"
#include "logcon/rng.hpp"
#include "logcon/sample.hpp"
#include "logcon/studies.hpp"
