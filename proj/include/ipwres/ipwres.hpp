#pragma once

// Claims-reserving by inverse probability weighting: granular data model,
// piecewise-exponential delay/intensity models, Horvitz-Thompson reserve
// estimators, run-off triangle baselines and a seeded portfolio simulator.

#include "ipwres/csv.hpp"
#include "ipwres/estimators.hpp"
#include "ipwres/inclusion.hpp"
#include "ipwres/io.hpp"
#include "ipwres/pem.hpp"
#include "ipwres/pem_fit.hpp"
#include "ipwres/portfolio.hpp"
#include "ipwres/report.hpp"
#include "ipwres/rng.hpp"
#include "ipwres/simulate.hpp"
#include "ipwres/stats.hpp"
#include "ipwres/time_grid.hpp"
#include "ipwres/triangle.hpp"
