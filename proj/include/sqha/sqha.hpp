#pragma once

// Umbrella header for the numerical core (the io/ layer is included separately).

#include "sqha/case_studies.hpp"
#include "sqha/constants.hpp"
#include "sqha/density.hpp"
#include "sqha/dynamics.hpp"
#include "sqha/error.hpp"
#include "sqha/field.hpp"
#include "sqha/grid.hpp"
#include "sqha/noise.hpp"
#include "sqha/numerics.hpp"
#include "sqha/potentials_states.hpp"
#include "sqha/quantum_potential.hpp"
#include "sqha/scales.hpp"
