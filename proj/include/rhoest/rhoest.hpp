#pragma once

#include "rhoest/numeric.hpp"
#include "rhoest/expfam.hpp"
#include "rhoest/models.hpp"
#include "rhoest/dataset.hpp"
#include "rhoest/cmaes.hpp"
#include "rhoest/rho.hpp"
#include "rhoest/baselines.hpp"
#include "rhoest/scenarios.hpp"
#include "rhoest/parallel.hpp"
#include "rhoest/risk.hpp"
