#pragma once

#include "bai/allocation.hpp"
#include "bai/bounds.hpp"
#include "bai/config.hpp"
#include "bai/errors.hpp"
#include "bai/estimators.hpp"
#include "bai/harness.hpp"
#include "bai/model.hpp"
#include "bai/nuisance.hpp"
#include "bai/random.hpp"
#include "bai/strategies.hpp"
