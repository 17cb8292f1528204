#pragma once

#include "experiments/acceptance.hpp"
#include "experiments/common.hpp"
#include "experiments/figure.hpp"
#include "experiments/suites.hpp"
#include "experiments/theorems.hpp"
