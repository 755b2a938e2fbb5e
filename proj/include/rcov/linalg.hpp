#pragma once

#include "rcov/linalg/decompositions.hpp"
#include "rcov/linalg/random.hpp"
#include "rcov/linalg/types.hpp"
