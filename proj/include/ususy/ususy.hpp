#pragma once

#include "types.hpp"
#include "operators.hpp"
#include "parallel.hpp"
#include "spectral.hpp"
#include "reduction.hpp"
#include "spectrum.hpp"
#include "models.hpp"
#include "genrabi.hpp"
#include "tc.hpp"
#include "dicke.hpp"
#include "nested.hpp"
#include "config.hpp"
