#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "ring.hpp"
#include "spectral.hpp"
#include "galerkin.hpp"
#include "hopf.hpp"
#include "dop853.hpp"
#include "riccati.hpp"
#include "continuation.hpp"
#include "config.hpp"
#include "io.hpp"
