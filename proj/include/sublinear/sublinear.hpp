// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sublinear/core.hpp"
#include "sublinear/rng.hpp"
#include "sublinear/quadrature.hpp"
#include "sublinear/measures.hpp"
#include "sublinear/model.hpp"
#include "sublinear/functionals.hpp"
#include "sublinear/jko.hpp"
#include "sublinear/steady.hpp"
#include "sublinear/reference.hpp"
