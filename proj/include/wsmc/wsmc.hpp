#pragma once

#include "wsmc/error.hpp"
#include "wsmc/gridsim.hpp"
#include "wsmc/kernel.hpp"
#include "wsmc/material_io.hpp"
#include "wsmc/mesh.hpp"
#include "wsmc/particles.hpp"
#include "wsmc/patterns.hpp"
#include "wsmc/reference.hpp"
#include "wsmc/rng.hpp"
#include "wsmc/xsdata.hpp"
