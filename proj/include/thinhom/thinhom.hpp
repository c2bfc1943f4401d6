// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "thinhom/error.hpp"
#include "thinhom/quadrature.hpp"
#include "thinhom/geometry_mesh.hpp"
#include "thinhom/coefficients.hpp"
#include "thinhom/fem_assembly.hpp"
#include "thinhom/sparse_linalg.hpp"
#include "thinhom/cell_solver.hpp"
#include "thinhom/upscaling.hpp"
#include "thinhom/macro_solver.hpp"
#include "thinhom/two_scale.hpp"
#include "thinhom/micro_dns.hpp"
#include "thinhom/sigma_diagnostics.hpp"
#include "thinhom/vtk.hpp"
#include "thinhom/config.hpp"
#include "thinhom/pipeline.hpp"
