#pragma once

#include "gpelab/error.hpp"
#include "gpelab/grid.hpp"
#include "gpelab/field.hpp"
#include "gpelab/spectral.hpp"
#include "gpelab/gpe.hpp"
#include "gpelab/hydro.hpp"
#include "gpelab/helmholtz.hpp"
#include "gpelab/fastwave.hpp"
#include "gpelab/limits.hpp"
#include "gpelab/modenergy.hpp"
