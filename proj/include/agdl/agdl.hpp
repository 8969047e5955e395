#pragma once

#include "agdl/base_codec.hpp"
#include "agdl/bench.hpp"
#include "agdl/container.hpp"
#include "agdl/critical_mask.hpp"
#include "agdl/cs_refine.hpp"
#include "agdl/errors.hpp"
#include "agdl/metrics.hpp"
#include "agdl/raster.hpp"
#include "agdl/soft_decoder.hpp"
