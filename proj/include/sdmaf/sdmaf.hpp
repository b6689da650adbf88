#pragma once

#include "sdmaf/chisq.hpp"
#include "sdmaf/io_util.hpp"
#include "sdmaf/manifest.hpp"
#include "sdmaf/pipeline.hpp"
#include "sdmaf/regions.hpp"
#include "sdmaf/rng.hpp"
#include "sdmaf/scan.hpp"
#include "sdmaf/simulate.hpp"
#include "sdmaf/stats.hpp"
#include "sdmaf/summaries.hpp"
#include "sdmaf/types.hpp"
#include "sdmaf/vcf.hpp"
