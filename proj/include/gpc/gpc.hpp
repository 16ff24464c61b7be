#pragma once

#include "gpc/beamformer.hpp"
#include "gpc/config.hpp"
#include "gpc/error.hpp"
#include "gpc/linalg.hpp"
#include "gpc/metrics.hpp"
#include "gpc/pipeline.hpp"
#include "gpc/simulate.hpp"
#include "gpc/spatial.hpp"
#include "gpc/stft.hpp"
#include "gpc/tracker.hpp"
#include "gpc/wav.hpp"
