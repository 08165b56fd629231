#pragma once

// Umbrella header: the whole library. Individual headers are freestanding
// if a lighter include is wanted; image_io.hpp is the only one that needs
// a link dependency (libpng).

#include "sftip/benchmark.hpp"
#include "sftip/constraints.hpp"
#include "sftip/fft.hpp"
#include "sftip/field.hpp"
#include "sftip/image_io.hpp"
#include "sftip/manifest.hpp"
#include "sftip/masks.hpp"
#include "sftip/metrics.hpp"
#include "sftip/rng.hpp"
#include "sftip/simulate.hpp"
#include "sftip/tip.hpp"
#include "sftip/version.hpp"

