#pragma once

#include "prnu/config.hpp"
#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/harness.hpp"
#include "prnu/image.hpp"
#include "prnu/image_io.hpp"
#include "prnu/parallel.hpp"
#include "prnu/pattern_io.hpp"
#include "prnu/plane.hpp"
#include "prnu/report.hpp"
#include "prnu/rng.hpp"
#include "prnu/spoof.hpp"
#include "prnu/synth.hpp"
#include "prnu/wavelet.hpp"
