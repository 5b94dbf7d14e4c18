// Umbrella header.
#pragma once

#include "spectro/classifier.hpp"
#include "spectro/core.hpp"
#include "spectro/evaluation.hpp"
#include "spectro/illumination.hpp"
#include "spectro/io.hpp"
#include "spectro/pipeline.hpp"
#include "spectro/radiometric.hpp"
#include "spectro/ratio_estimation.hpp"
#include "spectro/rng.hpp"
#include "spectro/savitzky_golay.hpp"
#include "spectro/synthetic.hpp"
