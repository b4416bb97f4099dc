#pragma once

// Umbrella header.

#include "dci/descriptor.hpp"
#include "dci/detector.hpp"
#include "dci/differential.hpp"
#include "dci/evaluation.hpp"
#include "dci/image.hpp"
#include "dci/io.hpp"
#include "dci/keypoint.hpp"
#include "dci/matching.hpp"
#include "dci/patch.hpp"
#include "dci/pipeline.hpp"
