#pragma once

#include "streamfuse/calib.hpp"
#include "streamfuse/detection.hpp"
#include "streamfuse/detector.hpp"
#include "streamfuse/error.hpp"
#include "streamfuse/fusion.hpp"
#include "streamfuse/grid.hpp"
#include "streamfuse/image_bev.hpp"
#include "streamfuse/io.hpp"
#include "streamfuse/pillar.hpp"
#include "streamfuse/pipeline.hpp"
#include "streamfuse/rng.hpp"
#include "streamfuse/scene_gen.hpp"
#include "streamfuse/slicing.hpp"
#include "streamfuse/stream_sim.hpp"
