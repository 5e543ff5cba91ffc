#pragma once

#include "splat/core.hpp"
#include "splat/gir.hpp"
#include "splat/io/files.hpp"
#include "splat/io/manifest.hpp"
#include "splat/io/ply.hpp"
#include "splat/losses.hpp"
#include "splat/obb.hpp"
#include "splat/pipeline.hpp"
#include "splat/rasterizer.hpp"
#include "splat/redundancy.hpp"
#include "splat/synth.hpp"
