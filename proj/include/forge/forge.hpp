#pragma once

// Convenience umbrella: pulls in every public module. Include the individual
// headers instead when compile time matters.

#include "forge/config.hpp"
#include "forge/entropy.hpp"
#include "forge/error.hpp"
#include "forge/eval.hpp"
#include "forge/filter.hpp"
#include "forge/geometry.hpp"
#include "forge/image.hpp"
#include "forge/ingest.hpp"
#include "forge/log.hpp"
#include "forge/manifest_io.hpp"
#include "forge/overlay.hpp"
#include "forge/parallel.hpp"
#include "forge/pipeline.hpp"
#include "forge/png.hpp"
#include "forge/prompts.hpp"
#include "forge/resolution.hpp"
#include "forge/rlvr.hpp"
#include "forge/rng.hpp"
#include "forge/sample.hpp"
#include "forge/simulate.hpp"
