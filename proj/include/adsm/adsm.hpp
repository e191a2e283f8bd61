#pragma once

// Umbrella header for the full ADSM pipeline.

#include "adsm/audio.hpp"
#include "adsm/corpus.hpp"
#include "adsm/demo.hpp"
#include "adsm/embed.hpp"
#include "adsm/error.hpp"
#include "adsm/eval.hpp"
#include "adsm/features.hpp"
#include "adsm/io.hpp"
#include "adsm/log.hpp"
#include "adsm/matrix.hpp"
#include "adsm/parallel.hpp"
#include "adsm/rng.hpp"
#include "adsm/run_config.hpp"
#include "adsm/tagger.hpp"
#include "adsm/version.hpp"
#include "adsm/vocab.hpp"
