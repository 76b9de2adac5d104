#pragma once

#include "rppg/emit.hpp"
#include "rppg/error.hpp"
#include "rppg/eval.hpp"
#include "rppg/filter.hpp"
#include "rppg/ica.hpp"
#include "rppg/ingest.hpp"
#include "rppg/pipeline.hpp"
#include "rppg/pulse.hpp"
#include "rppg/rectify.hpp"
#include "rppg/spectrum.hpp"
#include "rppg/synth.hpp"
#include "rppg/trace.hpp"
#include "rppg/track.hpp"
#include "rppg/types.hpp"
