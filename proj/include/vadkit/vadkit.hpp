#pragma once

#include "vadkit/audio_io.hpp"
#include "vadkit/config.hpp"
#include "vadkit/corpus.hpp"
#include "vadkit/error.hpp"
#include "vadkit/eval.hpp"
#include "vadkit/filter_design.hpp"
#include "vadkit/json_io.hpp"
#include "vadkit/mixer.hpp"
#include "vadkit/repro.hpp"
#include "vadkit/spectro.hpp"
#include "vadkit/vad.hpp"
