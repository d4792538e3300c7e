#pragma once

#include "album/face_model.hpp"
#include "album/fusion.hpp"
#include "album/hac.hpp"
#include "album/metrics.hpp"
#include "album/pipeline.hpp"
#include "album/rank_order.hpp"
#include "album/refine.hpp"
#include "album/synth.hpp"
#include "album/tuning.hpp"
#include "album/video_tracks.hpp"
