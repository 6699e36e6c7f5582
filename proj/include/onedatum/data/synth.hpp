// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "onedatum/data/datasets.hpp"
#include "onedatum/audioforge/audioforge.hpp"
#include "onedatum/patchforge/patchforge.hpp"

namespace onedatum::data {

/// "synth10": a procedural ten-class image task (hue band + grating
/// orientation per class, random phase/brightness/noise). Fully
/// deterministic under the seed; exists so that every pipeline can be
/// exercised end to end without downloading anything.
LabeledImages make_synth_images(std::int64_t n, std::uint64_t seed,
                                int side = 32);

/// Deterministic dense structured image (smooth color fields, oriented
/// texture at several scales). Serves as an offline stand-in for a
/// large photographic source; addressable from the CLI as
/// "synth:WxH:seed".
patchforge::SourceImage make_synth_source(int height, int width,
                                          std::uint64_t seed);

/// Ten-class procedural audio task: class = tone pattern (base
/// frequency + modulation), 1 s clips at 16 kHz.
LabeledClips make_synth_clips(std::int64_t n, std::uint64_t seed);

/// Deterministic long-form recording (wandering tones over colored
/// noise); offline stand-in for a real source clip, addressable from
/// the CLI as "synthaudio:SECONDS:seed".
audioforge::SourceClip make_synth_recording(double seconds,
                                            std::uint64_t seed);

}  // namespace onedatum::data
