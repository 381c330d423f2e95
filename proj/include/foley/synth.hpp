#pragma once

#include <random>

#include "foley/audio.hpp"
#include "foley/conditioning.hpp"
#include "foley/config.hpp"
#include "foley/dsp.hpp"
#include "foley/loudness.hpp"
#include "foley/script.hpp"

namespace foley::synth {

/// One training/evaluation item: the clip plus every instruction derived from it.
struct PairedExample {
  AudioBuffer audio;
  dsp::MelSpectrogram spec;
  loudness::LoudnessCurve curve;
  cond::MaskTrack masks;
  cond::RowMatrix features;  // toy_visual_features(script, null)
  int tag = 0;
  EventScript script;
};

/// 1..max_events audible events with uniform classes, plus up to max_silent
/// visible-only objects of classes not already sounding.
EventScript sample_script(std::mt19937_64& rng, const FoleyConfig& cfg);

/// Canonical quadrant of a class in the frame grid, used for event regions.
Region class_quadrant(int class_id, const cond::VisualGrid& grid);

// Throws std::invalid_argument on invalid timing, gain or class.
void validate_script(const EventScript& script, const FoleyConfig& cfg);

/// Sum of sines at the class fundamentals with envelope and 10 ms cosine ramps, clipped to [-1, 1].
AudioBuffer render_audio(const EventScript& script, double sample_rate, const SynthConfig& synth);

/// Per-frame union of the audible events' regions.
cond::MaskTrack event_masks(const EventScript& script, const cond::VisualGrid& grid);

/// Class of the audible event with the largest gain * duration (lowest index on ties).
int dominant_tag(const EventScript& script);

dsp::FilterBank make_filterbank(const FoleyConfig& cfg);
dsp::MelSpectrogram analyze(const AudioBuffer& audio, const FoleyConfig& cfg, const dsp::FilterBank& fb);

/// Builds the example around a given waveform (rendered or read back from disk).
PairedExample example_from_audio(const EventScript& script, AudioBuffer audio, const FoleyConfig& cfg,
                                 const dsp::FilterBank& fb);

PairedExample generate_clip(const EventScript& script, const FoleyConfig& cfg, const dsp::FilterBank& fb);

/// Conditions an example provides: tag, visual (full + masked features) and curve.
cond::ConditionSet conditions_for(const PairedExample& ex, const cond::VisualGrid& grid);

}  // namespace foley::synth
