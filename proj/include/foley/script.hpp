#pragma once

#include <vector>

namespace foley::synth {

enum class Envelope { kConstant, kRise, kFall };

/// Rectangle of cells in the H x W frame grid.
struct Region {
  int row = 0;
  int col = 0;
  int height = 1;
  int width = 1;
};

struct Event {
  int class_id = 0;
  double onset = 0.0;     // seconds
  double duration = 0.0;  // seconds
  double gain = 1.0;      // (0, 1]
  Region region;
  Envelope envelope = Envelope::kConstant;
  // Visible in the frame grid but never rendered into the audio.
  bool silent = false;

  double end() const { return onset + duration; }
};

/// A toy "video": timed tone events, each tied to a region of the frame grid.
struct EventScript {
  double clip_seconds = 2.0;
  std::vector<Event> events;
};

}  // namespace foley::synth
