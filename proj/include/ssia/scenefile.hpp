#pragma once

#include <string>

#include "ssia/world.hpp"

namespace ssia {

// Plain-text scene format, one record per line:
//   room W H
//   agent X Y
//   floor SEED R G B
//   noise LIGHT_JITTER PIXEL_SIGMA
//   wall X0 Y0 X1 Y1
//   object SHAPE X Y SX SY HEIGHT R G B TEXSEED MASS FMIN STATIC
// Floats are printed with enough digits for an exact round trip.
std::string scene_to_text(const SceneSpec& scene);
SceneSpec scene_from_text(const std::string& text);

void save_scene(const std::string& path, const SceneSpec& scene);
SceneSpec load_scene(const std::string& path);

}  // namespace ssia
