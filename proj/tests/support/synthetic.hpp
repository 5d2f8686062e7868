#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "periocular/eval.hpp"
#include "periocular/image.hpp"
#include "periocular/imgproc.hpp"

namespace synth {

namespace fs = std::filesystem;
using periocular::Expression;
using periocular::Image;
using periocular::LandmarkSet;
using periocular::Point;

/// 68 landmarks whose eye points are regular hexagons around the two
/// centres; the remaining points sit on an arbitrary face-like ring.
LandmarkSet landmarks_for_eyes(Point right_center, Point left_center, double eye_radius = 8.0);

void write_landmarks(const LandmarkSet& lm, const fs::path& path);

/// 0.5 * (1 + cos(2 pi f (x cos t + y sin t) + phase)) scaled into
/// [offset, offset + amplitude].
Image sinusoid(int width, int height, double frequency, double theta_deg, double phase = 0.0,
               double amplitude = 200.0, double offset = 20.0);

struct TextureCorpusSpec {
  int subjects = 20;
  int frames_per_sequence = 4;
  // Labels cycled over subjects; the first frame is always the neutral texture.
  std::vector<Expression> labels{Expression::kHappy, Expression::kSad, Expression::kSurprise};
  int width = 320;
  int height = 240;
  double frequency = 0.125;  // cycles/px after normalization
  std::uint64_t seed = 7;
};

/// Orientation of the texture rendered for each class. All lie in [0, 90]
/// so no class turns into another under a horizontal mirror.
double texture_orientation(Expression e);

/// Writes subject folders S001.. each with one labeled sequence "001" of
/// frames_per_sequence PNGs, their landmark files and a label.txt. Each
/// subject gets its own eye placement, scale, small roll and texture phase.
void write_texture_corpus(const fs::path& root, const TextureCorpusSpec& spec);

/// Fresh empty directory under the system temp dir.
fs::path temp_dir(const std::string& tag);

}  // namespace synth
