#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "periocular/image.hpp"

namespace periocular {

inline constexpr int kLandmarkCount = 68;
inline constexpr double kTargetInterocular = 100.0;

/// The 68-point facial annotation of one frame.
class LandmarkSet {
 public:
  /// Throws ArgumentError when a coordinate is not finite.
  explicit LandmarkSet(const std::array<Point, kLandmarkCount>& points);

  /// 1-based index, as in the usual 68-point charts.
  const Point& point(int one_based) const { return points_.at(static_cast<std::size_t>(one_based - 1)); }
  const std::array<Point, kLandmarkCount>& points() const { return points_; }

 private:
  std::array<Point, kLandmarkCount> points_;
};

/// Parses a 68-line "x y" text file (the CK+ AAM landmark layout).
LandmarkSet load_landmarks(const std::filesystem::path& path);

/// Eye centers of one frame. `right_center` is the subject's right eye
/// (points 37-42), which lies on the image left in a frontal view.
struct EyeGeometry {
  Point left_center;
  Point right_center;
  double interocular = 0.0;
  double roll_angle = 0.0;  // degrees, in (-90, 90]

  Point midpoint() const {
    return {(left_center.x + right_center.x) / 2.0, (left_center.y + right_center.y) / 2.0};
  }
};

/// Builds the geometry record for a pair of eye centers; throws GeometryError
/// when they coincide.
EyeGeometry make_eye_geometry(Point right_center, Point left_center);

EyeGeometry compute_eye_geometry(const LandmarkSet& landmarks);

/// Similarity transform used by normalize_geometry: scale about the origin,
/// then rotate by `-roll` degrees about the scaled eye midpoint.
struct SimilarityTransform {
  double scale = 1.0;
  double roll_deg = 0.0;
  Point pivot;  // in output coordinates

  Point forward(Point p) const;
  Point inverse(Point p) const;
};

SimilarityTransform normalization_transform(const EyeGeometry& geom);

struct NormalizedFrame {
  Image image;
  EyeGeometry geometry;
};

/// Rescales to a 100 px eye distance and levels the eye line. Bicubic
/// sampling; samples falling outside the source are 0.
NormalizedFrame normalize_geometry(const Image& img, const EyeGeometry& geom);

enum class RoiVariant { kSmall, kLarge };

struct RoiSpec {
  RoiVariant variant = RoiVariant::kLarge;
  int height = 96;
  int width = 224;
  int block_size = 16;
  int above = 64;  // rows above the eye line
  int below = 32;

  /// block_size must be 16 or 32.
  static RoiSpec make(RoiVariant variant, int block_size);

  int block_rows() const { return height / block_size; }
  int block_cols() const { return width / block_size; }
  int block_count() const { return block_rows() * block_cols(); }
};

const char* to_string(RoiVariant v);
RoiVariant parse_roi_variant(const std::string& name);

/// Crops `spec.width x spec.height` around the eye midpoint of an already
/// normalized frame; out-of-frame pixels are 0.
Image extract_roi(const Image& img, const EyeGeometry& geom, const RoiSpec& spec);

struct ClaheParams {
  double clip_limit = 2.0;
  int tile = 32;
};

/// Contrast-limited adaptive histogram equalization. Tiles of `tile` pixels
/// (edge tiles may be smaller), histogram clipping at
/// `clip_limit * tile_pixels / 256` with uniform redistribution, and bilinear
/// blending of the per-tile mappings between tile centers.
Image clahe(const Image& img, double clip_limit, int tile);
inline Image clahe(const Image& img, const ClaheParams& p) { return clahe(img, p.clip_limit, p.tile); }

struct BlockGrid {
  int rows = 0;
  int cols = 0;
  int block_size = 0;
  std::vector<Image> blocks;  // row-major

  const Image& block(int r, int c) const { return blocks[static_cast<std::size_t>(r * cols + c)]; }
};

BlockGrid partition_blocks(const Image& img, int block_size);
Image reassemble_blocks(const BlockGrid& grid);

Image mirror_horizontal(const Image& img);

}  // namespace periocular
