#include "periocular/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "periocular/error.hpp"

namespace periocular {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMinScale = 0.05;
constexpr double kMaxScale = 20.0;

// Right eye (subject's) is 37-42, left eye 43-48, both 1-based.
constexpr int kRightEyeFirst = 37;
constexpr int kLeftEyeFirst = 43;
constexpr int kEyePoints = 6;

Point centroid(const LandmarkSet& lm, int first) {
  Point c;
  for (int i = 0; i < kEyePoints; ++i) {
    c.x += lm.point(first + i).x;
    c.y += lm.point(first + i).y;
  }
  return {c.x / kEyePoints, c.y / kEyePoints};
}

// Keys cubic convolution kernel, a = -0.5.
double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) {
    return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  }
  if (t < 2.0) {
    return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  }
  return 0.0;
}

// Bicubic sample with replicated borders; callers decide what lies outside
// the support.
double sample_bicubic(const Image& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int w = img.width();
  const int h = img.height();

  double wx[4];
  double wy[4];
  for (int k = 0; k < 4; ++k) {
    wx[k] = cubic_weight(fx - (k - 1));
    wy[k] = cubic_weight(fy - (k - 1));
  }
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (wy[j] == 0.0) continue;
    const int yy = std::clamp(y0 + j - 1, 0, h - 1);
    double row = 0.0;
    for (int i = 0; i < 4; ++i) {
      if (wx[i] == 0.0) continue;
      const int xx = std::clamp(x0 + i - 1, 0, w - 1);
      row += wx[i] * img.at(xx, yy);
    }
    acc += wy[j] * row;
  }
  return std::clamp(acc, 0.0, 255.0);
}

double wrap_roll(double deg) {
  if (deg > 90.0) deg -= 180.0;
  if (deg <= -90.0) deg += 180.0;
  return deg;
}

}  // namespace

LandmarkSet::LandmarkSet(const std::array<Point, kLandmarkCount>& points) : points_(points) {
  for (const Point& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ArgumentError("landmark coordinate is not finite");
    }
  }
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read landmark file: " + path.string());
  }
  std::array<Point, kLandmarkCount> pts{};
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double x = 0.0;
    double y = 0.0;
    if (!(ls >> x)) {
      continue;  // blank line
    }
    if (!(ls >> y)) {
      throw FormatError("malformed landmark line in " + path.string() + ": '" + line + "'");
    }
    if (count == kLandmarkCount) {
      throw FormatError("more than 68 landmarks in " + path.string());
    }
    pts[static_cast<std::size_t>(count++)] = {x, y};
  }
  if (count != kLandmarkCount) {
    throw FormatError("expected 68 landmarks, found " + std::to_string(count) + " in " +
                      path.string());
  }
  try {
    return LandmarkSet(pts);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string(e.what()) + " in " + path.string());
  }
}

EyeGeometry make_eye_geometry(Point right_center, Point left_center) {
  const double dx = left_center.x - right_center.x;
  const double dy = left_center.y - right_center.y;
  const double dist = std::hypot(dx, dy);
  if (!(dist > 0.0)) {
    throw GeometryError("degenerate eye geometry: eye centers coincide");
  }
  EyeGeometry g;
  g.left_center = left_center;
  g.right_center = right_center;
  g.interocular = dist;
  g.roll_angle = wrap_roll(std::atan2(dy, dx) / kDegToRad);
  return g;
}

EyeGeometry compute_eye_geometry(const LandmarkSet& landmarks) {
  return make_eye_geometry(centroid(landmarks, kRightEyeFirst), centroid(landmarks, kLeftEyeFirst));
}

Point SimilarityTransform::forward(Point p) const {
  const double c = std::cos(roll_deg * kDegToRad);
  const double s = std::sin(roll_deg * kDegToRad);
  const double vx = scale * p.x - pivot.x;
  const double vy = scale * p.y - pivot.y;
  return {vx * c + vy * s + pivot.x, -vx * s + vy * c + pivot.y};
}

Point SimilarityTransform::inverse(Point p) const {
  const double c = std::cos(roll_deg * kDegToRad);
  const double s = std::sin(roll_deg * kDegToRad);
  const double vx = p.x - pivot.x;
  const double vy = p.y - pivot.y;
  return {(vx * c - vy * s + pivot.x) / scale, (vx * s + vy * c + pivot.y) / scale};
}

SimilarityTransform normalization_transform(const EyeGeometry& geom) {
  if (!(geom.interocular > 0.0)) {
    throw GeometryError("interocular distance must be positive");
  }
  SimilarityTransform t;
  t.scale = kTargetInterocular / geom.interocular;
  if (t.scale < kMinScale || t.scale > kMaxScale) {
    throw GeometryError("implausible eye geometry: scale factor " + std::to_string(t.scale) +
                        " outside [0.05, 20]");
  }
  t.roll_deg = geom.roll_angle;
  const Point mid = geom.midpoint();
  t.pivot = {t.scale * mid.x, t.scale * mid.y};
  return t;
}

NormalizedFrame normalize_geometry(const Image& img, const EyeGeometry& geom) {
  const SimilarityTransform t = normalization_transform(geom);
  const int out_w = std::max(1, static_cast<int>(std::lround(img.width() * t.scale)));
  const int out_h = std::max(1, static_cast<int>(std::lround(img.height() * t.scale)));

  constexpr double kEps = 1e-9;
  const double max_x = img.width() - 1 + kEps;
  const double max_y = img.height() - 1 + kEps;
  std::vector<double> out(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h), 0.0);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Point src = t.inverse({static_cast<double>(x), static_cast<double>(y)});
      if (src.x < -kEps || src.y < -kEps || src.x > max_x || src.y > max_y) {
        continue;
      }
      out[static_cast<std::size_t>(y) * out_w + x] = sample_bicubic(img, src.x, src.y);
    }
  }

  NormalizedFrame result{Image(out_w, out_h, std::move(out)), {}};
  result.geometry = make_eye_geometry(t.forward(geom.right_center), t.forward(geom.left_center));
  return result;
}

RoiSpec RoiSpec::make(RoiVariant variant, int block_size) {
  if (block_size != 16 && block_size != 32) {
    throw ArgumentError("block size must be 16 or 32, got " + std::to_string(block_size));
  }
  RoiSpec s;
  s.variant = variant;
  s.width = 224;
  s.block_size = block_size;
  if (variant == RoiVariant::kSmall) {
    s.height = 64;
    s.above = 32;
    s.below = 32;
  } else {
    s.height = 96;
    s.above = 64;
    s.below = 32;
  }
  return s;
}

const char* to_string(RoiVariant v) { return v == RoiVariant::kSmall ? "small" : "large"; }

RoiVariant parse_roi_variant(const std::string& name) {
  if (name == "small") return RoiVariant::kSmall;
  if (name == "large") return RoiVariant::kLarge;
  throw ConfigError("unknown ROI variant '" + name + "' (expected small or large)");
}

Image extract_roi(const Image& img, const EyeGeometry& geom, const RoiSpec& spec) {
  const Point mid = geom.midpoint();
  const int left = static_cast<int>(std::floor(mid.x - spec.width / 2.0 + 0.5));
  const int top = static_cast<int>(std::floor(mid.y - spec.above + 0.5));
  Image roi(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y) {
    const int sy = top + y;
    if (sy < 0 || sy >= img.height()) continue;
    for (int x = 0; x < spec.width; ++x) {
      const int sx = left + x;
      if (sx < 0 || sx >= img.width()) continue;
      roi.set(x, y, img.at(sx, sy));
    }
  }
  return roi;
}

Image clahe(const Image& img, double clip_limit, int tile) {
  if (clip_limit < 1.0) {
    throw ArgumentError("CLAHE clip limit must be >= 1");
  }
  if (tile < 1) {
    throw ArgumentError("CLAHE tile size must be positive");
  }
  constexpr int kBins = 256;
  const int w = img.width();
  const int h = img.height();
  const int tiles_x = (w + tile - 1) / tile;
  const int tiles_y = (h + tile - 1) / tile;

  auto level = [](double v) { return std::clamp(static_cast<int>(std::lround(v)), 0, kBins - 1); };

  // One mapping per tile.
  std::vector<std::array<double, kBins>> luts(static_cast<std::size_t>(tiles_x * tiles_y));
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const int x0 = tx * tile;
      const int y0 = ty * tile;
      const int x1 = std::min(w, x0 + tile);
      const int y1 = std::min(h, y0 + tile);
      std::array<double, kBins> hist{};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          hist[static_cast<std::size_t>(level(img.at(x, y)))] += 1.0;
        }
      }
      const double n = static_cast<double>((x1 - x0) * (y1 - y0));
      const double clip = clip_limit * n / kBins;
      double excess = 0.0;
      for (double& b : hist) {
        if (b > clip) {
          excess += b - clip;
          b = clip;
        }
      }
      const double share = excess / kBins;
      auto& lut = luts[static_cast<std::size_t>(ty * tiles_x + tx)];
      double cdf = 0.0;
      for (int v = 0; v < kBins; ++v) {
        cdf += hist[static_cast<std::size_t>(v)] + share;
        lut[static_cast<std::size_t>(v)] = std::min(255.0, 255.0 * cdf / n);
      }
    }
  }

  auto center = [tile](int t, int extent) {
    const int start = t * tile;
    const int len = std::min(extent, start + tile) - start;
    return start + len / 2.0 - 0.5;
  };
  // For coordinate p, the two neighbouring tile indices and the weight of
  // the second one.
  auto bracket = [&](double p, int tiles, int extent, int& t0, int& t1, double& wt) {
    if (p <= center(0, extent)) {
      t0 = t1 = 0;
      wt = 0.0;
      return;
    }
    if (p >= center(tiles - 1, extent)) {
      t0 = t1 = tiles - 1;
      wt = 0.0;
      return;
    }
    int t = 0;
    while (center(t + 1, extent) <= p) ++t;
    t0 = t;
    t1 = t + 1;
    const double c0 = center(t0, extent);
    wt = (p - c0) / (center(t1, extent) - c0);
  };

  std::vector<double> out(img.size());
  for (int y = 0; y < h; ++y) {
    int ty0 = 0;
    int ty1 = 0;
    double wy = 0.0;
    bracket(y, tiles_y, h, ty0, ty1, wy);
    for (int x = 0; x < w; ++x) {
      int tx0 = 0;
      int tx1 = 0;
      double wx = 0.0;
      bracket(x, tiles_x, w, tx0, tx1, wx);
      const auto v = static_cast<std::size_t>(level(img.at(x, y)));
      auto lut = [&](int tx, int ty) { return luts[static_cast<std::size_t>(ty * tiles_x + tx)][v]; };
      const double top = (1.0 - wx) * lut(tx0, ty0) + wx * lut(tx1, ty0);
      const double bottom = (1.0 - wx) * lut(tx0, ty1) + wx * lut(tx1, ty1);
      out[static_cast<std::size_t>(y) * w + x] = std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 255.0);
    }
  }
  return Image(w, h, std::move(out));
}

BlockGrid partition_blocks(const Image& img, int block_size) {
  if (block_size <= 0 || img.width() % block_size != 0 || img.height() % block_size != 0) {
    throw PartitionError("block size " + std::to_string(block_size) + " does not divide " +
                         std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  BlockGrid grid;
  grid.rows = img.height() / block_size;
  grid.cols = img.width() / block_size;
  grid.block_size = block_size;
  grid.blocks.reserve(static_cast<std::size_t>(grid.rows * grid.cols));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      std::vector<double> data;
      data.reserve(static_cast<std::size_t>(block_size * block_size));
      for (int y = 0; y < block_size; ++y) {
        const auto src = img.row(r * block_size + y).subspan(static_cast<std::size_t>(c * block_size),
                                                              static_cast<std::size_t>(block_size));
        data.insert(data.end(), src.begin(), src.end());
      }
      grid.blocks.emplace_back(block_size, block_size, std::move(data));
    }
  }
  return grid;
}

Image reassemble_blocks(const BlockGrid& grid) {
  const int bs = grid.block_size;
  Image out(grid.cols * bs, grid.rows * bs);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Image& b = grid.block(r, c);
      for (int y = 0; y < bs; ++y) {
        for (int x = 0; x < bs; ++x) {
          out.set(c * bs + x, r * bs + y, b.at(x, y));
        }
      }
    }
  }
  return out;
}

Image mirror_horizontal(const Image& img) {
  std::vector<double> data(img.size());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y) {
    const auto src = img.row(y);
    for (int x = 0; x < w; ++x) {
      data[static_cast<std::size_t>(y) * w + x] = src[static_cast<std::size_t>(w - 1 - x)];
    }
  }
  return Image(w, img.height(), std::move(data));
}

}  // namespace periocular
