#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace periocular {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Single-channel raster, row-major, intensities in [0, 255] kept in double
/// precision so that resampling and equalization do not accumulate
/// quantization error.
class Image {
 public:
  Image() = default;
  /// Zero-filled image.
  Image(int width, int height);
  /// Takes ownership of `data`; throws ArgumentError when the size does not
  /// match or a value falls outside [0, 255].
  Image(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double at(int x, int y) const { return data_[index(x, y)]; }
  void set(int x, int y, double v);

  std::span<const double> pixels() const { return data_; }
  std::span<const double> row(int y) const {
    return std::span<const double>(data_).subspan(index(0, y), width_);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// File I/O. Color inputs are reduced to luma 0.299R + 0.587G + 0.114B.
Image load_image(const std::filesystem::path& path);
/// Writes an 8-bit PNG; intensities are rounded to the nearest gray level.
void save_png(const Image& img, const std::filesystem::path& path);

/// Rounds every pixel to the nearest integer gray level.
Image quantize_to_8bit(const Image& img);

}  // namespace periocular
