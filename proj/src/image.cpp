#include "periocular/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "periocular/error.hpp"

namespace periocular {

Image::Image(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw ArgumentError("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw ArgumentError("image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ArgumentError("image data length does not match width x height");
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 255.0)) {
      throw ArgumentError("image intensity outside [0, 255]");
    }
  }
}

void Image::set(int x, int y, double v) {
  if (!(v >= 0.0 && v <= 255.0)) {
    throw ArgumentError("image intensity outside [0, 255]");
  }
  data_[index(x, y)] = v;
}

Image load_image(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    throw IoError("cannot read image: " + path.string());
  }
  if (raw.depth() != CV_8U) {
    throw FormatError("unsupported bit depth (need 8-bit): " + path.string());
  }
  const int channels = raw.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw FormatError("unsupported channel count: " + path.string());
  }
  std::vector<double> data;
  data.reserve(raw.total());
  for (int y = 0; y < raw.rows; ++y) {
    const std::uint8_t* row = raw.ptr<std::uint8_t>(y);
    for (int x = 0; x < raw.cols; ++x) {
      const std::uint8_t* px = row + static_cast<std::ptrdiff_t>(x) * channels;
      if (channels == 1) {
        data.push_back(px[0]);
      } else {
        // OpenCV stores BGR(A).
        data.push_back(0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0]);
      }
    }
  }
  return Image(raw.cols, raw.rows, std::move(data));
}

void save_png(const Image& img, const std::filesystem::path& path) {
  cv::Mat out(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    auto* dst = out.ptr<std::uint8_t>(y);
    const auto src = img.row(y);
    for (int x = 0; x < img.width(); ++x) {
      dst[x] = static_cast<std::uint8_t>(std::lround(std::clamp(src[x], 0.0, 255.0)));
    }
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), out)) {
    throw IoError("cannot write image: " + path.string());
  }
}

Image quantize_to_8bit(const Image& img) {
  std::vector<double> data(img.pixels().begin(), img.pixels().end());
  for (double& v : data) {
    v = std::round(v);
  }
  return Image(img.width(), img.height(), std::move(data));
}

}  // namespace periocular
