#pragma once

// Brute-force reference implementations. They deliberately share no code
// with the library: masks are rebuilt from the closed form, histograms are
// built from explicit pair enumeration.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "periocular/image.hpp"

namespace oracle {

using periocular::Image;

// LBP code by explicit weights; the neighbour list is written out in
// clockwise order starting top-left with weight 128.
inline int lbp_code(const Image& img, int x, int y) {
  const double c = img.at(x, y);
  const int xs[8] = {x - 1, x, x + 1, x + 1, x + 1, x, x - 1, x - 1};
  const int ys[8] = {y - 1, y - 1, y - 1, y, y + 1, y + 1, y + 1, y};
  const int weights[8] = {128, 64, 32, 16, 8, 4, 2, 1};
  int code = 0;
  for (int k = 0; k < 8; ++k) {
    if (img.at(xs[k], ys[k]) > c) code += weights[k];
  }
  return code;
}

inline std::array<double, 8> lbp_histogram(const Image& img) {
  std::array<double, 256> codes{};
  int n = 0;
  for (int y = 1; y + 1 < img.height(); ++y) {
    for (int x = 1; x + 1 < img.width(); ++x) {
      codes[static_cast<std::size_t>(oracle::lbp_code(img, x, y))] += 1.0;
      ++n;
    }
  }
  std::array<double, 8> h{};
  for (int code = 0; code < 256; ++code) h[static_cast<std::size_t>(code / 32)] += codes[static_cast<std::size_t>(code)];
  for (double& v : h) v /= n;
  return h;
}

// Co-occurrence by enumerating every ordered pair of pixels and keeping those
// whose displacement equals +/- the offset.
inline std::vector<double> glcm(const Image& img, int levels, int drow, int dcol) {
  auto level = [levels](double v) {
    int q = static_cast<int>(std::floor(v / (256.0 / levels)));
    return q >= levels ? levels - 1 : q;
  };
  std::vector<double> m(static_cast<std::size_t>(levels * levels), 0.0);
  double total = 0.0;
  const int w = img.width();
  const int h = img.height();
  for (int p = 0; p < w * h; ++p) {
    for (int q = 0; q < w * h; ++q) {
      const int dr = q / w - p / w;
      const int dc = q % w - p % w;
      const bool forward = dr == drow && dc == dcol;
      const bool backward = dr == -drow && dc == -dcol;
      if (!forward && !backward) continue;
      const int a = level(img.at(p % w, p / w));
      const int b = level(img.at(q % w, q / w));
      m[static_cast<std::size_t>(a * levels + b)] += 1.0;
      total += 1.0;
    }
  }
  for (double& v : m) v /= total;
  return m;
}

inline std::array<double, 5> haralick(const std::vector<double>& p, int levels) {
  std::array<double, 5> f{};
  for (int i = 1; i <= levels; ++i) {
    for (int j = 1; j <= levels; ++j) {
      const double v = p[static_cast<std::size_t>((i - 1) * levels + (j - 1))];
      f[0] += (i - j) * (i - j) * v;
      f[1] += v / (1.0 + std::abs(i - j));
      f[2] += v > 0.0 ? -v * std::log(v) / std::log(2.0) : 0.0;
      f[3] += v * v;
      f[4] += i * j * v;
    }
  }
  return f;
}

// Gabor mask value at (dx, dy): envelope times (carrier - DC term), scaled to
// unit energy. The DC term and energy are recomputed from the closed form on
// every call.
struct GaborOracle {
  double frequency;
  double theta_deg;

  double sigma() const { return 3.0 * std::sqrt(2.0 * std::log(2.0)) / (2.0 * std::numbers::pi * frequency); }
  int half() const { return static_cast<int>(std::ceil(3.0 * sigma())); }

  std::complex<double> raw(int dx, int dy, std::complex<double> dc) const {
    const double s = sigma();
    const double env = std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
    const double t = theta_deg * std::numbers::pi / 180.0;
    const double u = dx * std::cos(t) + dy * std::sin(t);
    const std::complex<double> carrier(std::cos(2.0 * std::numbers::pi * frequency * u),
                                       std::sin(2.0 * std::numbers::pi * frequency * u));
    return env * (carrier - dc);
  }

  double response(const Image& img, int x, int y) const {
    const int h = half();
    std::complex<double> num = 0.0;
    double den = 0.0;
    for (int dy = -h; dy <= h; ++dy) {
      for (int dx = -h; dx <= h; ++dx) {
        const double s = sigma();
        const double env = std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
        num += raw(dx, dy, 0.0) ;
        den += env;
      }
    }
    const std::complex<double> dc = num / den;
    double energy = 0.0;
    for (int dy = -h; dy <= h; ++dy)
      for (int dx = -h; dx <= h; ++dx) energy += std::norm(raw(dx, dy, dc));
    std::complex<double> acc = 0.0;
    for (int dy = -h; dy <= h; ++dy) {
      for (int dx = -h; dx <= h; ++dx) {
        const int xx = x + dx;
        const int yy = y + dy;
        const double v = (xx >= 0 && yy >= 0 && xx < img.width() && yy < img.height()) ? img.at(xx, yy) : 0.0;
        acc += raw(dx, dy, dc) * v;
      }
    }
    return std::abs(acc) / std::sqrt(energy);
  }
};

}  // namespace oracle
