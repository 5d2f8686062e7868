#include "periocular/descriptors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>

#include "periocular/error.hpp"

namespace periocular {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void require_side(const Image& block, int min_side, const char* what) {
  if (block.width() < min_side || block.height() < min_side) {
    throw BlockTooSmallError(std::string(what) + " needs a block of at least " + std::to_string(min_side) +
                             "x" + std::to_string(min_side));
  }
}

template <std::size_t N>
void l1_normalize(std::array<double, N>& h) {
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  if (sum > 0.0) {
    for (double& v : h) v /= sum;
  }
}

GaborFilter make_gabor_filter(double frequency, double orientation_deg) {
  GaborFilter f;
  f.frequency = frequency;
  f.orientation_deg = orientation_deg;
  f.sigma = gabor_sigma(frequency);
  f.half = static_cast<int>(std::ceil(3.0 * f.sigma));
  const int side = f.side();
  const double c = std::cos(orientation_deg * kDegToRad);
  const double s = std::sin(orientation_deg * kDegToRad);

  std::vector<double> envelope(static_cast<std::size_t>(side * side));
  std::vector<std::complex<double>> carrier(envelope.size());
  double env_sum = 0.0;
  std::complex<double> weighted_carrier = 0.0;
  for (int dy = -f.half; dy <= f.half; ++dy) {
    for (int dx = -f.half; dx <= f.half; ++dx) {
      const auto k = static_cast<std::size_t>((dy + f.half) * side + (dx + f.half));
      const double e = std::exp(-(dx * dx + dy * dy) / (2.0 * f.sigma * f.sigma));
      const double phase = 2.0 * std::numbers::pi * frequency * (dx * c + dy * s);
      envelope[k] = e;
      carrier[k] = std::polar(1.0, phase);
      env_sum += e;
      weighted_carrier += e * carrier[k];
    }
  }
  // Subtracting the envelope-weighted mean carrier removes the DC response
  // without changing the envelope shape.
  const std::complex<double> dc = weighted_carrier / env_sum;
  f.mask.resize(envelope.size());
  double energy = 0.0;
  for (std::size_t k = 0; k < envelope.size(); ++k) {
    f.mask[k] = envelope[k] * (carrier[k] - dc);
    energy += std::norm(f.mask[k]);
  }
  const double norm = std::sqrt(energy);
  for (auto& m : f.mask) m /= norm;
  // Remove the residual rounding-level mean.
  const std::complex<double> mean =
      std::accumulate(f.mask.begin(), f.mask.end(), std::complex<double>(0.0)) / static_cast<double>(f.mask.size());
  for (auto& m : f.mask) m -= mean;
  return f;
}

}  // namespace

const char* to_string(Descriptor d) {
  switch (d) {
    case Descriptor::kLbp: return "LBP";
    case Descriptor::kHog: return "HOG";
    case Descriptor::kGabor: return "GABOR";
    case Descriptor::kGlcm: return "GLCM";
    case Descriptor::kGist: return "GIST";
    case Descriptor::kFused: return "FUSED";
  }
  return "?";
}

Descriptor parse_descriptor(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  for (Descriptor d : {Descriptor::kLbp, Descriptor::kHog, Descriptor::kGabor, Descriptor::kGlcm, Descriptor::kGist}) {
    if (upper == to_string(d)) return d;
  }
  throw ConfigError("unknown descriptor '" + std::string(name) + "'");
}

int block_feature_size(Descriptor d) {
  switch (d) {
    case Descriptor::kLbp: return 8;
    case Descriptor::kHog: return 8;
    case Descriptor::kGabor: return 30;
    case Descriptor::kGlcm: return 5;
    case Descriptor::kGist: return 32;
    case Descriptor::kFused: break;
  }
  throw ArgumentError("FUSED has no fixed per-block size");
}

std::uint8_t lbp_code(const Image& block, int x, int y) {
  // Clockwise from the top-left neighbour.
  static constexpr std::array<std::array<int, 2>, 8> kNeighbours{
      {{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};
  const double centre = block.at(x, y);
  unsigned code = 0;
  for (const auto& [dx, dy] : kNeighbours) {
    code = (code << 1) | (block.at(x + dx, y + dy) > centre ? 1u : 0u);
  }
  return static_cast<std::uint8_t>(code);
}

std::array<double, 8> lbp_block(const Image& block) {
  require_side(block, 3, "LBP");
  std::array<double, 8> hist{};
  for (int y = 1; y < block.height() - 1; ++y) {
    for (int x = 1; x < block.width() - 1; ++x) {
      hist[lbp_code(block, x, y) / 32] += 1.0;
    }
  }
  l1_normalize(hist);
  return hist;
}

std::array<double, 8> hog_histogram(const Image& block) {
  require_side(block, 3, "HOG");
  constexpr double kBinWidth = 180.0 / 8.0;
  std::array<double, 8> hist{};
  for (int y = 1; y < block.height() - 1; ++y) {
    for (int x = 1; x < block.width() - 1; ++x) {
      const double gx = block.at(x + 1, y) - block.at(x - 1, y);
      const double gy = block.at(x, y + 1) - block.at(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) / kDegToRad;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const int bin = std::min(7, static_cast<int>(angle / kBinWidth));
      hist[static_cast<std::size_t>(bin)] += mag;
    }
  }
  return hist;
}

std::array<double, 8> hog_block(const Image& block) {
  auto hist = hog_histogram(block);
  l1_normalize(hist);
  return hist;
}

double gabor_sigma(double frequency) {
  // Half-magnitude points at 2/3 f and 4/3 f.
  return 3.0 * std::sqrt(2.0 * std::numbers::ln2) / (2.0 * std::numbers::pi * frequency);
}

GaborBank build_gabor_bank(int num_freq, int num_orient, double f_max) {
  if (num_freq < 1 || num_orient < 1) {
    throw ArgumentError("Gabor bank needs at least one frequency and one orientation");
  }
  if (!(f_max > 0.0)) {
    throw ArgumentError("Gabor f_max must be positive");
  }
  if (f_max > 0.5) {
    throw AliasingError("Gabor f_max " + std::to_string(f_max) + " exceeds the Nyquist limit 0.5");
  }
  GaborBank bank;
  bank.num_freq = num_freq;
  bank.num_orient = num_orient;
  bank.f_max = f_max;
  for (int f = 0; f < num_freq; ++f) {
    bank.frequencies.push_back(f_max / std::pow(2.0, f));
  }
  for (int o = 0; o < num_orient; ++o) {
    bank.orientations.push_back(180.0 * o / num_orient);
  }
  for (double freq : bank.frequencies) {
    for (double theta : bank.orientations) {
      bank.filters.push_back(make_gabor_filter(freq, theta));
    }
  }
  return bank;
}

std::vector<double> gabor_at_point(const Image& img, int x, int y, const GaborBank& bank) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) {
    throw ArgumentError("Gabor sample point outside the image");
  }
  std::vector<double> out;
  out.reserve(bank.size());
  for (const GaborFilter& f : bank.filters) {
    const int y0 = std::max(-f.half, -y);
    const int y1 = std::min(f.half, img.height() - 1 - y);
    const int x0 = std::max(-f.half, -x);
    const int x1 = std::min(f.half, img.width() - 1 - x);
    std::complex<double> acc = 0.0;
    for (int dy = y0; dy <= y1; ++dy) {
      const auto row = img.row(y + dy);
      for (int dx = x0; dx <= x1; ++dx) {
        acc += f.at(dx, dy) * row[static_cast<std::size_t>(x + dx)];
      }
    }
    out.push_back(std::abs(acc));
  }
  return out;
}

int quantize_level(double v, int levels) {
  return std::clamp(static_cast<int>(std::floor(v * levels / 256.0)), 0, levels - 1);
}

std::vector<Glcm> glcm_block(const Image& block, int levels) {
  if (levels < 2) {
    throw ArgumentError("GLCM needs at least 2 gray levels");
  }
  require_side(block, 2, "GLCM");
  const int w = block.width();
  const int h = block.height();
  std::vector<int> q(block.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      q[static_cast<std::size_t>(y * w + x)] = quantize_level(block.at(x, y), levels);
    }
  }
  std::vector<Glcm> out;
  out.reserve(kGlcmOffsets.size());
  for (const auto& [dr, dc] : kGlcmOffsets) {
    Glcm m{levels, std::vector<double>(static_cast<std::size_t>(levels * levels), 0.0)};
    double total = 0.0;
    for (int r = 0; r < h; ++r) {
      const int r2 = r + dr;
      if (r2 < 0 || r2 >= h) continue;
      for (int c = 0; c < w; ++c) {
        const int c2 = c + dc;
        if (c2 < 0 || c2 >= w) continue;
        const int a = q[static_cast<std::size_t>(r * w + c)];
        const int b = q[static_cast<std::size_t>(r2 * w + c2)];
        m.p[static_cast<std::size_t>(a * levels + b)] += 1.0;
        m.p[static_cast<std::size_t>(b * levels + a)] += 1.0;
        total += 2.0;
      }
    }
    for (double& v : m.p) v /= total;
    out.push_back(std::move(m));
  }
  return out;
}

std::array<double, 5> glcm_features(std::span<const Glcm> matrices) {
  if (matrices.empty()) {
    throw ArgumentError("glcm_features needs at least one matrix");
  }
  const int levels = matrices.front().levels;
  std::array<double, 5> mean{};
  for (const Glcm& m : matrices) {
    if (m.levels != levels || m.p.size() != static_cast<std::size_t>(levels * levels)) {
      throw ShapeError("GLCM matrices differ in size");
    }
    double contrast = 0.0;
    double homogeneity = 0.0;
    double entropy = 0.0;
    double energy = 0.0;
    double autocorrelation = 0.0;
    for (int i = 0; i < levels; ++i) {
      for (int j = 0; j < levels; ++j) {
        const double p = m.at(i, j);
        const double d = i - j;
        contrast += p * d * d;
        homogeneity += p / (1.0 + std::abs(d));
        if (p > 0.0) entropy -= p * std::log2(p);
        energy += p * p;
        autocorrelation += (i + 1.0) * (j + 1.0) * p;
      }
    }
    mean[0] += contrast;
    mean[1] += homogeneity;
    mean[2] += entropy;
    mean[3] += energy;
    mean[4] += autocorrelation;
  }
  for (double& v : mean) v /= static_cast<double>(matrices.size());
  return mean;
}

std::vector<double> local_variance_normalize(const Image& block, const GistParams& params) {
  const int w = block.width();
  const int h = block.height();
  const double sigma = params.window_fraction * std::min(w, h);
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) {
    kernel[static_cast<std::size_t>(k + half)] = std::exp(-(k * k) / (2.0 * sigma * sigma));
  }

  // Offsetting by the block minimum keeps a flat block exactly zero.
  const double base = *std::min_element(block.pixels().begin(), block.pixels().end());
  std::vector<double> d(block.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = (block.pixels()[k] - base) / 255.0;
  }

  std::vector<double> out(block.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double wsum = 0.0;
      double s1 = 0.0;
      double s2 = 0.0;
      for (int yy = std::max(0, y - half); yy <= std::min(h - 1, y + half); ++yy) {
        const double wy = kernel[static_cast<std::size_t>(yy - y + half)];
        for (int xx = std::max(0, x - half); xx <= std::min(w - 1, x + half); ++xx) {
          const double wt = wy * kernel[static_cast<std::size_t>(xx - x + half)];
          const double v = d[static_cast<std::size_t>(yy * w + xx)];
          wsum += wt;
          s1 += wt * v;
          s2 += wt * v * v;
        }
      }
      const double mu = s1 / wsum;
      const double var = std::max(0.0, s2 / wsum - mu * mu);
      out[static_cast<std::size_t>(y * w + x)] = (d[static_cast<std::size_t>(y * w + x)] - mu) /
                                                 (params.epsilon + std::sqrt(var));
    }
  }
  return out;
}

std::vector<double> gist_block(const Image& block, const GaborBank& bank, const GistParams& params) {
  require_side(block, 3, "GIST");
  const std::vector<double> v = local_variance_normalize(block, params);
  const int w = block.width();
  const int h = block.height();
  std::vector<double> out;
  out.reserve(bank.size());
  for (const GaborFilter& f : bank.filters) {
    double total = 0.0;
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(-f.half, -y);
      const int y1 = std::min(f.half, h - 1 - y);
      for (int x = 0; x < w; ++x) {
        const int x0 = std::max(-f.half, -x);
        const int x1 = std::min(f.half, w - 1 - x);
        std::complex<double> acc = 0.0;
        for (int dy = y0; dy <= y1; ++dy) {
          const double* src = &v[static_cast<std::size_t>((y + dy) * w + x)];
          for (int dx = x0; dx <= x1; ++dx) {
            acc += f.at(dx, dy) * src[dx];
          }
        }
        total += std::abs(acc);
      }
    }
    out.push_back(total / static_cast<double>(w * h));
  }
  return out;
}

FeatureExtractor::FeatureExtractor(DescriptorParams params)
    : params_(params),
      gabor_bank_(build_gabor_bank(5, 6, params.gabor_f_max)),
      gist_bank_(build_gabor_bank(4, 8, params.gabor_f_max)) {
  if (params.glcm_levels < 2) {
    throw ArgumentError("GLCM needs at least 2 gray levels");
  }
}

FeatureVector FeatureExtractor::extract(const Image& roi, Descriptor descriptor, const RoiSpec& spec) const {
  if (roi.width() != spec.width || roi.height() != spec.height) {
    throw ShapeError("ROI is " + std::to_string(roi.width()) + "x" + std::to_string(roi.height()) +
                     ", expected " + std::to_string(spec.width) + "x" + std::to_string(spec.height));
  }
  FeatureVector fv;
  fv.descriptor = descriptor;
  fv.values.reserve(static_cast<std::size_t>(spec.block_count() * block_feature_size(descriptor)));
  auto append = [&fv](const auto& range) { fv.values.insert(fv.values.end(), range.begin(), range.end()); };

  if (descriptor == Descriptor::kGabor) {
    const int bs = spec.block_size;
    for (int r = 0; r < spec.block_rows(); ++r) {
      for (int c = 0; c < spec.block_cols(); ++c) {
        append(gabor_at_point(roi, c * bs + bs / 2, r * bs + bs / 2, gabor_bank_));
      }
    }
    return fv;
  }

  const BlockGrid grid = partition_blocks(roi, spec.block_size);
  for (const Image& block : grid.blocks) {
    switch (descriptor) {
      case Descriptor::kLbp: append(lbp_block(block)); break;
      case Descriptor::kHog: append(hog_block(block)); break;
      case Descriptor::kGlcm: {
        const auto m = glcm_block(block, params_.glcm_levels);
        append(glcm_features(m));
        break;
      }
      case Descriptor::kGist: append(gist_block(block, gist_bank_, params_.gist)); break;
      default: throw ArgumentError("cannot extract a FUSED descriptor directly");
    }
  }
  return fv;
}

FeatureVector extract_features(const Image& roi, Descriptor descriptor, const RoiSpec& spec) {
  static const FeatureExtractor extractor;
  return extractor.extract(roi, descriptor, spec);
}

FeatureVector fuse(std::span<const FeatureVector> features) {
  if (features.empty()) {
    throw ArgumentError("fuse needs at least one feature vector");
  }
  FeatureVector out;
  out.descriptor = Descriptor::kFused;
  std::size_t total = 0;
  for (const auto& f : features) total += f.dims();
  out.values.reserve(total);
  for (const auto& f : features) {
    out.values.insert(out.values.end(), f.values.begin(), f.values.end());
  }
  return out;
}

}  // namespace periocular
