#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "periocular/image.hpp"
#include "periocular/imgproc.hpp"

namespace periocular {

enum class Descriptor { kLbp, kHog, kGabor, kGlcm, kGist, kFused };

const char* to_string(Descriptor d);
/// Case-insensitive; throws ConfigError on unknown names. FUSED is not
/// accepted since it is only ever produced by fuse().
Descriptor parse_descriptor(std::string_view name);

/// Values per image block: LBP 8, HOG 8, GABOR 30, GLCM 5, GIST 32.
int block_feature_size(Descriptor d);

// ---------------------------------------------------------------------------
// Local binary patterns and gradient histograms

/// 8-bit code of the interior pixel (x, y): neighbours are visited clockwise
/// from the top-left, which becomes the most significant bit; a bit is set
/// when the neighbour is strictly brighter than the centre.
std::uint8_t lbp_code(const Image& block, int x, int y);

/// Histogram of the interior codes in 8 bins of 32 consecutive codes,
/// L1-normalized.
std::array<double, 8> lbp_block(const Image& block);

/// Magnitude-weighted histogram of unsigned gradient orientation over the
/// interior pixels (central differences, 8 bins of 22.5 degrees), before
/// normalization.
std::array<double, 8> hog_histogram(const Image& block);

/// hog_histogram() L1-normalized; a flat block gives the zero vector.
std::array<double, 8> hog_block(const Image& block);

// ---------------------------------------------------------------------------
// Gabor filtering

/// One complex Gabor mask, stored row-major over [-half, half]^2.
struct GaborFilter {
  double frequency = 0.0;        // cycles per pixel
  double orientation_deg = 0.0;  // of the wave vector, image coordinates
  double sigma = 0.0;            // envelope std-dev, pixels
  int half = 0;
  std::vector<std::complex<double>> mask;

  int side() const { return 2 * half + 1; }
  const std::complex<double>& at(int dx, int dy) const {
    return mask[static_cast<std::size_t>((dy + half) * side() + (dx + half))];
  }
};

struct GaborBank {
  int num_freq = 0;
  int num_orient = 0;
  double f_max = 0.0;
  std::vector<double> frequencies;   // f_max, f_max/2, ...
  std::vector<double> orientations;  // degrees, uniform over [0, 180)
  std::vector<GaborFilter> filters;  // frequency-major

  std::size_t size() const { return filters.size(); }
  const GaborFilter& filter(int f, int o) const {
    return filters[static_cast<std::size_t>(f * num_orient + o)];
  }
};

/// Envelope width giving a one-octave half-magnitude bandwidth at frequency f.
double gabor_sigma(double frequency);

/// Octave-spaced, isotropic-envelope bank. Each mask is truncated at
/// +/-3 sigma, DC-corrected to zero mean and scaled to unit L2 norm. Throws
/// AliasingError when f_max > 0.5.
GaborBank build_gabor_bank(int num_freq, int num_orient, double f_max);

/// Magnitudes of the correlation of every bank filter with the image patch
/// centred on (x, y); the image is treated as zero outside its support.
std::vector<double> gabor_at_point(const Image& img, int x, int y, const GaborBank& bank);

// ---------------------------------------------------------------------------
// Co-occurrence statistics

struct Glcm {
  int levels = 0;
  std::vector<double> p;  // levels x levels, row-major

  double at(int i, int j) const { return p[static_cast<std::size_t>(i * levels + j)]; }
};

/// Gray level of intensity v after uniform quantization into `levels` bins.
int quantize_level(double v, int levels);

/// The displacement set (row, col): 0, 45, 90 and 135 degrees at distance 1.
inline constexpr std::array<std::array<int, 2>, 4> kGlcmOffsets{{{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

/// One symmetric, normalized co-occurrence matrix per offset in
/// kGlcmOffsets.
std::vector<Glcm> glcm_block(const Image& block, int levels);

/// (contrast, homogeneity, entropy [bits], energy, autocorrelation) averaged
/// over the matrices. Levels are 1-based in the autocorrelation sum.
std::array<double, 5> glcm_features(std::span<const Glcm> matrices);

// ---------------------------------------------------------------------------
// GIST

struct GistParams {
  double epsilon = 0.01;          // on intensities scaled to [0, 1]
  double window_fraction = 0.25;  // Gaussian window sigma / block side
};

/// Divisive local-variance normalization, (i - mu_w) / (eps + sigma_w), with a
/// Gaussian window renormalized at the block border.
std::vector<double> local_variance_normalize(const Image& block, const GistParams& params);

/// Mean response magnitude of every bank filter over the normalized block.
std::vector<double> gist_block(const Image& block, const GaborBank& bank, const GistParams& params = {});

// ---------------------------------------------------------------------------
// Image-level features

struct FeatureVector {
  Descriptor descriptor = Descriptor::kFused;
  std::vector<double> values;

  std::size_t dims() const { return values.size(); }
};

struct DescriptorParams {
  int glcm_levels = 8;
  double gabor_f_max = 0.25;
  GistParams gist;
};

/// Holds the two Gabor banks so they are built once and shared read-only.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(DescriptorParams params = {});

  /// Per-block descriptors concatenated in row-major block order. GABOR
  /// samples the whole ROI at the block centres; the others see only the
  /// block. Throws ShapeError when the ROI does not match `spec`.
  FeatureVector extract(const Image& roi, Descriptor descriptor, const RoiSpec& spec) const;

  const DescriptorParams& params() const { return params_; }
  const GaborBank& gabor_bank() const { return gabor_bank_; }
  const GaborBank& gist_bank() const { return gist_bank_; }

 private:
  DescriptorParams params_;
  GaborBank gabor_bank_;
  GaborBank gist_bank_;
};

/// Uses a process-wide extractor with default parameters.
FeatureVector extract_features(const Image& roi, Descriptor descriptor, const RoiSpec& spec);

/// Concatenation in the given order, relabelled FUSED.
FeatureVector fuse(std::span<const FeatureVector> features);

}  // namespace periocular
