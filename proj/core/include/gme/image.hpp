#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gme {

/// Grayscale image with real-valued intensities on the 8-bit scale [0, 255].
///
/// Pixels are stored row-major; (x, y) addresses column x of row y. Images are
/// immutable once built: every operation in the toolkit returns new images.
class Image {
 public:
  /// Throws ArgumentError if width/height < 2, the data size mismatches, or any
  /// intensity is non-finite or outside [0, 255].
  Image(int width, int height, std::vector<double> data);

  /// Constant image.
  static Image filled(int width, int height, double value);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> data_;
};

/// Per-pixel partial derivatives of an image, same dimensions as the source.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;

  double dx(int x, int y) const noexcept {
    return gx[static_cast<std::size_t>(y) * width + x];
  }
  double dy(int x, int y) const noexcept {
    return gy[static_cast<std::size_t>(y) * width + x];
  }
};

/// Parses a binary PGM ("P5", maxval <= 255). Comment lines starting with '#'
/// are accepted between header tokens. Throws ParseError naming the byte
/// offset of the problem, or ArgumentError if the image is smaller than 2x2.
Image load_pgm(std::span<const std::uint8_t> bytes);

/// Serialises as "P5\n<w> <h>\n255\n" followed by the raster, each intensity
/// rounded half-up to the nearest integer.
std::vector<std::uint8_t> save_pgm(const Image& image);

Image read_pgm_file(const std::string& path);
void write_pgm_file(const std::string& path, const Image& image);

/// Central differences in the interior, one-sided differences on the border.
GradientField gradient(const Image& image);

/// Bilinear interpolation at a sub-pixel position. Returns nullopt when the
/// position lies outside [0, width-1] x [0, height-1].
std::optional<double> bilinear_sample(const Image& image, double x, double y);

/// Gaussian pyramid: element 0 is the input, each further level is the
/// previous one smoothed with the separable [1 4 6 4 1]/16 kernel (replicated
/// borders) and decimated by keeping even rows and columns. The level count is
/// clamped so the coarsest level stays at least 16x16. Throws ArgumentError for
/// levels == 0.
std::vector<Image> build_pyramid(const Image& image, int levels);

/// Separable [1 4 6 4 1]/16 smoothing with replicated borders, no decimation.
std::vector<double> smooth5(std::span<const double> data, int width, int height);

}  // namespace gme
