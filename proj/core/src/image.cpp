#include "gme/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gme/error.hpp"

namespace gme {

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 2 || height < 2) {
    throw ArgumentError("image must be at least 2x2, got " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ArgumentError("image data size " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double v = data_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 255.0) {
      throw ArgumentError("intensity at index " + std::to_string(i) +
                          " is outside [0, 255]");
    }
  }
}

Image Image::filled(int width, int height, double value) {
  return Image(width, height,
               std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                       static_cast<std::size_t>(std::max(height, 0)),
                                   value));
}

namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("PGM: " + what + " at byte offset " + std::to_string(pos_));
  }

  void expect_magic() {
    if (bytes_.size() < 2 || bytes_[0] != 'P' || bytes_[1] != '5') {
      fail("missing P5 magic");
    }
    pos_ = 2;
  }

  // Skips whitespace and '#' comments; at least one separator is required.
  void skip_separators() {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected whitespace");
  }

  long read_uint(const char* name) {
    skip_separators();
    if (pos_ >= bytes_.size()) fail(std::string("truncated header before ") + name);
    if (!std::isdigit(bytes_[pos_])) fail(std::string("expected digit for ") + name);
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) fail(std::string(name) + " too large");
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail("expected single whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image load_pgm(std::span<const std::uint8_t> bytes) {
  PgmHeaderReader reader(bytes);
  reader.expect_magic();
  const long width = reader.read_uint("width");
  const long height = reader.read_uint("height");
  const std::size_t maxval_offset = reader.pos();
  const long maxval = reader.read_uint("maxval");
  if (maxval == 0 || maxval > 255) {
    throw ParseError("PGM: maxval " + std::to_string(maxval) +
                     " unsupported (must be 1..255) at byte offset " +
                     std::to_string(maxval_offset));
  }
  reader.end_header();

  const std::size_t raster = reader.pos();
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - raster < count) {
    throw ParseError("PGM: truncated raster, expected " + std::to_string(count) +
                     " bytes at byte offset " + std::to_string(bytes.size()));
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto v = bytes[raster + i];
    if (v > maxval) {
      throw ParseError("PGM: sample exceeds maxval at byte offset " +
                       std::to_string(raster + i));
    }
    data[i] = v;
  }
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

std::vector<std::uint8_t> save_pgm(const Image& image) {
  const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.size());
  for (const double v : image.data()) {
    out.push_back(static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)));
  }
  return out;
}

Image read_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return load_pgm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_pgm_file(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  const auto bytes = save_pgm(image);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path);
}

GradientField gradient(const Image& image) {
  const int w = image.width();
  const int h = image.height();
  GradientField g{w, h, std::vector<double>(image.size()), std::vector<double>(image.size())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (x == 0) {
        g.gx[i] = image.at(1, y) - image.at(0, y);
      } else if (x == w - 1) {
        g.gx[i] = image.at(w - 1, y) - image.at(w - 2, y);
      } else {
        g.gx[i] = 0.5 * (image.at(x + 1, y) - image.at(x - 1, y));
      }
      if (y == 0) {
        g.gy[i] = image.at(x, 1) - image.at(x, 0);
      } else if (y == h - 1) {
        g.gy[i] = image.at(x, h - 1) - image.at(x, h - 2);
      } else {
        g.gy[i] = 0.5 * (image.at(x, y + 1) - image.at(x, y - 1));
      }
    }
  }
  return g;
}

std::optional<double> bilinear_sample(const Image& image, double x, double y) {
  const int w = image.width();
  const int h = image.height();
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return std::nullopt;
  // The last row/column is reached with weight 1 from the cell before it.
  const int x0 = std::min(static_cast<int>(x), w - 2);
  const int y0 = std::min(static_cast<int>(y), h - 2);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = image.at(x0, y0) + fx * (image.at(x0 + 1, y0) - image.at(x0, y0));
  const double bottom =
      image.at(x0, y0 + 1) + fx * (image.at(x0 + 1, y0 + 1) - image.at(x0, y0 + 1));
  return top + fy * (bottom - top);
}

std::vector<double> smooth5(std::span<const double> data, int width, int height) {
  static constexpr double kTaps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  std::vector<double> rows(data.size());
  for (int y = 0; y < height; ++y) {
    const double* src = data.data() + static_cast<std::size_t>(y) * width;
    double* dst = rows.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t) acc += kTaps[t + 2] * src[std::clamp(x + t, 0, width - 1)];
      dst[x] = acc;
    }
  }
  std::vector<double> out(data.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t) {
        acc += kTaps[t + 2] * rows[static_cast<std::size_t>(std::clamp(y + t, 0, height - 1)) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

std::vector<Image> build_pyramid(const Image& image, int levels) {
  if (levels < 1) throw ArgumentError("pyramid needs at least one level");
  std::vector<Image> pyramid;
  pyramid.reserve(static_cast<std::size_t>(levels));
  pyramid.push_back(image);
  for (int k = 1; k < levels; ++k) {
    const Image& prev = pyramid.back();
    const int w = prev.width() / 2;
    const int h = prev.height() / 2;
    if (w < 16 || h < 16) break;
    const auto smooth = smooth5(prev.data(), prev.width(), prev.height());
    std::vector<double> down(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Clamp guards against round-off drifting a hair past the range ends.
        down[static_cast<std::size_t>(y) * w + x] = std::clamp(
            smooth[static_cast<std::size_t>(2 * y) * prev.width() + 2 * x], 0.0, 255.0);
      }
    }
    pyramid.emplace_back(w, h, std::move(down));
  }
  return pyramid;
}

}  // namespace gme
