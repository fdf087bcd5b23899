#include "gme/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "gme/error.hpp"
#include "json.hpp"

namespace gme {
namespace {

using Engine = std::mt19937_64;

// 53-bit uniform in [0, 1); std::uniform_real_distribution is not portable.
double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

double uniform(Engine& e, double lo, double hi) { return lo + (hi - lo) * uniform01(e); }

Engine frame_engine(std::uint64_t seed, int frame) {
  return Engine(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(frame + 1)));
}

struct Plane {
  int width;
  int height;
  std::vector<double> v;

  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }

  double sample(double x, double y) const {
    const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, width - 2);
    const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, height - 2);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = at(x0, y0) + fx * (at(x0 + 1, y0) - at(x0, y0));
    const double bottom = at(x0, y0 + 1) + fx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
    return top + fy * (bottom - top);
  }
};

void gaussian_blur(Plane& p, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[static_cast<std::size_t>(i + radius)];
  }
  for (double& k : kernel) k /= sum;

  Plane tmp = p;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * p.at(std::clamp(x + i, 0, p.width - 1), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * tmp.at(x, std::clamp(y + i, 0, p.height - 1));
      }
      p.at(x, y) = acc;
    }
  }
}

Plane render_background(const Background& bg, int width, int height, Engine& rng) {
  Plane plane{width, height, std::vector<double>(static_cast<std::size_t>(width) * height, 0.0)};
  if (const auto* noise = std::get_if<SmoothedNoise>(&bg)) {
    double amplitude = 1.0;
    int spacing = 32;
    for (int octave = 0; octave < noise->octaves; ++octave) {
      const int lw = width / spacing + 2;
      const int lh = height / spacing + 2;
      Plane lattice{lw, lh, std::vector<double>(static_cast<std::size_t>(lw) * lh)};
      for (double& v : lattice.v) v = uniform(rng, -1.0, 1.0);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          plane.at(x, y) += amplitude * lattice.sample(static_cast<double>(x) / spacing,
                                                       static_cast<double>(y) / spacing);
        }
      }
      amplitude *= 0.5;
      spacing = std::max(spacing / 2, 2);
    }
    gaussian_blur(plane, noise->blur_sigma);
    const auto [lo, hi] = std::minmax_element(plane.v.begin(), plane.v.end());
    const double min = *lo;
    const double span = std::max(*hi - min, 1e-12);
    for (double& v : plane.v) v = 20.0 + 215.0 * (v - min) / span;
  } else {
    const auto& checker = std::get<CheckerWithNoise>(bg);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const bool dark = ((x / checker.cell_px) + (y / checker.cell_px)) % 2 == 0;
        plane.at(x, y) = std::clamp(
            (dark ? 85.0 : 170.0) + uniform(rng, -checker.noise_amp, checker.noise_amp), 0.0, 255.0);
      }
    }
  }
  return plane;
}

bool blob_visible(const Blob& blob, int frame) {
  return frame >= blob.first_frame && (blob.last_frame < 0 || frame <= blob.last_frame);
}

int wrap(int v, int n) { return ((v % n) + n) % n; }

// Smallest border that keeps every frame corner inside the rendered background.
double required_margin(const SceneSpec& spec) {
  double need = 0.0;
  const double xs[2] = {0.0, static_cast<double>(spec.width - 1)};
  const double ys[2] = {0.0, static_cast<double>(spec.height - 1)};
  for (const auto& c : spec.camera_path) {
    for (double x : xs) {
      for (double y : ys) {
        const Point2 q = apply(c, {x, y});
        need = std::max({need, -q.x, -q.y, q.x - (spec.width - 1), q.y - (spec.height - 1)});
      }
    }
  }
  return need;
}

}  // namespace

void validate(const SceneSpec& spec) {
  if (spec.width < 16 || spec.height < 16) throw SpecError("scene: frames must be at least 16x16");
  if (spec.frames < 2) throw SpecError("scene: need at least 2 frames");
  if (spec.camera_path.size() != static_cast<std::size_t>(spec.frames)) {
    throw SpecError("scene: camera_path has " + std::to_string(spec.camera_path.size()) +
                    " entries for " + std::to_string(spec.frames) + " frames");
  }
  for (const auto& c : spec.camera_path) {
    if (!c.is_finite() || std::abs(c.determinant()) < kSingularDeterminant) {
      throw SpecError("scene: camera transform is singular or non-finite");
    }
  }
  for (const auto& b : spec.blobs) {
    if (b.size_px < 1 || 2 * b.size_px >= std::min(spec.width, spec.height)) {
      throw SpecError("scene: blob size must be below half the frame size");
    }
  }
  if (!(spec.salt_pepper_fraction >= 0.0 && spec.salt_pepper_fraction <= 0.1)) {
    throw SpecError("scene: salt_pepper_fraction must lie in [0, 0.1]");
  }
  if (!(spec.blur_sigma >= 0.0)) throw SpecError("scene: blur_sigma must be >= 0");
  if (spec.margin < 0) throw SpecError("scene: margin must be >= 0");
  if (const auto* n = std::get_if<SmoothedNoise>(&spec.background)) {
    if (n->octaves < 1 || n->blur_sigma < 0.0) throw SpecError("scene: bad smoothed-noise background");
  } else if (std::get<CheckerWithNoise>(spec.background).cell_px < 1) {
    throw SpecError("scene: checker cell must be >= 1 px");
  }
}

std::vector<AffineTransform> path_from_relative(const std::vector<AffineTransform>& relative) {
  std::vector<AffineTransform> path{AffineTransform::identity()};
  for (const auto& r : relative) path.push_back(compose(path.back(), invert(r)));
  return path;
}

Scene generate(const SceneSpec& spec) {
  validate(spec);
  const double need = required_margin(spec);
  int margin = spec.margin;
  if (margin == 0) {
    margin = static_cast<int>(std::ceil(need)) + 4;
  } else if (need > margin) {
    throw SpecError("scene: camera displacement " + std::to_string(need) +
                    " px exceeds the rendered margin of " + std::to_string(margin) + " px");
  }

  Engine rng(spec.seed);
  const Plane background =
      render_background(spec.background, spec.width + 2 * margin, spec.height + 2 * margin, rng);

  Scene scene;
  const std::size_t n = static_cast<std::size_t>(spec.width) * spec.height;
  for (int t = 0; t < spec.frames; ++t) {
    Plane frame{spec.width, spec.height, std::vector<double>(n)};
    const AffineTransform& camera = spec.camera_path[static_cast<std::size_t>(t)];
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const Point2 q = apply(camera, {static_cast<double>(x), static_cast<double>(y)});
        frame.at(x, y) = background.sample(q.x + margin, q.y + margin);
      }
    }

    std::vector<std::uint8_t> occupancy(n, 0);
    for (const auto& blob : spec.blobs) {
      if (!blob_visible(blob, t)) continue;
      const int px = static_cast<int>(std::lround(blob.start_position.x + t * blob.velocity.x));
      const int py = static_cast<int>(std::lround(blob.start_position.y + t * blob.velocity.y));
      for (int j = 0; j < blob.size_px; ++j) {
        for (int i = 0; i < blob.size_px; ++i) {
          const int fx = wrap(px + i, spec.width);
          const int fy = wrap(py + j, spec.height);
          const double texture = background.sample(blob.start_position.x + i + margin,
                                                   blob.start_position.y + j + margin);
          frame.at(fx, fy) = std::clamp(texture + blob.intensity_offset, 0.0, 255.0);
          occupancy[static_cast<std::size_t>(fy) * spec.width + fx] = 1;
        }
      }
    }

    gaussian_blur(frame, spec.blur_sigma);
    for (double& v : frame.v) v = std::clamp(std::floor(v + 0.5), 0.0, 255.0);

    if (spec.salt_pepper_fraction > 0.0) {
      Engine noise = frame_engine(spec.seed, t);
      for (double& v : frame.v) {
        const double u = uniform01(noise);
        const bool salt = (noise() >> 63) != 0;
        if (u < spec.salt_pepper_fraction) v = salt ? 255.0 : 0.0;
      }
    }

    scene.frames.emplace_back(spec.width, spec.height, std::move(frame.v));
    scene.truth.blob_masks.push_back(std::move(occupancy));
  }

  for (int t = 0; t + 1 < spec.frames; ++t) {
    scene.truth.relative.push_back(compose(invert(spec.camera_path[static_cast<std::size_t>(t) + 1]),
                                           spec.camera_path[static_cast<std::size_t>(t)]));
  }
  return scene;
}

SceneSpec clean_pair_scene(std::uint64_t seed) {
  Engine rng(seed);
  const double tx = uniform(rng, -8.0, 8.0);
  const double ty = uniform(rng, -8.0, 8.0);
  const double s = uniform(rng, 0.99, 1.01);
  SceneSpec spec;
  spec.seed = seed;
  spec.width = 320;
  spec.height = 240;
  spec.frames = 2;
  spec.background = SmoothedNoise{4, 1.0};
  spec.camera_path = path_from_relative({AffineTransform{s, 0.0, tx, 0.0, s, ty}});
  return spec;
}

SceneSpec outlier_pair_scene(std::uint64_t seed) {
  SceneSpec spec = clean_pair_scene(seed);
  Engine rng(seed ^ 0xB10B5ULL);
  const double x0 = std::floor(uniform(rng, 0.0, spec.width));
  const double x1 = std::floor(uniform(rng, 0.0, spec.width));
  spec.blobs = {
      Blob{88, 30.0, {20.0, 0.0}, {x0, 20.0}},
      Blob{88, 30.0, {20.0, 0.0}, {x1, 130.0}},
  };
  spec.salt_pepper_fraction = 0.01;
  return spec;
}

namespace {

nlohmann::json affine_array(const AffineTransform& a) { return a.params(); }

AffineTransform affine_of(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 6) throw ParseError("scene JSON: transform must be 6 numbers");
  std::array<double, 6> p{};
  for (std::size_t i = 0; i < 6; ++i) p[i] = j.at(i).get<double>();
  return AffineTransform::from_params(p);
}

Point2 point_of(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("scene JSON: point must be 2 numbers");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

SceneSpec scene_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SceneSpec spec;
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.width = j.value("width", 320);
    spec.height = j.value("height", 240);
    spec.frames = j.value("frames", 2);
    if (j.contains("background")) {
      const auto& b = j.at("background");
      const std::string type = b.value("type", std::string("smoothed_noise"));
      if (type == "smoothed_noise") {
        spec.background = SmoothedNoise{b.value("octaves", 4), b.value("blur_sigma", 1.0)};
      } else if (type == "checker") {
        spec.background = CheckerWithNoise{b.value("cell_px", 16), b.value("noise_amp", 8.0)};
      } else {
        throw ParseError("scene JSON: unknown background type '" + type + "'");
      }
    }
    if (j.contains("camera_path")) {
      for (const auto& a : j.at("camera_path")) spec.camera_path.push_back(affine_of(a));
    } else {
      const AffineTransform rel =
          j.contains("camera_motion") ? affine_of(j.at("camera_motion")) : AffineTransform::identity();
      spec.camera_path = path_from_relative(
          std::vector<AffineTransform>(static_cast<std::size_t>(std::max(spec.frames - 1, 0)), rel));
    }
    if (j.contains("blobs")) {
      for (const auto& b : j.at("blobs")) {
        Blob blob;
        blob.size_px = b.value("size_px", blob.size_px);
        blob.intensity_offset = b.value("intensity_offset", blob.intensity_offset);
        if (b.contains("velocity")) blob.velocity = point_of(b.at("velocity"));
        if (b.contains("start_position")) blob.start_position = point_of(b.at("start_position"));
        blob.first_frame = b.value("first_frame", 0);
        blob.last_frame = b.value("last_frame", -1);
        spec.blobs.push_back(blob);
      }
    }
    spec.salt_pepper_fraction = j.value("salt_pepper_fraction", 0.0);
    spec.blur_sigma = j.value("blur_sigma", 0.0);
    spec.margin = j.value("margin", 0);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scene JSON: ") + e.what());
  }
}

std::string to_json(const SceneSpec& spec) {
  nlohmann::json j;
  j["seed"] = spec.seed;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["frames"] = spec.frames;
  if (const auto* n = std::get_if<SmoothedNoise>(&spec.background)) {
    j["background"] = {{"type", "smoothed_noise"}, {"octaves", n->octaves}, {"blur_sigma", n->blur_sigma}};
  } else {
    const auto& c = std::get<CheckerWithNoise>(spec.background);
    j["background"] = {{"type", "checker"}, {"cell_px", c.cell_px}, {"noise_amp", c.noise_amp}};
  }
  j["camera_path"] = nlohmann::json::array();
  for (const auto& c : spec.camera_path) j["camera_path"].push_back(affine_array(c));
  j["blobs"] = nlohmann::json::array();
  for (const auto& b : spec.blobs) {
    j["blobs"].push_back({{"size_px", b.size_px},
                          {"intensity_offset", b.intensity_offset},
                          {"velocity", {b.velocity.x, b.velocity.y}},
                          {"start_position", {b.start_position.x, b.start_position.y}},
                          {"first_frame", b.first_frame},
                          {"last_frame", b.last_frame}});
  }
  j["salt_pepper_fraction"] = spec.salt_pepper_fraction;
  j["blur_sigma"] = spec.blur_sigma;
  j["margin"] = spec.margin;
  return j.dump(2);
}

std::string truth_to_json(const GroundTruth& truth) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : truth.relative) j.push_back(affine_array(a));
  return j.dump();
}

void export_scene(const Scene& scene, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error("cannot create directory " + directory + ": " + ec.message());
  for (std::size_t t = 0; t < scene.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.pgm", t);
    write_pgm_file((fs::path(directory) / name).string(), scene.frames[t]);
  }
  const std::string truth_path = (fs::path(directory) / "truth.json").string();
  std::ofstream out(truth_path, std::ios::binary);
  if (!out) throw Error("cannot write " + truth_path);
  out << truth_to_json(scene.truth) << "\n";
}

std::vector<RecoveryRecord> measure_recovery(const std::vector<Image>& frames,
                                             const GroundTruth& truth,
                                             const SolverConfig& config) {
  if (frames.size() < 2 || truth.relative.size() + 1 != frames.size()) {
    throw ArgumentError("measure_recovery: need one ground-truth transform per frame pair");
  }
  std::vector<RecoveryRecord> records;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    RecoveryRecord rec;
    try {
      const MotionEstimate est = estimate_motion(frames[t], frames[t + 1], config);
      rec.ok = true;
      rec.estimate = est.transform;
      rec.iterations = est.total_iterations();
      rec.corner_error = max_corner_distance(est.transform, truth.relative[t], frames[t].width(),
                                             frames[t].height());
    } catch (const Error& e) {
      rec.error = e.what();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace gme
