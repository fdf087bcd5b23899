#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gme/affine.hpp"
#include "gme/image.hpp"
#include "gme/solver.hpp"

namespace gme {

/// Multi-octave value noise (lattice spacing 32 px halving per octave),
/// Gaussian-smoothed and stretched to [20, 235].
struct SmoothedNoise {
  int octaves = 4;
  double blur_sigma = 1.0;
};

/// Checkerboard of 85/170 cells plus uniform noise of +-noise_amp.
struct CheckerWithNoise {
  int cell_px = 16;
  double noise_amp = 8.0;
};

using Background = std::variant<SmoothedNoise, CheckerWithNoise>;

/// Square foreground patch that carries its own texture (the background
/// patch under its start position) shifted by `intensity_offset`, moving at
/// a constant velocity in frame coordinates and wrapping around the frame.
struct Blob {
  int size_px = 32;
  double intensity_offset = 30.0;
  Point2 velocity;
  Point2 start_position;
  /// Visible for first_frame <= t <= last_frame; last_frame < 0 means "to the end".
  int first_frame = 0;
  int last_frame = -1;
};

struct SceneSpec {
  std::uint64_t seed = 1;
  int width = 320;
  int height = 240;
  int frames = 2;
  Background background = SmoothedNoise{};
  /// Cumulative camera transform per frame: frame t shows the background at
  /// apply(camera_path[t], p). Must have `frames` entries.
  std::vector<AffineTransform> camera_path;
  std::vector<Blob> blobs;
  double salt_pepper_fraction = 0.0;
  double blur_sigma = 0.0;
  /// Extra background border in pixels; 0 sizes it automatically.
  int margin = 0;
};

struct GroundTruth {
  /// relative[t] registers frame t+1 onto frame t: frame_{t+1}(A p) = frame_t(p).
  std::vector<AffineTransform> relative;
  /// Per frame, 1 where a blob covers the pixel.
  std::vector<std::vector<std::uint8_t>> blob_masks;
};

struct Scene {
  std::vector<Image> frames;
  GroundTruth truth;
};

/// Throws SpecError when the spec is inconsistent.
void validate(const SceneSpec& spec);

/// Renders the scene. Bit-for-bit deterministic for a fixed spec (PRNG:
/// std::mt19937_64 with hand-rolled uniform conversion). Throws SpecError if
/// the camera path leaves an explicitly given margin.
Scene generate(const SceneSpec& spec);

/// Camera path starting at identity in which every consecutive pair is
/// related by `relative` (as in GroundTruth::relative).
std::vector<AffineTransform> path_from_relative(const std::vector<AffineTransform>& relative);

/// Two-frame scene at 320x240 with a seeded random relative motion
/// (translation in [-8, 8] px per axis, isotropic scale in [0.99, 1.01]),
/// no blobs and no degradations.
SceneSpec clean_pair_scene(std::uint64_t seed);

/// clean_pair_scene plus two 88x88 blobs (about 20% coverage) moving
/// +20 px/frame horizontally and 1% salt-and-pepper noise.
SceneSpec outlier_pair_scene(std::uint64_t seed);

SceneSpec scene_from_json(const std::string& text);
std::string to_json(const SceneSpec& spec);
/// JSON list of 6-vectors, one per consecutive pair.
std::string truth_to_json(const GroundTruth& truth);

/// Writes frame_%04d.pgm files and truth.json into `directory` (created if needed).
void export_scene(const Scene& scene, const std::string& directory);

struct RecoveryRecord {
  bool ok = false;
  /// Max over the four frame corners of |A_est(p) - A_true(p)| (px).
  double corner_error = 0.0;
  int iterations = 0;
  AffineTransform estimate;
  std::string error;
};

/// Registers every consecutive pair and compares against the ground truth.
/// Solver failures become records with ok == false.
std::vector<RecoveryRecord> measure_recovery(const std::vector<Image>& frames,
                                             const GroundTruth& truth,
                                             const SolverConfig& config);

}  // namespace gme
