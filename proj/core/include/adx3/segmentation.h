// Scene boundary detection over per-frame embedding vectors.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adx3/model.h"

namespace adx3 {

struct FrameEmbedding {
  std::int64_t frame_index = 0;
  Seconds timestamp = 0.0;
  std::vector<double> vector;
  /// Reference to the extracted frame image; synthesised as "frame://<index>" when absent.
  std::string image_uri;
};

struct Scene {
  int scene_index = 0;
  Seconds start = 0.0;
  Seconds end = 0.0;
  /// frame_index of the sampled frame nearest the scene midpoint; empty when no frames exist.
  std::optional<std::int64_t> keyframe_index;

  Seconds length() const { return end - start; }
  Seconds midpoint() const { return 0.5 * (start + end); }
  bool operator==(const Scene&) const = default;
};

struct SegmentationParams {
  double threshold = 0.85;
  Seconds min_scene_len = 2.0;
  /// Target sampling rate; denser embedding streams are thinned to this rate.
  double frame_rate = 1.0;
};

/// a.b / (|a||b|), clamped to [-1, 1]. Throws DegenerateVector on a zero vector and
/// InvalidArgument on a dimension mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Similarity of each consecutive frame pair; result has frames.size() - 1 entries.
std::vector<double> consecutive_similarities(std::span<const FrameEmbedding> frames);

/// Boundary timestamps (midpoints between the two frames) where similarity drops below
/// `threshold`, suppressing candidates closer than `min_scene_len` to the previous accepted
/// boundary or to t = 0.
std::vector<Seconds> detect_boundaries(std::span<const FrameEmbedding> frames, double threshold,
                                       Seconds min_scene_len);

/// Partitions [0, asset.duration] at the given boundaries.
std::vector<Scene> build_scenes(std::span<const Seconds> boundaries, const MediaAsset& asset,
                                std::span<const FrameEmbedding> frames);

std::vector<Scene> segment(std::span<const FrameEmbedding> frames, const MediaAsset& asset,
                           const SegmentationParams& params);

/// Position in `frames` of the frame whose timestamp is nearest `t` (ties go to the lower index).
std::optional<std::size_t> nearest_frame(std::span<const FrameEmbedding> frames, Seconds t);

/// Keeps the first frame of each 1/frame_rate bucket.
std::vector<FrameEmbedding> resample_frames(std::span<const FrameEmbedding> frames,
                                            double frame_rate);

/// Checks dimensions, non-zero vectors, and strictly increasing timestamps.
void validate_frames(std::span<const FrameEmbedding> frames);

/// JSON array or JSON Lines of {frame_index, timestamp, vector[, image]}.
std::vector<FrameEmbedding> parse_embeddings(std::string_view bytes);

Json to_json(const Scene& s);
Json scenes_to_json(std::span<const Scene> scenes);
std::vector<Scene> scenes_from_json(const Json& j);

/// The scene containing t; the final scene also owns its end point.
const Scene* scene_at(std::span<const Scene> scenes, Seconds t);

}  // namespace adx3
