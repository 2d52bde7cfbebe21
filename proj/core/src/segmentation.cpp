#include "adx3/segmentation.h"

#include <algorithm>
#include <cmath>

#include "json_util.h"

namespace adx3 {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVector("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void validate_frames(std::span<const FrameEmbedding> frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].vector.size() != frames.front().vector.size()) {
      throw InvalidArgument("frame " + std::to_string(frames[i].frame_index) +
                            ": embedding dimension differs from frame 0");
    }
    if (std::all_of(frames[i].vector.begin(), frames[i].vector.end(),
                    [](double x) { return x == 0.0; })) {
      throw DegenerateVector("frame " + std::to_string(frames[i].frame_index) +
                             ": zero embedding vector");
    }
    if (i > 0 && !(frames[i].timestamp > frames[i - 1].timestamp)) {
      throw InvalidArgument("frame " + std::to_string(frames[i].frame_index) +
                            ": timestamps must be strictly increasing");
    }
  }
}

std::vector<double> consecutive_similarities(std::span<const FrameEmbedding> frames) {
  std::vector<double> sims;
  if (frames.size() < 2) return sims;
  sims.reserve(frames.size() - 1);
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    sims.push_back(cosine_similarity(frames[i].vector, frames[i + 1].vector));
  }
  return sims;
}

std::vector<Seconds> detect_boundaries(std::span<const FrameEmbedding> frames, double threshold,
                                       Seconds min_scene_len) {
  if (frames.size() < 2) {
    throw InsufficientInput("detect_boundaries: need at least 2 frames, got " +
                            std::to_string(frames.size()));
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgument("detect_boundaries: threshold must lie in (0, 1)");
  }
  if (!(min_scene_len >= 0.0)) throw InvalidArgument("detect_boundaries: min_scene_len < 0");
  validate_frames(frames);

  const auto sims = consecutive_similarities(frames);
  std::vector<Seconds> accepted;
  Seconds last = 0.0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (!(sims[i] < threshold)) continue;
    const Seconds t = 0.5 * (frames[i].timestamp + frames[i + 1].timestamp);
    if (t - last < min_scene_len) continue;
    accepted.push_back(t);
    last = t;
  }
  return accepted;
}

std::optional<std::size_t> nearest_frame(std::span<const FrameEmbedding> frames, Seconds t) {
  if (frames.empty()) return std::nullopt;
  // Timestamps are increasing, so the nearest frame is adjacent to the insertion point.
  auto it = std::lower_bound(frames.begin(), frames.end(), t,
                             [](const FrameEmbedding& f, Seconds v) { return f.timestamp < v; });
  std::size_t hi = static_cast<std::size_t>(it - frames.begin());
  if (hi == 0) return 0;
  if (hi == frames.size()) return frames.size() - 1;
  const std::size_t lo = hi - 1;
  return (t - frames[lo].timestamp) <= (frames[hi].timestamp - t) ? lo : hi;
}

std::vector<Scene> build_scenes(std::span<const Seconds> boundaries, const MediaAsset& asset,
                                std::span<const FrameEmbedding> frames) {
  asset.check();
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const Seconds b = boundaries[i];
    if (!(b > 0.0 && b < asset.duration)) {
      throw RangeError("build_scenes: boundary " + detail::fixed(b, 3) + " outside (0, " +
                       detail::fixed(asset.duration, 3) + ")");
    }
    if (i > 0 && !(b > boundaries[i - 1])) {
      throw RangeError("build_scenes: boundaries must be strictly increasing");
    }
  }
  std::vector<Scene> scenes;
  scenes.reserve(boundaries.size() + 1);
  Seconds start = 0.0;
  for (std::size_t i = 0; i <= boundaries.size(); ++i) {
    Scene s;
    s.scene_index = static_cast<int>(i);
    s.start = start;
    s.end = i < boundaries.size() ? boundaries[i] : asset.duration;
    if (auto pos = nearest_frame(frames, s.midpoint())) s.keyframe_index = frames[*pos].frame_index;
    scenes.push_back(s);
    start = s.end;
  }
  return scenes;
}

std::vector<Scene> segment(std::span<const FrameEmbedding> frames, const MediaAsset& asset,
                           const SegmentationParams& params) {
  auto boundaries = detect_boundaries(frames, params.threshold, params.min_scene_len);
  // Frames sampled past the asset end cannot open a scene.
  std::erase_if(boundaries, [&](Seconds b) { return !(b > 0.0 && b < asset.duration); });
  return build_scenes(boundaries, asset, frames);
}

std::vector<FrameEmbedding> resample_frames(std::span<const FrameEmbedding> frames,
                                            double frame_rate) {
  if (!(frame_rate > 0.0)) throw InvalidArgument("resample_frames: frame_rate must be > 0");
  std::vector<FrameEmbedding> out;
  long long last_bucket = -1;
  for (const auto& f : frames) {
    const long long bucket = static_cast<long long>(std::floor(f.timestamp * frame_rate + 1e-9));
    if (out.empty() || bucket > last_bucket) {
      out.push_back(f);
      last_bucket = bucket;
    }
  }
  return out;
}

std::vector<FrameEmbedding> parse_embeddings(std::string_view bytes) {
  constexpr std::string_view what = "embedding record";
  std::vector<FrameEmbedding> frames;
  for (const auto& rec : detail::parse_records(bytes, "embeddings")) {
    FrameEmbedding f;
    f.frame_index = detail::get_integer(rec, "frame_index", what);
    f.timestamp = detail::get_number(rec, "timestamp", what);
    const Json& vec = detail::require(rec, "vector", what);
    if (!vec.is_array()) throw ParseError("embedding record: vector must be an array", 0);
    f.vector.reserve(vec.size());
    for (const auto& x : vec) {
      if (!x.is_number()) throw ParseError("embedding record: vector entries must be numbers", 0);
      f.vector.push_back(x.get<double>());
    }
    f.image_uri = detail::get_optional_string(rec, "image", what)
                      .value_or("frame://" + std::to_string(f.frame_index));
    frames.push_back(std::move(f));
  }
  return frames;
}

Json to_json(const Scene& s) {
  Json j;
  j["scene_index"] = s.scene_index;
  j["start"] = s.start;
  j["end"] = s.end;
  j["keyframe_index"] = s.keyframe_index ? Json(*s.keyframe_index) : Json(nullptr);
  return j;
}

Json scenes_to_json(std::span<const Scene> scenes) {
  Json arr = Json::array();
  for (const auto& s : scenes) arr.push_back(to_json(s));
  return arr;
}

std::vector<Scene> scenes_from_json(const Json& j) {
  constexpr std::string_view what = "scene";
  if (!j.is_array()) throw ParseError("scenes: expected an array", 0);
  std::vector<Scene> out;
  for (const auto& rec : j) {
    Scene s;
    s.scene_index = static_cast<int>(detail::get_integer(rec, "scene_index", what));
    s.start = detail::get_number(rec, "start", what);
    s.end = detail::get_number(rec, "end", what);
    if (auto it = rec.find("keyframe_index"); it != rec.end() && it->is_number_integer()) {
      s.keyframe_index = it->get<std::int64_t>();
    }
    out.push_back(s);
  }
  return out;
}

const Scene* scene_at(std::span<const Scene> scenes, Seconds t) {
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const bool last = i + 1 == scenes.size();
    if (t >= scenes[i].start && (t < scenes[i].end || (last && t <= scenes[i].end))) {
      return &scenes[i];
    }
  }
  return nullptr;
}

}  // namespace adx3
