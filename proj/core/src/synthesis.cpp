#include "adx3/synthesis.h"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <tuple>

#include "json_util.h"

namespace adx3 {

namespace {

constexpr double kFitEpsilon = 1e-9;

std::uint32_t le32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
  return v;
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

}  // namespace

Voice assign_voice(const ADEvent& event) { return voice_for(event.event_type); }

void assign_voices(Track& track) {
  for (auto& e : track.events) e.voice = assign_voice(e);
}

std::string_view to_string(SynthFlagKind k) {
  return k == SynthFlagKind::Refit ? "refit" : "synth_failed";
}

SynthesisResult synthesize_track(const Track& track, TtsProvider& tts,
                                 std::optional<std::span<const Gap>> gaps) {
  SynthesisResult result{track, {}};
  canonicalize(result.track);
  auto& events = result.track.events;
  std::vector<Seconds> estimates;
  std::vector<bool> ok(events.size(), false);
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto& e = events[i];
    estimates.push_back(e.estimated_duration);
    try {
      SynthesizedClip clip = tts.synthesize(e.text, e.voice);
      if (!(clip.duration > 0.0)) throw ProviderError("non-positive clip duration");
      e.audio_uri = clip.audio_uri;
      e.estimated_duration = clip.duration;
      ok[i] = true;
    } catch (const ProviderError& err) {
      result.flags.push_back({e.event_id, SynthFlagKind::SynthFailed, err.what()});
    }
  }

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!ok[i] || e.delivery != Delivery::Inline) continue;
    if (!gaps) {
      if (e.estimated_duration > estimates[i] + kFitEpsilon) {
        result.flags.push_back({e.event_id, SynthFlagKind::Refit,
                                "measured " + detail::fixed(e.estimated_duration, 3) +
                                    " s exceeds estimate " + detail::fixed(estimates[i], 3) + " s"});
      }
      continue;
    }
    const bool in_gap = std::any_of(gaps->begin(), gaps->end(), [&](const Gap& g) {
      return e.start_time >= g.start - kFitEpsilon && e.end_time() <= g.end + kFitEpsilon;
    });
    if (!in_gap) {
      result.flags.push_back({e.event_id, SynthFlagKind::Refit,
                              "clip of " + detail::fixed(e.estimated_duration, 3) +
                                  " s leaves its dialogue gap"});
      continue;
    }
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      if (events[j].delivery != Delivery::Inline) continue;
      if (events[j].start_time < e.end_time() - kFitEpsilon) {
        result.flags.push_back({e.event_id, SynthFlagKind::Refit,
                                "clip runs into " + events[j].event_id});
      }
      break;
    }
  }
  std::stable_sort(result.flags.begin(), result.flags.end(),
                   [](const SynthFlag& a, const SynthFlag& b) { return a.event_id < b.event_id; });
  return result;
}

namespace {

constexpr std::pair<MixKind, std::string_view> kMixKinds[] = {
    {MixKind::DuckBegin, "duck_begin"}, {MixKind::DuckEnd, "duck_end"},
    {MixKind::PauseMain, "pause_main"}, {MixKind::ResumeMain, "resume_main"},
    {MixKind::PlayClip, "play_clip"},
};

}  // namespace

std::string_view to_string(MixKind k) {
  for (const auto& [kind, name] : kMixKinds) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<MixKind> parse_mix_kind(std::string_view s) {
  for (const auto& [kind, name] : kMixKinds) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

MixPlan build_mix_plan(const Track& track, double duck_db) {
  std::vector<const ADEvent*> voiced;
  for (const auto& e : track.events) {
    if (e.audio_uri) voiced.push_back(&e);
  }
  std::stable_sort(voiced.begin(), voiced.end(),
                   [](const ADEvent* a, const ADEvent* b) { return canonical_less(*a, *b); });

  const ADEvent* last_extended = nullptr;
  const ADEvent* last_inline = nullptr;
  for (const ADEvent* e : voiced) {
    if (e->delivery == Delivery::Extended) {
      if (last_extended && last_extended->start_time == e->start_time) {
        throw PlanConflict("extended clips " + last_extended->event_id + " and " + e->event_id +
                           " start at the same instant");
      }
      last_extended = e;
    } else {
      if (last_inline && last_inline->end_time() > e->start_time) {
        throw PlanConflict("inline clips " + last_inline->event_id + " and " + e->event_id +
                           " overlap");
      }
      last_inline = e;
    }
  }

  // Blocks sort by time; at equal times closing markers come first, then extended triples,
  // then inline openings.
  struct Block {
    Seconds at;
    int rank;
    std::size_t order;
    std::vector<MixInstruction> instructions;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < voiced.size(); ++i) {
    const ADEvent& e = *voiced[i];
    if (e.delivery == Delivery::Extended) {
      blocks.push_back({e.start_time, 1, i,
                        {{e.start_time, MixKind::PauseMain, std::nullopt, std::nullopt},
                         {e.start_time, MixKind::PlayClip, e.audio_uri, std::nullopt},
                         {e.start_time, MixKind::ResumeMain, std::nullopt, std::nullopt}}});
    } else {
      blocks.push_back({e.start_time, 2, i,
                        {{e.start_time, MixKind::DuckBegin, std::nullopt, duck_db},
                         {e.start_time, MixKind::PlayClip, e.audio_uri, std::nullopt}}});
      blocks.push_back(
          {e.end_time(), 0, i, {{e.end_time(), MixKind::DuckEnd, std::nullopt, duck_db}}});
    }
  }
  std::stable_sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    return std::tie(a.at, a.rank, a.order) < std::tie(b.at, b.rank, b.order);
  });
  MixPlan plan;
  for (auto& b : blocks) {
    for (auto& m : b.instructions) plan.push_back(std::move(m));
  }
  return plan;
}

std::vector<std::string> check_mix_plan(const MixPlan& plan) {
  std::vector<std::string> problems;
  bool ducked = false;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& m = plan[i];
    const std::string where = "instruction " + std::to_string(i);
    if (i > 0 && m.at < plan[i - 1].at) problems.push_back(where + ": time decreases");
    switch (m.kind) {
      case MixKind::DuckBegin:
        if (ducked) problems.push_back(where + ": nested duck_begin");
        ducked = true;
        break;
      case MixKind::DuckEnd:
        if (!ducked) problems.push_back(where + ": duck_end without duck_begin");
        ducked = false;
        break;
      case MixKind::PauseMain:
        if (i + 2 >= plan.size() || plan[i + 1].kind != MixKind::PlayClip ||
            plan[i + 2].kind != MixKind::ResumeMain) {
          problems.push_back(where + ": pause_main not followed by play_clip, resume_main");
        } else {
          i += 2;
        }
        break;
      case MixKind::ResumeMain:
        problems.push_back(where + ": resume_main without pause_main");
        break;
      case MixKind::PlayClip:
        if (!m.clip_uri) problems.push_back(where + ": play_clip without clip_uri");
        if (!ducked) problems.push_back(where + ": inline play_clip outside a duck region");
        break;
    }
  }
  if (ducked) problems.push_back("plan ends inside a duck region");
  return problems;
}

Json to_json(const MixInstruction& m) {
  Json j;
  j["at"] = m.at;
  j["kind"] = std::string(to_string(m.kind));
  if (m.clip_uri) j["clip_uri"] = *m.clip_uri;
  if (m.duck_db) j["duck_db"] = *m.duck_db;
  return j;
}

std::string export_mix_plan(const MixPlan& plan) {
  Json arr = Json::array();
  for (const auto& m : plan) arr.push_back(to_json(m));
  return detail::dump(arr);
}

MixPlan import_mix_plan(std::string_view bytes) {
  const Json arr = detail::parse_json(bytes, "mix plan");
  if (!arr.is_array()) throw ParseError("mix plan: expected an array", 0);
  MixPlan plan;
  for (const auto& j : arr) {
    MixInstruction m;
    m.at = detail::get_number(j, "at", "mix instruction");
    const std::string kind = detail::get_string(j, "kind", "mix instruction");
    auto k = parse_mix_kind(kind);
    if (!k) throw ParseError("mix instruction: unknown kind '" + kind + "'", 0);
    m.kind = *k;
    m.clip_uri = detail::get_optional_string(j, "clip_uri", "mix instruction");
    m.duck_db = detail::get_optional_number(j, "duck_db", "mix instruction");
    plan.push_back(std::move(m));
  }
  return plan;
}

Seconds wav_duration(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") {
    throw ParseError("not a RIFF/WAVE file", 0);
  }
  std::size_t pos = 12;
  std::uint32_t byte_rate = 0;
  while (pos + 8 <= b.size()) {
    const std::string_view id = b.substr(pos, 4);
    const std::uint32_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > b.size()) throw ParseError("truncated fmt chunk", pos);
      if (le16(b, body + 2) == 0) throw ParseError("wave file with zero channels", body + 2);
      byte_rate = le32(b, body + 8);
    } else if (id == "data") {
      if (byte_rate == 0) throw ParseError("data chunk before a valid fmt chunk", pos);
      const std::size_t available = b.size() - body;
      const std::size_t data = std::min<std::size_t>(size, available);
      return static_cast<double>(data) / static_cast<double>(byte_rate);
    }
    pos = body + size + (size & 1u);
  }
  throw ParseError("wave file without a data chunk", b.size());
}

Seconds wav_file_duration(const std::filesystem::path& path) {
  return wav_duration(detail::read_file(path));
}

}  // namespace adx3
