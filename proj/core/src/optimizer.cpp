#include "adx3/optimizer.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "json_util.h"

namespace adx3 {

namespace {

constexpr std::string_view kReaskSuffix = "\n\nReturn only the JSON array.";

std::string ask(VlmProvider& provider, const std::string& prompt, const OptimizerParams& params) {
  return call_with_backoff(params.retry, [&] { return provider.generate(prompt, {}); });
}

std::string combined_text(std::span<const ADEvent> events) {
  std::vector<std::string> texts;
  for (const auto& e : events) texts.push_back(e.text);
  return detail::join(texts, "\n");
}

std::vector<std::string> ids_of(std::span<const ADEvent> events) {
  std::vector<std::string> ids;
  for (const auto& e : events) ids.push_back(e.event_id);
  return ids;
}

std::size_t scene_position(std::span<const Scene> scenes, Seconds t) {
  const Scene* s = scene_at(scenes, t);
  if (s) return static_cast<std::size_t>(s - scenes.data());
  return scenes.empty() ? 0 : scenes.size() - 1;
}

FilterContext filter_context_for(std::span<const Scene> scenes, std::size_t scene_pos,
                                 const MergedTranscript& transcript, const Track& raw) {
  FilterContext ctx;
  if (scenes.empty()) return ctx;
  const Scene& scene = scenes[scene_pos];
  ctx.scene_transcript = scene_transcript(scene, transcript);
  ctx.cumulative_transcript = transcript_before(transcript, scene.start);
  std::vector<std::string> prior;
  for (const auto& e : raw.events) {
    if (e.start_time < scene.start) prior.push_back(e.text);
  }
  ctx.cumulative_descriptions = detail::join(prior, "\n");
  return ctx;
}

double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

// Extended events must not share a start; collisions are moved by whole milliseconds.
void separate_extended_starts(std::vector<ADEvent>& events, Seconds duration) {
  std::stable_sort(events.begin(), events.end(), canonical_less);
  std::set<double> used;
  for (auto& e : events) {
    if (e.delivery != Delivery::Extended) continue;
    double t = e.start_time;
    int step = 0;
    while (used.count(t)) {
      ++step;
      t = round_ms(e.start_time + 0.001 * step);
      if (t > duration) t = round_ms(e.start_time - 0.001 * step);
    }
    e.start_time = std::clamp(t, 0.0, duration);
    used.insert(e.start_time);
  }
  std::stable_sort(events.begin(), events.end(), canonical_less);
}

ADEvent as_extended(ADEvent e, const DurationModel& duration) {
  if (e.delivery != Delivery::Extended && !e.audio_uri) e.estimated_duration = duration.estimate(e.text);
  e.delivery = Delivery::Extended;
  return e;
}

// Runs the necessity filter scene by scene and appends extended events / log records.
void filter_candidates(const std::vector<std::pair<ADEvent, int>>& candidates,
                       std::span<const Scene> scenes, const MergedTranscript& transcript,
                       const Track& context_track, VlmProvider& provider,
                       const OptimizerParams& params, std::string_view kept_outcome,
                       std::string_view dropped_outcome, std::vector<ADEvent>& out_events,
                       std::vector<DecisionRecord>& log) {
  std::map<std::size_t, std::vector<std::size_t>> by_scene;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    by_scene[scene_position(scenes, candidates[i].first.start_time)].push_back(i);
  }
  for (const auto& [scene_pos, indices] : by_scene) {
    std::vector<ADEvent> scene_candidates;
    for (auto i : indices) scene_candidates.push_back(candidates[i].first);
    const FilterContext ctx = filter_context_for(scenes, scene_pos, transcript, context_track);
    FilterResult fr = filter_extended(scene_candidates, ctx, provider, params);
    std::set<std::string> kept_ids;
    for (const auto& k : fr.kept) kept_ids.insert(k.event_id);
    for (std::size_t j = 0; j < indices.size(); ++j) {
      const auto& [event, attempts] = candidates[indices[j]];
      const bool kept = kept_ids.count(event.event_id) > 0;
      if (kept) out_events.push_back(as_extended(event, params.duration));
      log.push_back({event.event_id, std::string(kept ? kept_outcome : dropped_outcome), attempts,
                     fr.reasons[j]});
    }
  }
}

}  // namespace

std::string build_inline_prompt(std::string_view combined, Seconds available,
                                const TemplateStore& templates) {
  return templates.render(PromptId::InlineOptimization,
                          {{"combined_text", std::string(combined)}, {"available_duration", available}});
}

std::string build_retry_prompt(std::string_view previous_text, Seconds tts_duration,
                               Seconds available, const TemplateStore& templates) {
  return templates.render(PromptId::RetryOptimization,
                          {{"optimized_text", std::string(previous_text)},
                           {"tts_duration", tts_duration},
                           {"available_duration", available}});
}

std::string retry_shorten(std::string_view previous_text, Seconds tts_duration, Seconds available,
                          VlmProvider& provider, const OptimizerParams& params) {
  if (!(tts_duration > available)) {
    throw InvalidArgument("retry_shorten: text already fits (" + detail::fixed(tts_duration, 2) +
                          " <= " + detail::fixed(available, 2) + ")");
  }
  std::string reply = detail::trim(
      ask(provider, build_retry_prompt(previous_text, tts_duration, available, *params.templates),
          params));
  if (reply.empty()) throw ProviderError("retry_shorten: empty reply");
  return reply;
}

InlineOutcome optimize_inline(std::span<const ADEvent> events, const Gap& gap,
                              VlmProvider& provider, const OptimizerParams& params) {
  const auto ids = ids_of(events);
  if (events.empty()) throw InvalidArgument("optimize_inline: no events");
  const Seconds available = gap.length();
  if (available < params.min_utterance) {
    return InlineFailure{ids, 0,
                         "gap of " + detail::fixed(available, 2) + " s is below min_utterance"};
  }
  int attempts = 0;
  try {
    ++attempts;
    std::string text = detail::trim(
        ask(provider, build_inline_prompt(combined_text(events), available, *params.templates),
            params));
    if (text.empty()) return InlineFailure{ids, attempts, "empty optimization reply"};
    for (;;) {
      const Seconds needed = params.duration.estimate(text);
      if (needed <= available) {
        return ScheduleDecision{ids, Delivery::Inline, gap, std::move(text), attempts};
      }
      if (attempts > params.max_retries) {
        return InlineFailure{ids, attempts,
                             "still " + detail::fixed(needed, 2) + " s after " +
                                 std::to_string(attempts) + " attempts for a " +
                                 detail::fixed(available, 2) + " s gap"};
      }
      ++attempts;
      text = retry_shorten(text, needed, available, provider, params);
    }
  } catch (const ProviderError& e) {
    return InlineFailure{ids, attempts, std::string("provider failure: ") + e.what()};
  }
}

std::string build_filter_prompt(const FilterContext& ctx, std::span<const ADEvent> candidates,
                                const TemplateStore& templates) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    lines.push_back("[" + std::to_string(i) + "] " + candidates[i].text);
  }
  return templates.render(PromptId::ExtendedFilter,
                          {{"transcript_text", ctx.scene_transcript},
                           {"cumulative_transcript", ctx.cumulative_transcript},
                           {"previous_desc_text", ctx.cumulative_descriptions},
                           {"clip['text']", detail::join(lines, "\n")}});
}

std::vector<NecessityVerdict> parse_necessity(std::string_view reply) {
  std::size_t pos = 0;
  while ((pos = reply.find('[', pos)) != std::string_view::npos) {
    Json arr;
    bool parsed = false;
    // Try progressively longer candidate spans ending at each ']' after pos.
    for (std::size_t close = reply.find(']', pos); close != std::string_view::npos;
         close = reply.find(']', close + 1)) {
      try {
        arr = Json::parse(reply.substr(pos, close - pos + 1));
        parsed = true;
        break;
      } catch (const nlohmann::json::exception&) {
      }
    }
    if (parsed && arr.is_array() &&
        std::all_of(arr.begin(), arr.end(), [](const Json& j) { return j.is_object(); })) {
      std::vector<NecessityVerdict> out;
      for (const auto& item : arr) {
        auto id = item.find("id");
        auto nec = item.find("necessary");
        if (id == item.end() || nec == item.end()) continue;
        NecessityVerdict v;
        if (id->is_number_integer()) {
          v.id = id->get<int>();
        } else if (id->is_string() && !id->get<std::string>().empty() &&
                   std::isdigit(static_cast<unsigned char>(id->get<std::string>()[0]))) {
          v.id = std::stoi(id->get<std::string>());
        } else {
          continue;
        }
        if (nec->is_boolean()) {
          v.necessary = nec->get<bool>();
        } else if (nec->is_string()) {
          v.necessary = nec->get<std::string>() == "true";
        } else {
          continue;
        }
        if (auto r = item.find("reason"); r != item.end() && r->is_string()) {
          v.reason = r->get<std::string>();
        }
        out.push_back(std::move(v));
      }
      return out;
    }
    ++pos;
  }
  throw ProviderFormatError("no parseable necessity array in provider reply");
}

FilterResult filter_extended(std::span<const ADEvent> candidates, const FilterContext& ctx,
                             VlmProvider& provider, const OptimizerParams& params) {
  FilterResult result;
  result.reasons.assign(candidates.size(), "not marked necessary");
  if (candidates.empty()) return result;

  const std::string prompt = build_filter_prompt(ctx, candidates, *params.templates);
  std::optional<std::vector<NecessityVerdict>> verdicts;
  try {
    for (int round = 0; round < 2 && !verdicts; ++round) {
      ++result.calls;
      const std::string reply =
          ask(provider, round == 0 ? prompt : prompt + std::string(kReaskSuffix), params);
      try {
        verdicts = parse_necessity(reply);
      } catch (const ProviderFormatError&) {
      }
    }
  } catch (const ProviderError& e) {
    result.reasons.assign(candidates.size(), std::string("necessity filter unavailable: ") + e.what());
    return result;
  }
  if (!verdicts) {
    result.reasons.assign(candidates.size(), "necessity reply unparseable");
    return result;
  }

  std::vector<std::optional<NecessityVerdict>> by_id(candidates.size());
  for (const auto& v : *verdicts) {
    if (v.id >= 0 && static_cast<std::size_t>(v.id) < candidates.size() && !by_id[v.id]) {
      by_id[v.id] = v;
    }
  }
  bool visual_taken = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& v = by_id[i];
    if (!v) {
      result.reasons[i] = "no verdict";
      continue;
    }
    if (!v->necessary) {
      result.reasons[i] = v->reason.empty() ? "not necessary" : v->reason;
      continue;
    }
    if (candidates[i].event_type == EventType::Visual) {
      if (visual_taken) {
        result.reasons[i] = "another visual description was kept for this scene";
        continue;
      }
      visual_taken = true;
    }
    result.reasons[i] = v->reason.empty() ? "necessary" : v->reason;
    result.kept.push_back(candidates[i]);
  }
  return result;
}

std::vector<std::string> measurement_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto token : detail::split_whitespace(text)) {
    auto keep = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
    std::size_t b = 0, e = token.size();
    while (b < e && !keep(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !keep(static_cast<unsigned char>(token[e - 1]))) --e;
    std::string core = token.substr(b, e - b);
    if (std::any_of(core.begin(), core.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      out.push_back(std::move(core));
    }
  }
  return out;
}

bool preserves_measurements(std::span<const ADEvent> inputs, std::string_view reply) {
  for (const auto& e : inputs) {
    for (const auto& tok : measurement_tokens(e.text)) {
      if (reply.find(tok) == std::string_view::npos) return false;
    }
  }
  return true;
}

std::string build_merge_prompt(std::span<const ADEvent> scene_events, Seconds available_scene_time,
                               const TemplateStore& templates) {
  std::string prompt =
      templates.render(PromptId::HowtoMerge, {{"available_scene_time", available_scene_time}});
  std::string text_lines, visual_lines;
  for (const auto& e : scene_events) {
    (e.event_type == EventType::TextOnScreen ? text_lines : visual_lines) += "- " + e.text + "\n";
  }
  prompt += "\nTEXT ON SCREEN:\n" + text_lines + "\nVISUAL:\n" + visual_lines;
  return prompt;
}

MergeOutcome merge_howto(std::span<const ADEvent> scene_events, Seconds available_scene_time,
                         VlmProvider& provider, const OptimizerParams& params) {
  MergeOutcome out;
  const bool has_text = std::any_of(scene_events.begin(), scene_events.end(), [](const ADEvent& e) {
    return e.event_type == EventType::TextOnScreen;
  });
  const bool has_visual = std::any_of(scene_events.begin(), scene_events.end(), [](const ADEvent& e) {
    return e.event_type == EventType::Visual;
  });
  if (!has_text || !has_visual) {
    out.note = "needs both on-screen text and visual events";
    return out;
  }
  const std::string prompt = build_merge_prompt(scene_events, available_scene_time, *params.templates);
  try {
    for (int round = 0; round < 2; ++round) {
      ++out.calls;
      std::string reply = detail::trim(ask(provider, prompt, params));
      if (reply.empty()) {
        out.note = "empty merge reply";
        continue;
      }
      if (!preserves_measurements(scene_events, reply)) {
        out.note = "merge reply dropped a measurement";
        continue;
      }
      const auto first = std::min_element(scene_events.begin(), scene_events.end(), canonical_less);
      ADEvent merged;
      merged.event_id = first->event_id + "-merged";
      merged.start_time = first->start_time;
      merged.event_type = EventType::Visual;
      merged.delivery = Delivery::Inline;
      merged.voice = voice_for(EventType::Visual);
      merged.source = Source::Ai;
      merged.text = std::move(reply);
      merged.estimated_duration = params.duration.estimate(merged.text);
      out.merged = std::move(merged);
      out.note.clear();
      return out;
    }
  } catch (const ProviderError& e) {
    out.note = std::string("provider failure: ") + e.what();
  }
  return out;
}

ScheduleResult schedule(const Track& raw_track, std::span<const Gap> gaps_in,
                        const MediaAsset& asset, std::span<const Scene> scenes,
                        const MergedTranscript& transcript, VlmProvider& provider,
                        const OptimizerParams& params) {
  ScheduleResult result;
  result.track.track_id = raw_track.track_id;
  result.track.asset_id = raw_track.asset_id;
  result.track.schema_version = raw_track.schema_version;

  std::vector<ADEvent> work = raw_track.events;
  std::stable_sort(work.begin(), work.end(), canonical_less);

  if (asset.category == Category::Howto && !scenes.empty()) {
    std::vector<ADEvent> merged_events;
    std::map<std::size_t, std::vector<ADEvent>> per_scene;
    for (auto& e : work) per_scene[scene_position(scenes, e.start_time)].push_back(e);
    for (auto& [pos, events] : per_scene) {
      const Scene& scene = scenes[pos];
      Seconds available = 0.0;
      for (const auto& g : gaps_in) {
        const Seconds overlap = std::min(g.end, scene.end) - std::max(g.start, scene.start);
        available = std::max(available, overlap);
      }
      if (available <= 0.0) available = scene.length();
      MergeOutcome m = merge_howto(events, available, provider, params);
      if (m.merged) {
        for (const auto& e : events) {
          result.log.push_back({e.event_id, "merged", m.calls, "merged into " + m.merged->event_id});
        }
        merged_events.push_back(std::move(*m.merged));
      } else {
        for (auto& e : events) merged_events.push_back(std::move(e));
      }
    }
    work = std::move(merged_events);
    std::stable_sort(work.begin(), work.end(), canonical_less);
  }

  std::vector<Gap> gaps(gaps_in.begin(), gaps_in.end());
  std::sort(gaps.begin(), gaps.end(), [](const Gap& a, const Gap& b) { return a.start < b.start; });

  // (gap, scene, type) -> window events, in canonical order.
  std::map<std::tuple<std::size_t, std::size_t, int>, std::vector<ADEvent>> windows;
  std::vector<std::pair<ADEvent, int>> candidates;
  for (const auto& e : work) {
    const Seconds earliest = e.start_time - params.lookback;
    const std::size_t scene_pos = scene_position(scenes, e.start_time);
    const Seconds scene_end = scenes.empty() ? asset.duration : scenes[scene_pos].end;
    auto it = std::find_if(gaps.begin(), gaps.end(), [&](const Gap& g) { return g.end > earliest; });
    if (it == gaps.end() || std::max(it->start, earliest) >= scene_end) {
      result.log.push_back({e.event_id, "pending", 0, "no dialogue gap before the scene ends"});
      candidates.push_back({e, 0});
      continue;
    }
    windows[{static_cast<std::size_t>(it - gaps.begin()), scene_pos, static_cast<int>(e.event_type)}]
        .push_back(e);
  }

  struct Order {
    std::size_t gap;
    Seconds earliest;
    std::size_t scene;
    int type;
  };
  std::vector<Order> order;
  for (const auto& [key, events] : windows) {
    const auto& [gap, scene, type] = key;
    order.push_back({gap, events.front().start_time, scene, type});
  }
  std::sort(order.begin(), order.end(), [](const Order& a, const Order& b) {
    if (a.gap != b.gap) return a.gap < b.gap;
    if (a.earliest != b.earliest) return a.earliest < b.earliest;
    return std::tie(a.scene, a.type) < std::tie(b.scene, b.type);
  });

  std::vector<ADEvent> final_events;
  std::map<std::size_t, Seconds> cursor;
  for (const auto& o : order) {
    const auto& events = windows.at({o.gap, o.scene, o.type});
    const Gap& gap = gaps[o.gap];
    Seconds start = std::max(gap.start, events.front().start_time - params.lookback);
    if (auto c = cursor.find(o.gap); c != cursor.end()) start = std::max(start, c->second);

    WindowTrace trace;
    trace.gap_index = o.gap;
    trace.event_type = static_cast<EventType>(o.type);
    trace.event_ids = ids_of(events);
    trace.available = Gap{start, gap.end};

    InlineOutcome outcome =
        start < gap.end ? optimize_inline(events, trace.available, provider, params)
                        : InlineOutcome{InlineFailure{trace.event_ids, 0, "gap already filled"}};
    if (auto* d = std::get_if<ScheduleDecision>(&outcome)) {
      ADEvent placed;
      placed.event_id = events.front().event_id;
      placed.start_time = start;
      placed.event_type = trace.event_type;
      placed.delivery = Delivery::Inline;
      placed.voice = voice_for(trace.event_type);
      placed.source = Source::Ai;
      placed.text = d->final_text;
      placed.estimated_duration = params.duration.estimate(placed.text);
      cursor[o.gap] = start + placed.estimated_duration;
      trace.attempts = d->attempts;
      trace.placed_inline = true;
      for (const auto& e : events) {
        std::string reason = "placed at " + detail::fixed(start, 3) + " in gap [" +
                             detail::fixed(gap.start, 3) + ", " + detail::fixed(gap.end, 3) + "]";
        if (e.event_id != placed.event_id) reason = "combined into " + placed.event_id + "; " + reason;
        result.log.push_back({e.event_id, "inline", d->attempts, std::move(reason)});
      }
      final_events.push_back(std::move(placed));
    } else {
      const auto& f = std::get<InlineFailure>(outcome);
      trace.attempts = f.attempts;
      for (const auto& e : events) {
        result.log.push_back({e.event_id, "pending", f.attempts, f.cause});
        candidates.push_back({e, f.attempts});
      }
    }
    result.windows.push_back(std::move(trace));
  }

  // Pending records are rewritten with the filter's verdict below.
  std::erase_if(result.log, [](const DecisionRecord& r) { return r.outcome == "pending"; });
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return canonical_less(a.first, b.first); });
  filter_candidates(candidates, scenes, transcript, raw_track, provider, params, "extended",
                    "dropped", final_events, result.log);

  separate_extended_starts(final_events, asset.duration);
  result.track.events = std::move(final_events);
  std::stable_sort(result.log.begin(), result.log.end(),
                   [](const DecisionRecord& a, const DecisionRecord& b) { return a.event_id < b.event_id; });
  return result;
}

ScheduleResult repass_after_synthesis(const Track& synthesized,
                                      std::span<const std::string> demote_ids,
                                      const MediaAsset& asset, std::span<const Scene> scenes,
                                      const MergedTranscript& transcript, VlmProvider& provider,
                                      const OptimizerParams& params) {
  ScheduleResult result;
  result.track.track_id = synthesized.track_id;
  result.track.asset_id = synthesized.asset_id;
  result.track.schema_version = synthesized.schema_version;

  const std::set<std::string> demote(demote_ids.begin(), demote_ids.end());
  std::vector<ADEvent> kept;
  std::vector<std::pair<ADEvent, int>> candidates;
  for (const auto& e : synthesized.events) {
    if (e.delivery == Delivery::Inline && demote.count(e.event_id)) {
      candidates.push_back({e, 0});
    } else {
      kept.push_back(e);
    }
  }
  filter_candidates(candidates, scenes, transcript, synthesized, provider, params,
                    "demoted_extended", "demoted_dropped", kept, result.log);
  separate_extended_starts(kept, asset.duration);
  result.track.events = std::move(kept);
  return result;
}

Json to_json(const DecisionRecord& r) {
  Json j;
  j["event_id"] = r.event_id;
  j["outcome"] = r.outcome;
  j["attempts"] = r.attempts;
  j["reason"] = r.reason;
  return j;
}

std::string export_decision_log(std::span<const DecisionRecord> log) {
  std::string out;
  for (const auto& r : log) out += to_json(r).dump() + "\n";
  return out;
}

}  // namespace adx3
