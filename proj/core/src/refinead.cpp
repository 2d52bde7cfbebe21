#include "adx3/refinead.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <set>

#include "json_util.h"

namespace adx3 {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (ok) {
      static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
      ok = cp >= kMin[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (ok) {
      out.push_back(cp);
      i += len;
    } else {
      out.push_back(0x110000 + b0);
      ++i;
    }
  }
  return out;
}

namespace {

// Bit-parallel edit distance (Myers 1999, Hyyrö's formulation); |pattern| <= 64.
std::size_t levenshtein_bitparallel(std::u32string_view pattern, std::u32string_view text) {
  std::vector<std::pair<char32_t, std::uint64_t>> peq;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    auto it = std::lower_bound(peq.begin(), peq.end(), pattern[i],
                               [](const auto& p, char32_t c) { return p.first < c; });
    if (it == peq.end() || it->first != pattern[i]) it = peq.insert(it, {pattern[i], 0});
    it->second |= std::uint64_t{1} << i;
  }
  const std::uint64_t last = std::uint64_t{1} << (pattern.size() - 1);
  std::uint64_t pv = ~std::uint64_t{0};
  std::uint64_t mv = 0;
  std::size_t score = pattern.size();
  for (char32_t c : text) {
    auto it = std::lower_bound(peq.begin(), peq.end(), c,
                               [](const auto& p, char32_t ch) { return p.first < ch; });
    const std::uint64_t eq = (it != peq.end() && it->first == c) ? it->second : 0;
    const std::uint64_t xv = eq | mv;
    const std::uint64_t xh = (((eq & pv) + pv) ^ pv) | eq;
    std::uint64_t ph = mv | ~(xh | pv);
    std::uint64_t mh = pv & xh;
    if (ph & last) ++score;
    if (mh & last) --score;
    ph = (ph << 1) | 1;
    mh <<= 1;
    pv = mh | ~(xv | ph);
    mv = ph & xv;
  }
  return score;
}

std::size_t levenshtein_rows(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return b.size();
  if (a.size() <= 64) return levenshtein_bitparallel(a, b);
  return levenshtein_rows(a, b);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(decode_utf8(a), decode_utf8(b));
}

namespace {

constexpr std::pair<OpKind, std::string_view> kOpKinds[] = {
    {OpKind::EditText, "edit_text"}, {OpKind::Retime, "retime"},
    {OpKind::ChangeDelivery, "change_delivery"}, {OpKind::Add, "add"},
    {OpKind::Remove, "remove"}, {OpKind::ReplaceAudio, "replace_audio"},
};

// Value equality that ignores object key order and integer/float representation.
bool same_value(const Json& a, const Json& b) {
  return nlohmann::json::parse(a.dump()) == nlohmann::json::parse(b.dump());
}

[[noreturn]] void reject(const RevisionOp& op, std::string rule, std::string message) {
  throw RejectedWithViolations({{op.event_id, std::move(rule), std::move(message)}});
}

ADEvent& find_event(Track& t, const RevisionOp& op) {
  ADEvent* e = t.find(op.event_id);
  if (!e) reject(op, "unknown_event", "no event '" + op.event_id + "'");
  return *e;
}

void check_before(RevisionOp& op, const Json& actual) {
  if (op.before.is_null()) {
    op.before = actual;
  } else if (!same_value(op.before, actual)) {
    reject(op, "before_mismatch",
           std::string(to_string(op.kind)) + ": expected " + op.before.dump() + ", found " +
               actual.dump());
  }
}

}  // namespace

std::string_view to_string(OpKind k) {
  for (const auto& [kind, name] : kOpKinds) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<OpKind> parse_op_kind(std::string_view s) {
  for (const auto& [kind, name] : kOpKinds) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

Track apply_ops(const Track& track, std::vector<RevisionOp>& ops, std::string_view author_id,
                const DurationModel& duration) {
  Track t = track;
  const bool human = author_id != kAiAuthor;
  for (auto& op : ops) {
    switch (op.kind) {
      case OpKind::EditText: {
        ADEvent& e = find_event(t, op);
        if (!op.after.is_string()) reject(op, "bad_payload", "edit_text: after must be text");
        check_before(op, e.text);
        e.text = op.after.get<std::string>();
        e.estimated_duration = duration.estimate(e.text);
        e.audio_uri.reset();
        if (human) e.source = Source::Human;
        break;
      }
      case OpKind::Retime: {
        ADEvent& e = find_event(t, op);
        if (!op.after.is_number()) reject(op, "bad_payload", "retime: after must be a number");
        check_before(op, e.start_time);
        e.start_time = op.after.get<double>();
        break;
      }
      case OpKind::ChangeDelivery: {
        ADEvent& e = find_event(t, op);
        auto d = op.after.is_string() ? parse_delivery(op.after.get<std::string>()) : std::nullopt;
        if (!d) reject(op, "bad_payload", "change_delivery: after must be inline or extended");
        check_before(op, std::string(to_string(e.delivery)));
        e.delivery = *d;
        break;
      }
      case OpKind::Add: {
        if (!op.before.is_null()) reject(op, "before_mismatch", "add: before must be null");
        if (!op.after.is_object()) reject(op, "bad_payload", "add: after must be an event");
        ADEvent e;
        try {
          Json ev = op.after;
          if (op.event_id.empty() && ev.contains("event_id") && ev["event_id"].is_string()) {
            op.event_id = ev["event_id"].get<std::string>();
          }
          if (!ev.contains("event_id")) ev["event_id"] = op.event_id;
          e = event_from_json(ev);
        } catch (const Error& err) {
          reject(op, "bad_payload", std::string("add: ") + err.what());
        }
        if (e.event_id != op.event_id) reject(op, "bad_payload", "add: event_id disagrees with op");
        if (t.find(e.event_id)) reject(op, "duplicate_event", "event '" + e.event_id + "' exists");
        if (human) e.source = Source::Human;
        op.after = to_json(e);
        t.events.push_back(std::move(e));
        break;
      }
      case OpKind::Remove: {
        ADEvent& e = find_event(t, op);
        check_before(op, to_json(e));
        if (!op.after.is_null()) reject(op, "bad_payload", "remove: after must be null");
        const std::string id = e.event_id;
        std::erase_if(t.events, [&](const ADEvent& x) { return x.event_id == id; });
        break;
      }
      case OpKind::ReplaceAudio: {
        ADEvent& e = find_event(t, op);
        const Json* uri = op.after.is_object() && op.after.contains("audio_uri")
                              ? &op.after["audio_uri"]
                              : nullptr;
        const Json* dur = op.after.is_object() && op.after.contains("duration")
                              ? &op.after["duration"]
                              : nullptr;
        if (!uri || !uri->is_string() || !dur || !dur->is_number() || !(dur->get<double>() > 0)) {
          reject(op, "bad_payload", "replace_audio: after must be {audio_uri, duration > 0}");
        }
        check_before(op, e.audio_uri ? Json(*e.audio_uri) : Json());
        e.audio_uri = uri->get<std::string>();
        e.estimated_duration = dur->get<double>();
        break;
      }
    }
  }
  canonicalize(t);
  return t;
}

Track replay(std::string_view track_id, std::string_view asset_id, std::span<const Revision> log,
             const DurationModel& duration) {
  Track t;
  t.track_id = std::string(track_id);
  t.asset_id = std::string(asset_id);
  for (const auto& rev : log) {
    auto ops = rev.ops;
    t = apply_ops(t, ops, rev.author_id, duration);
  }
  return t;
}

std::string track_text(const Track& track) {
  std::vector<const ADEvent*> events;
  for (const auto& e : track.events) events.push_back(&e);
  std::stable_sort(events.begin(), events.end(),
                   [](const ADEvent* a, const ADEvent* b) { return canonical_less(*a, *b); });
  std::vector<std::string> texts;
  for (const auto* e : events) texts.push_back(e->text);
  return detail::join(texts, "\n");
}

Attribution compute_attribution(const Draft& draft) {
  Attribution a;
  a.raw_credit[std::string(kAiAuthor)] = 1.0;
  const DurationModel duration{draft.words_per_minute, 0.0};
  Track t;
  t.track_id = draft.current.track_id;
  t.asset_id = draft.current.asset_id;
  std::u32string prev_text;
  for (std::size_t i = 0; i < draft.log.size(); ++i) {
    const auto& rev = draft.log[i];
    auto ops = rev.ops;
    t = apply_ops(t, ops, rev.author_id, duration);
    std::u32string text = decode_utf8(track_text(t));
    if (i > 0) {
      const double denom = static_cast<double>(std::max({prev_text.size(), text.size(), std::size_t{1}}));
      const double c = std::clamp(static_cast<double>(levenshtein(prev_text, text)) / denom, 0.0, 1.0);
      a.raw_credit[rev.author_id] += c;
    }
    prev_text = std::move(text);
  }
  double total = 0.0;
  for (const auto& [author, credit] : a.raw_credit) total += credit;
  for (const auto& [author, credit] : a.raw_credit) a.shares[author] = credit / total;
  return a;
}

Json to_json(const RevisionOp& op) {
  Json j;
  j["event_id"] = op.event_id;
  j["kind"] = std::string(to_string(op.kind));
  j["before"] = op.before;
  j["after"] = op.after;
  return j;
}

RevisionOp op_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("revision op: expected an object", 0);
  RevisionOp op;
  op.event_id = j.contains("event_id") ? detail::get_string(j, "event_id", "revision op") : "";
  const std::string kind = detail::get_string(j, "kind", "revision op");
  auto k = parse_op_kind(kind);
  if (!k) throw ParseError("revision op: unknown kind '" + kind + "'", 0);
  op.kind = *k;
  if (auto it = j.find("before"); it != j.end()) op.before = *it;
  if (auto it = j.find("after"); it != j.end()) op.after = *it;
  if (op.event_id.empty() && op.kind != OpKind::Add) {
    throw ParseError("revision op: event_id required", 0);
  }
  return op;
}

Json to_json(const Revision& r) {
  Json j;
  j["revision_id"] = r.revision_id;
  j["author_id"] = r.author_id;
  j["timestamp"] = r.timestamp;
  j["ops"] = Json::array();
  for (const auto& op : r.ops) j["ops"].push_back(to_json(op));
  return j;
}

Revision revision_from_json(const Json& j) {
  Revision r;
  r.revision_id = detail::get_string(j, "revision_id", "revision");
  r.author_id = detail::get_string(j, "author_id", "revision");
  r.timestamp = detail::get_string(j, "timestamp", "revision");
  for (const auto& op : detail::require(j, "ops", "revision")) r.ops.push_back(op_from_json(op));
  return r;
}

Json to_json(const Feedback& f) {
  Json j;
  j["author_id"] = f.author_id;
  j["rating"] = f.rating;
  j["comment"] = f.comment;
  j["timestamp"] = f.timestamp;
  return j;
}

Feedback feedback_from_json(const Json& j) {
  Feedback f;
  f.author_id = j.contains("author_id") ? detail::get_string(j, "author_id", "feedback") : "";
  f.rating = static_cast<int>(detail::get_integer(j, "rating", "feedback"));
  f.comment = detail::get_optional_string(j, "comment", "feedback").value_or("");
  f.timestamp = detail::get_optional_string(j, "timestamp", "feedback").value_or("");
  return f;
}

Json to_json(const Draft& d) {
  Json j;
  j["draft_id"] = d.draft_id;
  j["asset"] = to_json(d.asset);
  j["owner_id"] = d.owner_id ? Json(*d.owner_id) : Json();
  j["version"] = d.version;
  j["collab_enabled"] = d.collab_enabled;
  j["published"] = d.published;
  j["words_per_minute"] = d.words_per_minute;
  j["track"] = to_json(d.current);
  j["revision_log"] = Json::array();
  for (const auto& r : d.log) j["revision_log"].push_back(to_json(r));
  j["feedback"] = Json::array();
  for (const auto& f : d.feedback) j["feedback"].push_back(to_json(f));
  return j;
}

Draft draft_from_json(const Json& j) {
  Draft d;
  d.draft_id = detail::get_string(j, "draft_id", "draft");
  d.asset = asset_from_json(detail::require(j, "asset", "draft"));
  d.owner_id = detail::get_optional_string(j, "owner_id", "draft");
  d.version = static_cast<int>(detail::get_integer(j, "version", "draft"));
  d.collab_enabled = detail::get_bool(j, "collab_enabled", "draft");
  d.published = detail::get_bool(j, "published", "draft");
  d.words_per_minute = detail::get_number(j, "words_per_minute", "draft");
  d.current = import_track(detail::require(j, "track", "draft").dump());
  if (auto it = j.find("revision_log"); it != j.end()) {
    for (const auto& r : *it) d.log.push_back(revision_from_json(r));
  }
  if (auto it = j.find("feedback"); it != j.end()) {
    for (const auto& f : *it) d.feedback.push_back(feedback_from_json(f));
  }
  return d;
}

Json to_json(const Attribution& a) {
  Json j;
  j["shares"] = Json::object();
  for (const auto& [author, share] : a.shares) j["shares"][author] = share;
  j["raw_credit"] = Json::object();
  for (const auto& [author, credit] : a.raw_credit) j["raw_credit"][author] = credit;
  return j;
}

void MemoryDraftStorage::save(const Draft& draft) {
  std::lock_guard lock(mu_);
  drafts_[draft.draft_id] = draft;
}

void MemoryDraftStorage::append(const Draft& draft, const Revision&) { save(draft); }

std::vector<Draft> MemoryDraftStorage::load_all() {
  std::lock_guard lock(mu_);
  std::vector<Draft> out;
  for (const auto& [id, d] : drafts_) out.push_back(d);
  return out;
}

FileDraftStorage::FileDraftStorage(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void FileDraftStorage::write_snapshot(const Draft& draft) {
  Json snap = to_json(draft);
  snap.erase("revision_log");
  detail::write_file(root_ / draft.draft_id / "snapshot.json", detail::dump(snap));
}

void FileDraftStorage::save(const Draft& draft) {
  std::lock_guard lock(mu_);
  const auto dir = root_ / draft.draft_id;
  const auto log_path = dir / "log.jsonl";
  if (!std::filesystem::exists(log_path)) {
    std::string lines;
    for (const auto& r : draft.log) lines += to_json(r).dump() + "\n";
    detail::write_file(log_path, lines);
  }
  write_snapshot(draft);
}

void FileDraftStorage::append(const Draft& draft, const Revision& revision) {
  std::lock_guard lock(mu_);
  const auto dir = root_ / draft.draft_id;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "log.jsonl", std::ios::binary | std::ios::app);
    out << to_json(revision).dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot append to revision log of " + draft.draft_id);
  }
  write_snapshot(draft);
}

std::vector<Draft> FileDraftStorage::load_all() {
  std::lock_guard lock(mu_);
  std::vector<Draft> out;
  if (!std::filesystem::exists(root_)) return out;
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "snapshot.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    Json snap = detail::parse_json(detail::read_file(dir / "snapshot.json"), "draft snapshot");
    Draft d = draft_from_json(snap);
    d.log.clear();
    for (const auto& rec : detail::parse_records(detail::read_file(dir / "log.jsonl"), "revision log")) {
      d.log.push_back(revision_from_json(rec));
    }
    d.current = replay(d.current.track_id, d.current.asset_id, d.log,
                       DurationModel{d.words_per_minute, 0.0});
    d.version = static_cast<int>(d.log.size());
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

DraftService::DraftService(std::shared_ptr<DraftStorage> storage, DraftServiceOptions options)
    : storage_(std::move(storage)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = utc_now;
  for (auto& d : storage_->load_all()) {
    const std::string id = d.draft_id;
    if (id.rfind("draft-", 0) == 0) {
      try {
        next_id_ = std::max<std::size_t>(next_id_, std::stoull(id.substr(6)) + 1);
      } catch (const std::exception&) {
      }
    }
    auto e = std::make_shared<Entry>();
    e->draft = std::move(d);
    drafts_.emplace(id, std::move(e));
  }
}

std::string DraftService::now() const { return options_.clock(); }

std::shared_ptr<DraftService::Entry> DraftService::entry(std::string_view draft_id) const {
  std::shared_lock lock(map_mu_);
  auto it = drafts_.find(draft_id);
  if (it == drafts_.end()) throw NotFound("draft '" + std::string(draft_id) + "' not found");
  return it->second;
}

bool DraftService::is_author(const Draft& draft, std::string_view who) {
  if (draft.owner_id && *draft.owner_id == who) return true;
  return std::any_of(draft.log.begin(), draft.log.end(), [&](const Revision& r) {
    return r.author_id != kAiAuthor && r.author_id == who;
  });
}

void DraftService::require_author(Draft& draft, std::string_view caller) const {
  if (caller.empty() || caller == kAiAuthor) throw Forbidden("a human author id is required");
  if (!draft.owner_id) {
    draft.owner_id = std::string(caller);
    return;
  }
  if (!is_author(draft, caller)) {
    throw Forbidden("'" + std::string(caller) + "' is not an author of " + draft.draft_id);
  }
}

Draft DraftService::create_draft(const MediaAsset& asset, const Track& ai_track,
                                 std::optional<std::string> owner_id) {
  Track track = ai_track;
  if (track.asset_id.empty()) track.asset_id = asset.asset_id;
  canonicalize(track);
  require_valid(track, asset);

  Draft d;
  d.asset = asset;
  d.owner_id = std::move(owner_id);
  d.collab_enabled = true;
  d.published = false;
  d.words_per_minute = options_.duration.words_per_minute;
  Revision rev{"r1", std::string(kAiAuthor), now(), {}};
  for (const auto& e : track.events) rev.ops.push_back({e.event_id, OpKind::Add, Json(), to_json(e)});
  Track empty;
  empty.track_id = track.track_id;
  empty.asset_id = track.asset_id;
  d.current = apply_ops(empty, rev.ops, kAiAuthor, options_.duration);
  d.log.push_back(std::move(rev));
  d.version = 1;

  std::unique_lock lock(map_mu_);
  d.draft_id = "draft-" + std::to_string(next_id_++);
  storage_->save(d);
  auto e = std::make_shared<Entry>();
  e->draft = d;
  drafts_.emplace(d.draft_id, std::move(e));
  return d;
}

Draft DraftService::get(std::string_view draft_id) const {
  auto e = entry(draft_id);
  std::lock_guard lock(e->mu);
  return e->draft;
}

std::vector<std::string> DraftService::list() const {
  std::shared_lock lock(map_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, e] : drafts_) ids.push_back(id);
  return ids;
}

int DraftService::apply_revision(std::string_view draft_id, int expected_version,
                                 std::string_view author_id, std::vector<RevisionOp> ops) {
  auto e = entry(draft_id);
  std::lock_guard lock(e->mu);
  Draft& d = e->draft;
  if (d.published) throw Locked(d.draft_id + " is published; unpublish before revising");
  if (expected_version != d.version) {
    throw Conflict("expected version " + std::to_string(expected_version) + " but " + d.draft_id +
                       " is at " + std::to_string(d.version),
                   d.version);
  }
  if (author_id.empty()) throw Forbidden("author id is required");
  const bool ai = author_id == kAiAuthor;
  const bool claims = !ai && !d.owner_id;
  if (!ai && !claims && *d.owner_id != author_id && !d.collab_enabled) {
    throw Forbidden("collaborative editing is disabled for " + d.draft_id);
  }
  if (ops.empty()) throw RejectedWithViolations({{"", "empty_revision", "revision has no ops"}});

  const DurationModel duration{d.words_per_minute, 0.0};
  Track next = apply_ops(d.current, ops, author_id, duration);
  auto violations = validate_track(next, d.asset);
  if (!violations.empty()) throw RejectedWithViolations(std::move(violations));

  Draft updated = d;
  if (claims) updated.owner_id = std::string(author_id);
  updated.current = std::move(next);
  updated.version = d.version + 1;
  Revision rev{"r" + std::to_string(updated.version), std::string(author_id), now(), std::move(ops)};
  updated.log.push_back(rev);
  storage_->append(updated, rev);
  d = std::move(updated);
  return d.version;
}

DraftService::NudgeResult DraftService::nudge_event(std::string_view draft_id, int expected_version,
                                                    std::string_view event_id, long long frames,
                                                    std::string_view author_id) {
  RevisionOp op{std::string(event_id), OpKind::Retime, Json(), Json()};
  Seconds target = 0.0;
  {
    auto e = entry(draft_id);
    std::lock_guard lock(e->mu);
    const ADEvent* ev = e->draft.current.find(event_id);
    if (!ev) throw NotFound("event '" + std::string(event_id) + "' not found");
    const auto& asset = e->draft.asset;
    const double moved = ev->start_time + static_cast<double>(frames) / asset.fps;
    target = std::clamp(std::round(moved * 1e6) / 1e6, 0.0, asset.duration);
    op.before = ev->start_time;
    op.after = target;
  }
  // A change landing between the two locks bumps the version, so apply_revision rejects it.
  const int version = apply_revision(draft_id, expected_version, author_id, {op});
  return {target, version};
}

void DraftService::set_collab(std::string_view draft_id, bool enabled, std::string_view caller) {
  auto e = entry(draft_id);
  std::lock_guard lock(e->mu);
  Draft updated = e->draft;
  require_author(updated, caller);
  updated.collab_enabled = enabled;
  storage_->save(updated);
  e->draft = std::move(updated);
}

void DraftService::publish(std::string_view draft_id, std::string_view caller) {
  auto e = entry(draft_id);
  std::lock_guard lock(e->mu);
  Draft updated = e->draft;
  require_author(updated, caller);
  require_valid(updated.current, updated.asset);
  updated.published = true;
  storage_->save(updated);
  e->draft = std::move(updated);
}

void DraftService::unpublish(std::string_view draft_id, std::string_view caller) {
  auto e = entry(draft_id);
  std::lock_guard lock(e->mu);
  Draft updated = e->draft;
  require_author(updated, caller);
  updated.published = false;
  storage_->save(updated);
  e->draft = std::move(updated);
}

Attribution DraftService::attribution(std::string_view draft_id) const {
  return compute_attribution(get(draft_id));
}

void DraftService::add_feedback(std::string_view draft_id, Feedback feedback) {
  if (feedback.rating < 1 || feedback.rating > 5) {
    throw InvalidArgument("rating must be between 1 and 5");
  }
  auto e = entry(draft_id);
  std::lock_guard lock(e->mu);
  if (feedback.timestamp.empty()) feedback.timestamp = now();
  Draft updated = e->draft;
  updated.feedback.push_back(std::move(feedback));
  storage_->save(updated);
  e->draft = std::move(updated);
}

}  // namespace adx3
