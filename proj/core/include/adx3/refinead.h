// Event-sourced draft store: revisions, collaboration gating, nudging, publishing,
// and edit-distance contribution attribution.
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adx3/duration.h"
#include "adx3/model.h"

namespace adx3 {

inline constexpr std::string_view kAiAuthor = "AI";

/// Edit distance over Unicode scalar values (malformed UTF-8 bytes count as one unit each).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Decodes UTF-8; each malformed byte maps to a distinct value outside the Unicode range.
std::u32string decode_utf8(std::string_view s);

std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

enum class OpKind { EditText, Retime, ChangeDelivery, Add, Remove, ReplaceAudio };
std::string_view to_string(OpKind k);
std::optional<OpKind> parse_op_kind(std::string_view s);

/// before/after payloads by kind:
///   edit_text       text -> text
///   retime          start_time -> start_time
///   change_delivery "inline"/"extended" -> "inline"/"extended"
///   add             null -> event object
///   remove          event object -> null
///   replace_audio   audio_uri or null -> {audio_uri, duration}
struct RevisionOp {
  std::string event_id;
  OpKind kind = OpKind::EditText;
  Json before;
  Json after;
  bool operator==(const RevisionOp&) const = default;
};

struct Revision {
  std::string revision_id;
  std::string author_id;
  std::string timestamp;
  std::vector<RevisionOp> ops;
  bool operator==(const Revision&) const = default;
};

struct Feedback {
  std::string author_id;
  int rating = 0;
  std::string comment;
  std::string timestamp;
  bool operator==(const Feedback&) const = default;
};

struct Draft {
  std::string draft_id;
  MediaAsset asset;
  std::optional<std::string> owner_id;
  Track current;
  int version = 0;
  bool collab_enabled = true;
  bool published = false;
  /// Speech rate used to re-estimate durations after text edits.
  double words_per_minute = 150.0;
  std::vector<Revision> log;
  std::vector<Feedback> feedback;
  bool operator==(const Draft&) const = default;
};

/// Applies ops in order to a copy of `track`. A before-value that does not match the current
/// state, an unknown event, or a duplicate add raises RejectedWithViolations. Absent (null)
/// before-values other than for add are filled in from the current state. Text edits by a
/// non-AI author mark the event human-sourced, re-estimate its duration and clear its audio.
Track apply_ops(const Track& track, std::vector<RevisionOp>& ops, std::string_view author_id,
                const DurationModel& duration);

/// Rebuilds the track from an empty one with the given ids by replaying `log`.
Track replay(std::string_view track_id, std::string_view asset_id,
             std::span<const Revision> log, const DurationModel& duration);

/// Event texts in canonical order, newline-joined.
std::string track_text(const Track& track);

struct Attribution {
  std::map<std::string, double> shares;
  std::map<std::string, double> raw_credit;
};

/// AI holds raw credit 1 for the initial draft; revision i >= 2 credits its author with
/// lev(text_{i-1}, text_i) / max(|text_{i-1}|, |text_i|, 1). Shares are normalized credits.
Attribution compute_attribution(const Draft& draft);

Json to_json(const RevisionOp& op);
RevisionOp op_from_json(const Json& j);
Json to_json(const Revision& r);
Revision revision_from_json(const Json& j);
Json to_json(const Feedback& f);
Feedback feedback_from_json(const Json& j);
/// Full draft including the revision log.
Json to_json(const Draft& d);
Draft draft_from_json(const Json& j);
Json to_json(const Attribution& a);

/// Persistence behind the service. Implementations need not be thread-safe per draft;
/// the service serializes writes to each draft.
class DraftStorage {
 public:
  virtual ~DraftStorage() = default;
  /// Stores a new draft or updated metadata (flags, feedback).
  virtual void save(const Draft& draft) = 0;
  /// Persists `draft` whose log ends with a newly appended revision.
  virtual void append(const Draft& draft, const Revision& revision) = 0;
  virtual std::vector<Draft> load_all() = 0;
};

class MemoryDraftStorage final : public DraftStorage {
 public:
  void save(const Draft& draft) override;
  void append(const Draft& draft, const Revision& revision) override;
  std::vector<Draft> load_all() override;

 private:
  std::mutex mu_;
  std::map<std::string, Draft> drafts_;
};

/// <root>/<draft_id>/log.jsonl (append-only revisions) and snapshot.json (everything else).
/// On load the track is rebuilt from the log, so a snapshot lagging behind the log is fine.
class FileDraftStorage final : public DraftStorage {
 public:
  explicit FileDraftStorage(std::filesystem::path root);
  void save(const Draft& draft) override;
  void append(const Draft& draft, const Revision& revision) override;
  std::vector<Draft> load_all() override;

 private:
  void write_snapshot(const Draft& draft);
  std::filesystem::path root_;
  std::mutex mu_;
};

struct DraftServiceOptions {
  DurationModel duration;
  /// Timestamp source for revisions and feedback; defaults to UTC ISO-8601 wall time.
  std::function<std::string()> clock;
};

class DraftService {
 public:
  explicit DraftService(std::shared_ptr<DraftStorage> storage, DraftServiceOptions options = {});

  /// New draft at version 1 with collaboration enabled and one AI revision adding every event.
  /// Throws ValidationFailed for an invalid track.
  Draft create_draft(const MediaAsset& asset, const Track& ai_track,
                     std::optional<std::string> owner_id = std::nullopt);

  /// Throws NotFound.
  Draft get(std::string_view draft_id) const;
  std::vector<std::string> list() const;

  /// Throws NotFound, Locked, Conflict, Forbidden, or RejectedWithViolations; returns the new
  /// version. The first human reviser of an ownerless draft becomes its owner.
  int apply_revision(std::string_view draft_id, int expected_version, std::string_view author_id,
                     std::vector<RevisionOp> ops);

  struct NudgeResult {
    Seconds start_time = 0.0;
    int version = 0;
  };
  /// Moves an event by whole frames, clamped to the asset. Throws NotFound for an unknown
  /// event, plus the apply_revision errors.
  NudgeResult nudge_event(std::string_view draft_id, int expected_version,
                          std::string_view event_id, long long frames, std::string_view author_id);

  void set_collab(std::string_view draft_id, bool enabled, std::string_view caller);
  /// Throws ValidationFailed when the current track is invalid.
  void publish(std::string_view draft_id, std::string_view caller);
  void unpublish(std::string_view draft_id, std::string_view caller);

  Attribution attribution(std::string_view draft_id) const;
  void add_feedback(std::string_view draft_id, Feedback feedback);

  static bool is_author(const Draft& draft, std::string_view who);

 private:
  struct Entry {
    mutable std::mutex mu;
    Draft draft;
  };
  std::shared_ptr<Entry> entry(std::string_view draft_id) const;
  void require_author(Draft& draft, std::string_view caller) const;
  std::string now() const;

  std::shared_ptr<DraftStorage> storage_;
  DraftServiceOptions options_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::shared_ptr<Entry>, std::less<>> drafts_;
  std::size_t next_id_ = 1;
};

}  // namespace adx3
