#include "adx3/rubric.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "json_util.h"

namespace adx3 {

namespace {

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(i, rng));
    std::swap(v[i - 1], v[j]);
  }
}

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  Stat stat() const {
    Stat s{n, mean, std::nullopt};
    if (n >= 2) s.sd = std::sqrt(m2 / static_cast<double>(n - 1));
    return s;
  }
};

// RFC 4180 fields; quoted fields may contain commas, quotes ("") and line breaks.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      ++i;
      end_row();
    } else if (c == '\n' || c == '\r') {
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw ParseError("ratings file: unterminated quoted field", text.size());
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::optional<std::size_t> dimension_index(std::string_view name) {
  for (std::size_t i = 0; i < kDimensions.size(); ++i) {
    if (kDimensions[i] == name) return i;
  }
  if (name == "Strategic Use of Delivery Method") return 5;
  if (name == "Track Placement") return 6;
  return std::nullopt;
}

void validate_rating(const RatingRecord& r) {
  std::vector<Violation> v;
  const std::string id = r.rater_id + "/" + r.video_id + "/" + r.condition_label;
  if (r.rater_id.empty()) v.push_back({id, "missing_rater", "rater_id is empty"});
  if (r.video_id.empty()) v.push_back({id, "missing_video", "video_id is empty"});
  if (std::find(kConditionLabels.begin(), kConditionLabels.end(), r.condition_label) ==
      kConditionLabels.end()) {
    v.push_back({id, "bad_label", "condition_label must be A, B or C"});
  }
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    if (r.scores[i] < 1 || r.scores[i] > 5) {
      v.push_back({id, "score_out_of_range",
                   std::string(kDimensions[i]) + " score " + std::to_string(r.scores[i]) +
                       " is outside 1..5"});
    }
  }
  if (!v.empty()) throw ValidationFailed(std::move(v));
}

const std::string& AssignmentPlan::unblind(std::string_view rater, std::string_view video,
                                           std::string_view label) const {
  for (const auto& rp : raters) {
    if (rp.rater_id != rater) continue;
    auto v = rp.videos.find(std::string(video));
    if (v == rp.videos.end()) break;
    auto l = v->second.labels.find(std::string(label));
    if (l == v->second.labels.end()) break;
    return l->second;
  }
  throw NotFound("no assignment for " + std::string(rater) + "/" + std::string(video) + "/" +
                 std::string(label));
}

const std::string& AssignmentPlan::blind(std::string_view rater, std::string_view video,
                                         std::string_view model) const {
  for (const auto& rp : raters) {
    if (rp.rater_id != rater) continue;
    auto v = rp.videos.find(std::string(video));
    if (v == rp.videos.end()) break;
    for (const auto& [label, m] : v->second.labels) {
      if (m == model) return label;
    }
    break;
  }
  throw NotFound("no label for " + std::string(rater) + "/" + std::string(video) + "/" +
                 std::string(model));
}

const Video& AssignmentPlan::video(std::string_view video_id) const {
  for (const auto& v : videos) {
    if (v.video_id == video_id) return v;
  }
  throw NotFound("unknown video '" + std::string(video_id) + "'");
}

AssignmentPlan make_assignment(std::span<const std::string> raters, std::span<const Video> videos,
                               std::span<const std::string> models, std::uint64_t seed) {
  if (models.size() != 3 || std::set<std::string>(models.begin(), models.end()).size() != 3) {
    throw CardinalityError("exactly three distinct models are required, got " +
                           std::to_string(models.size()));
  }
  if (raters.empty() || videos.empty()) throw InvalidArgument("raters and videos must be non-empty");
  if (std::set<std::string>(raters.begin(), raters.end()).size() != raters.size()) {
    throw InvalidArgument("duplicate rater id");
  }
  std::set<std::string> video_ids;
  for (const auto& v : videos) video_ids.insert(v.video_id);
  if (video_ids.size() != videos.size()) throw InvalidArgument("duplicate video id");

  AssignmentPlan plan;
  plan.seed = seed;
  plan.models.assign(models.begin(), models.end());
  plan.videos.assign(videos.begin(), videos.end());
  std::mt19937_64 rng(seed);
  for (const auto& rater : raters) {
    RaterPlan rp;
    rp.rater_id = rater;
    for (const auto& v : videos) rp.video_order.push_back(v.video_id);
    shuffle(rp.video_order, rng);
    for (const auto& v : videos) {
      std::vector<std::string> assigned = plan.models;
      shuffle(assigned, rng);
      std::vector<std::string> order(kConditionLabels.begin(), kConditionLabels.end());
      shuffle(order, rng);
      VideoAssignment va;
      for (std::size_t i = 0; i < kConditionLabels.size(); ++i) {
        va.labels[std::string(kConditionLabels[i])] = assigned[i];
      }
      va.viewing_order = std::move(order);
      rp.videos[v.video_id] = std::move(va);
    }
    plan.raters.push_back(std::move(rp));
  }
  return plan;
}

Json to_json(const AssignmentPlan& plan) {
  Json j;
  j["seed"] = plan.seed;
  j["models"] = plan.models;
  j["videos"] = Json::array();
  for (const auto& v : plan.videos) {
    j["videos"].push_back({{"video_id", v.video_id}, {"category", std::string(to_string(v.category))}});
  }
  j["raters"] = Json::array();
  for (const auto& rp : plan.raters) {
    Json r;
    r["rater_id"] = rp.rater_id;
    r["video_order"] = rp.video_order;
    r["videos"] = Json::object();
    for (const auto& vid : rp.video_order) {
      const auto& va = rp.videos.at(vid);
      Json labels = Json::object();
      for (const auto& [label, model] : va.labels) labels[label] = model;
      r["videos"][vid] = {{"labels", labels}, {"viewing_order", va.viewing_order}};
    }
    j["raters"].push_back(std::move(r));
  }
  return j;
}

AssignmentPlan plan_from_json(const Json& j) {
  AssignmentPlan plan;
  plan.seed = static_cast<std::uint64_t>(detail::get_integer(j, "seed", "plan"));
  for (const auto& m : detail::require(j, "models", "plan")) plan.models.push_back(m.get<std::string>());
  for (const auto& v : detail::require(j, "videos", "plan")) {
    Video video;
    video.video_id = detail::get_string(v, "video_id", "plan video");
    const std::string cat = detail::get_string(v, "category", "plan video");
    auto c = parse_category(cat);
    if (!c) throw ParseError("plan video: unknown category '" + cat + "'", 0);
    video.category = *c;
    plan.videos.push_back(std::move(video));
  }
  for (const auto& r : detail::require(j, "raters", "plan")) {
    RaterPlan rp;
    rp.rater_id = detail::get_string(r, "rater_id", "plan rater");
    for (const auto& v : detail::require(r, "video_order", "plan rater")) {
      rp.video_order.push_back(v.get<std::string>());
    }
    for (const auto& [vid, va] : detail::require(r, "videos", "plan rater").items()) {
      VideoAssignment a;
      for (const auto& [label, model] : detail::require(va, "labels", "plan video").items()) {
        a.labels[label] = model.get<std::string>();
      }
      for (const auto& l : detail::require(va, "viewing_order", "plan video")) {
        a.viewing_order.push_back(l.get<std::string>());
      }
      rp.videos[vid] = std::move(a);
    }
    plan.raters.push_back(std::move(rp));
  }
  return plan;
}

std::string RatingStore::record(RatingRecord r) {
  validate_rating(r);
  std::string key = r.rater_id + "/" + r.video_id + "/" + r.condition_label;
  std::lock_guard lock(mu_);
  records_[{r.rater_id, r.video_id, r.condition_label}] = std::move(r);
  return key;
}

std::vector<RatingRecord> RatingStore::snapshot() const {
  std::lock_guard lock(mu_);
  std::vector<RatingRecord> out;
  for (const auto& [k, r] : records_) out.push_back(r);
  return out;
}

std::size_t RatingStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<RatingRecord> parse_ratings_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw ParseError("ratings file: missing header", 0);
  const auto& header = rows.front();
  std::optional<std::size_t> rater_col, video_col, label_col, comment_col;
  std::array<std::optional<std::size_t>, kDimensionCount> dim_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = detail::trim(header[c]);
    if (name == "rater_id") {
      rater_col = c;
    } else if (name == "video_id") {
      video_col = c;
    } else if (name == "condition_label") {
      label_col = c;
    } else if (name == "comment") {
      comment_col = c;
    } else if (auto d = dimension_index(name)) {
      dim_col[*d] = c;
    } else {
      throw ParseError("ratings file: unexpected column '" + name + "'", 0);
    }
  }
  if (!rater_col || !video_col || !label_col) {
    throw ParseError("ratings file: header needs rater_id, video_id, condition_label", 0);
  }
  std::vector<Violation> missing;
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    if (!dim_col[d]) missing.push_back({"", "missing_dimension", std::string(kDimensions[d])});
  }
  if (!missing.empty()) throw ValidationFailed(std::move(missing));

  std::vector<RatingRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](std::size_t c) { return c < row.size() ? detail::trim(row[c]) : std::string(); };
    RatingRecord rec;
    rec.rater_id = cell(*rater_col);
    rec.video_id = cell(*video_col);
    rec.condition_label = cell(*label_col);
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
      const std::string v = cell(*dim_col[d]);
      if (v.empty()) {
        throw ValidationFailed({{rec.rater_id + "/" + rec.video_id + "/" + rec.condition_label,
                                 "missing_dimension",
                                 "row " + std::to_string(r + 1) + ": no " +
                                     std::string(kDimensions[d]) + " score"}});
      }
      std::size_t used = 0;
      int score = 0;
      try {
        score = std::stoi(v, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != v.size()) {
        throw ParseError("ratings file: row " + std::to_string(r + 1) + ": score '" + v +
                             "' is not an integer",
                         0);
      }
      rec.scores[d] = score;
    }
    if (comment_col) rec.comment = row.size() > *comment_col ? row[*comment_col] : "";
    validate_rating(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

std::string write_ratings_csv(std::span<const RatingRecord> records) {
  std::string out = "rater_id,video_id,condition_label";
  for (auto d : kDimensions) out += "," + csv_field(d);
  out += ",comment\r\n";
  for (const auto& r : records) {
    out += csv_field(r.rater_id) + "," + csv_field(r.video_id) + "," + csv_field(r.condition_label);
    for (int s : r.scores) out += "," + std::to_string(s);
    out += "," + csv_field(r.comment) + "\r\n";
  }
  return out;
}

Json to_json(const RatingRecord& r) {
  Json j;
  j["rater_id"] = r.rater_id;
  j["video_id"] = r.video_id;
  j["condition_label"] = r.condition_label;
  if (r.model_id) j["model_id"] = *r.model_id;
  j["scores"] = Json::object();
  for (std::size_t d = 0; d < kDimensionCount; ++d) j["scores"][std::string(kDimensions[d])] = r.scores[d];
  j["comment"] = r.comment;
  return j;
}

RatingRecord rating_from_json(const Json& j) {
  RatingRecord r;
  r.rater_id = detail::get_string(j, "rater_id", "rating");
  r.video_id = detail::get_string(j, "video_id", "rating");
  r.condition_label = detail::get_string(j, "condition_label", "rating");
  r.model_id = detail::get_optional_string(j, "model_id", "rating");
  r.comment = detail::get_optional_string(j, "comment", "rating").value_or("");
  const Json& scores = detail::require(j, "scores", "rating");
  if (!scores.is_object()) throw ParseError("rating: scores must be an object", 0);
  std::array<bool, kDimensionCount> seen{};
  for (const auto& [name, value] : scores.items()) {
    auto d = dimension_index(name);
    if (!d) throw ParseError("rating: unknown dimension '" + name + "'", 0);
    if (!value.is_number_integer()) {
      throw ValidationFailed({{r.rater_id, "score_not_integer", name + " must be an integer"}});
    }
    r.scores[*d] = value.get<int>();
    seen[*d] = true;
  }
  std::vector<Violation> missing;
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    if (!seen[d]) missing.push_back({r.rater_id, "missing_dimension", std::string(kDimensions[d])});
  }
  if (!missing.empty()) throw ValidationFailed(std::move(missing));
  return r;
}

Stat summarize(std::span<const double> values) {
  Welford w;
  for (double v : values) w.add(v);
  return w.stat();
}

Report aggregate(std::span<const RatingRecord> records, const AssignmentPlan& plan) {
  struct Acc {
    Welford overall;
    std::array<Welford, kDimensionCount> criteria;
    std::map<Category, Welford> categories;
  };
  std::map<std::string, Acc> acc;
  // Sorting first makes floating-point accumulation independent of input order.
  std::vector<const RatingRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RatingRecord* a, const RatingRecord* b) {
    return std::tie(a->rater_id, a->video_id, a->condition_label) <
           std::tie(b->rater_id, b->video_id, b->condition_label);
  });
  for (const RatingRecord* r : sorted) {
    const std::string& model = r->model_id ? *r->model_id
                                           : plan.unblind(r->rater_id, r->video_id, r->condition_label);
    const Category cat = plan.video(r->video_id).category;
    Acc& a = acc[model];
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
      const double s = r->scores[d];
      a.overall.add(s);
      a.criteria[d].add(s);
      a.categories[cat].add(s);
    }
  }
  Report report;
  for (const auto& model : plan.models) {
    auto it = acc.find(model);
    if (it == acc.end()) continue;
    ModelReport m;
    m.model_id = model;
    m.overall = it->second.overall.stat();
    for (std::size_t d = 0; d < kDimensionCount; ++d) m.criteria[d] = it->second.criteria[d].stat();
    for (const auto& [cat, w] : it->second.categories) m.categories[cat] = w.stat();
    report.models.push_back(std::move(m));
  }
  return report;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? detail::fixed(*v, 2) : "n/a"; }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_report(const Report& report) {
  if (report.models.empty()) return "no ratings\n";
  constexpr std::size_t kLabel = 38;
  std::string out = pad("Criterion", kLabel);
  for (const auto& m : report.models) out += " | " + pad(m.model_id + " mean", 10) + " " + pad("SD", 6);
  out += "\n";
  auto row = [&](const std::string& label, auto&& stat_of) {
    out += pad(label, kLabel);
    for (const auto& m : report.models) {
      const Stat& s = stat_of(m);
      out += " | " + pad(detail::fixed(s.mean, 2), 10) + " " + pad(cell(s.sd), 6);
    }
    out += "\n";
  };
  row("Overall (pooled over all criteria)", [](const ModelReport& m) -> const Stat& { return m.overall; });
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    row(std::string(kDimensions[d]), [d](const ModelReport& m) -> const Stat& { return m.criteria[d]; });
  }
  out += "\n" + pad("Category", kLabel);
  for (const auto& m : report.models) out += " | " + pad(m.model_id, 17);
  out += "\n";
  for (Category c : {Category::Entertainment, Category::Education, Category::Howto}) {
    bool any = false;
    for (const auto& m : report.models) any = any || m.categories.count(c);
    if (!any) continue;
    out += pad(std::string(to_string(c)), kLabel);
    for (const auto& m : report.models) {
      auto it = m.categories.find(c);
      out += " | " + pad(it == m.categories.end() ? "n/a" : detail::fixed(it->second.mean, 2), 17);
    }
    out += "\n";
  }
  return out;
}

Json to_json(const Report& report) {
  auto stat = [](const Stat& s) {
    Json j;
    j["n"] = s.n;
    j["mean"] = s.mean;
    j["sd"] = s.sd ? Json(*s.sd) : Json();
    return j;
  };
  Json j;
  j["overall_definition"] = "pooled mean of all dimension scores";
  j["models"] = Json::array();
  for (const auto& m : report.models) {
    Json mj;
    mj["model_id"] = m.model_id;
    mj["overall"] = stat(m.overall);
    mj["criteria"] = Json::object();
    for (std::size_t d = 0; d < kDimensionCount; ++d) mj["criteria"][std::string(kDimensions[d])] = stat(m.criteria[d]);
    mj["categories"] = Json::object();
    for (const auto& [c, s] : m.categories) mj["categories"][std::string(to_string(c))] = stat(s);
    j["models"].push_back(std::move(mj));
  }
  return j;
}

}  // namespace adx3
