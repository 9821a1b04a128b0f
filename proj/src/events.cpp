// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/events.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include "recip/csv.hpp"
#include "recip/error.hpp"
#include "recip/time_util.hpp"

namespace recip {

const std::vector<std::uint32_t> Corpus::kEmpty;

Corpus Corpus::from_events(std::vector<Event> events, std::vector<std::string> user_names,
                           std::vector<std::string> post_names,
                           std::vector<std::string> tag_names,
                           std::optional<std::int64_t> start,
                           std::optional<std::int64_t> end) {
  Corpus c;
  c.events_ = std::move(events);
  c.user_names_ = std::move(user_names);
  c.post_names_ = std::move(post_names);
  c.tag_names_ = std::move(tag_names);

  for (const Event& e : c.events_) {
    if (e.user >= c.user_names_.size() || e.post >= c.post_names_.size() ||
        (e.parent != kNoPost && e.parent >= c.post_names_.size())) {
      throw_error(ErrorCode::Internal, "event references an unknown name-table entry");
    }
    for (std::uint32_t t : e.tags) {
      if (t >= c.tag_names_.size()) {
        throw_error(ErrorCode::Internal, "event references an unknown tag");
      }
    }
    if (e.kind == EventKind::Answer && e.parent == kNoPost) {
      throw_error(ErrorCode::Parse,
                  "answer post '" + c.post_names_[e.post] + "' has no parent post id");
    }
    if (e.kind == EventKind::Question && e.tags.empty()) {
      throw_error(ErrorCode::Parse,
                  "question post '" + c.post_names_[e.post] + "' has no tags");
    }
  }

  std::sort(c.events_.begin(), c.events_.end(), [&](const Event& a, const Event& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return c.post_names_[a.post] < c.post_names_[b.post];
  });

  // Indexes. Post ids must be unique across the corpus.
  std::unordered_map<std::uint32_t, std::uint32_t> seen_post;
  seen_post.reserve(c.events_.size());
  c.events_by_user_.resize(c.user_names_.size());
  c.first_event_.assign(c.user_names_.size(), 0);
  std::vector<bool> has_first(c.user_names_.size(), false);
  for (std::uint32_t i = 0; i < c.events_.size(); ++i) {
    const Event& e = c.events_[i];
    if (!seen_post.emplace(e.post, i).second) {
      throw_error(ErrorCode::Parse, "duplicate post id '" + c.post_names_[e.post] + "'");
    }
    if (e.kind == EventKind::Question) c.question_by_post_.emplace(e.post, i);
    c.events_by_user_[e.user].push_back(i);
    if (!has_first[e.user]) {
      has_first[e.user] = true;
      c.first_event_[e.user] = e.timestamp;
    }
  }
  for (std::uint32_t i = 0; i < c.events_.size(); ++i) {
    Event& e = c.events_[i];
    if (e.kind != EventKind::Answer) continue;
    if (c.question_by_post_.contains(e.parent)) {
      c.answers_by_post_[e.parent].push_back(i);
    } else {
      e.orphaned = true;
      ++c.orphans_;
    }
  }

  if (!c.events_.empty()) {
    c.start_ = c.events_.front().timestamp;
    c.end_ = c.events_.back().timestamp;
  }
  if (start) c.start_ = *start;
  if (end) c.end_ = *end;
  if (!c.events_.empty() &&
      (c.events_.front().timestamp < c.start_ || c.events_.back().timestamp > c.end_)) {
    throw_error(ErrorCode::InvalidArgument,
                "observation bounds [" + format_iso8601_utc(c.start_) + ", " +
                    format_iso8601_utc(c.end_) + "] do not cover the event log");
  }
  if (c.start_ > c.end_) {
    throw_error(ErrorCode::InvalidArgument, "observation start is after observation end");
  }
  return c;
}

std::uint32_t Corpus::question_event(std::uint32_t post) const noexcept {
  auto it = question_by_post_.find(post);
  return it == question_by_post_.end() ? npos : it->second;
}

const std::vector<std::uint32_t>& Corpus::answers_to(std::uint32_t post) const noexcept {
  auto it = answers_by_post_.find(post);
  return it == answers_by_post_.end() ? kEmpty : it->second;
}

const std::vector<std::uint32_t>& Corpus::events_of(std::uint32_t user) const noexcept {
  return user < events_by_user_.size() ? events_by_user_[user] : kEmpty;
}

std::int64_t Corpus::first_event_time(std::uint32_t user) const noexcept {
  return user < first_event_.size() ? first_event_[user] : 0;
}

bool Corpus::operator==(const Corpus& other) const noexcept {
  if (start_ != other.start_ || end_ != other.end_ ||
      events_.size() != other.events_.size()) {
    return false;
  }
  // Compare by name, not by index: interning order is a parse detail.
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& a = events_[i];
    const Event& b = other.events_[i];
    if (a.kind != b.kind || a.timestamp != b.timestamp || a.score != b.score ||
        a.orphaned != b.orphaned || a.tags.size() != b.tags.size()) {
      return false;
    }
    if (user_names_[a.user] != other.user_names_[b.user]) return false;
    if (post_names_[a.post] != other.post_names_[b.post]) return false;
    const bool ap = a.parent != kNoPost, bp = b.parent != kNoPost;
    if (ap != bp) return false;
    if (ap && post_names_[a.parent] != other.post_names_[b.parent]) return false;
    for (std::size_t t = 0; t < a.tags.size(); ++t) {
      if (tag_names_[a.tags[t]] != other.tag_names_[b.tags[t]]) return false;
    }
  }
  return true;
}

namespace {

class Interner {
 public:
  explicit Interner(std::vector<std::string>& names) : names_(names) {}
  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = index_.try_emplace(s, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(s);
    return it->second;
  }

 private:
  std::vector<std::string>& names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

[[noreturn]] void row_error(std::size_t line, const std::string& field,
                            const std::string& why) {
  throw_error(ErrorCode::Parse,
              "events line " + std::to_string(line) + ", field '" + field + "': " + why);
}

}  // namespace

Corpus parse_events(std::istream& in, std::optional<std::int64_t> start,
                    std::optional<std::int64_t> end) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw_error(ErrorCode::Parse, "events file is empty (missing header)");
  }
  const std::vector<std::string> expected = {"user_id", "kind",  "post_id", "parent_post_id",
                                             "timestamp", "score", "tags"};
  if (fields != expected) {
    throw_error(ErrorCode::Parse, "events header mismatch on line " +
                                      std::to_string(reader.line()) +
                                      "; expected user_id,kind,post_id,parent_post_id,"
                                      "timestamp,score,tags");
  }

  std::vector<Event> events;
  std::vector<std::string> users, posts, tags;
  Interner user_in(users), post_in(posts), tag_in(tags);

  while (reader.next(fields)) {
    const std::size_t line = reader.line();
    if (fields.size() != 7) {
      row_error(line, "row", "expected 7 fields, got " + std::to_string(fields.size()));
    }
    Event e;
    if (fields[0].empty()) row_error(line, "user_id", "empty");
    e.user = user_in.intern(fields[0]);

    if (fields[1] == "question") {
      e.kind = EventKind::Question;
    } else if (fields[1] == "answer") {
      e.kind = EventKind::Answer;
    } else {
      row_error(line, "kind", "expected 'question' or 'answer', got '" + fields[1] + "'");
    }

    if (fields[2].empty()) row_error(line, "post_id", "empty");
    e.post = post_in.intern(fields[2]);

    if (e.kind == EventKind::Answer) {
      if (fields[3].empty()) row_error(line, "parent_post_id", "required for answers");
      e.parent = post_in.intern(fields[3]);
    } else if (!fields[3].empty()) {
      row_error(line, "parent_post_id", "must be empty for questions");
    }

    const auto ts = parse_iso8601_utc(fields[4]);
    if (!ts) row_error(line, "timestamp", "not ISO-8601 UTC ('" + fields[4] + "')");
    e.timestamp = *ts;

    {
      const std::string& s = fields[5];
      int value = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        row_error(line, "score", "not an integer ('" + s + "')");
      }
      e.score = value;
    }

    if (e.kind == EventKind::Question) {
      if (fields[6].empty()) row_error(line, "tags", "questions need at least one tag");
      for (const std::string& t : split_pipe(fields[6])) {
        if (t.empty()) row_error(line, "tags", "empty tag in list");
        e.tags.push_back(tag_in.intern(t));
      }
    } else if (!fields[6].empty()) {
      for (const std::string& t : split_pipe(fields[6])) {
        if (t.empty()) row_error(line, "tags", "empty tag in list");
        e.tags.push_back(tag_in.intern(t));
      }
    }
    events.push_back(std::move(e));
  }

  return Corpus::from_events(std::move(events), std::move(users), std::move(posts),
                             std::move(tags), start, end);
}

void serialize_events(const Corpus& corpus, std::ostream& out, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "user_id,kind,post_id,parent_post_id,timestamp,score,tags\n";
  std::string tag_buf;
  for (const Event& e : corpus.events()) {
    tag_buf.clear();
    for (std::size_t i = 0; i < e.tags.size(); ++i) {
      if (i) tag_buf.push_back('|');
      tag_buf += corpus.tag_names()[e.tags[i]];
    }
    out << csv_escape(corpus.user_names()[e.user]) << ','
        << (e.kind == EventKind::Question ? "question" : "answer") << ','
        << csv_escape(corpus.post_names()[e.post]) << ','
        << (e.parent == kNoPost ? std::string() : csv_escape(corpus.post_names()[e.parent]))
        << ',' << format_iso8601_utc(e.timestamp) << ',' << e.score << ','
        << csv_escape(tag_buf) << '\n';
  }
  if (!out) throw_error(ErrorCode::Io, "failed writing event log");
}

std::vector<std::uint32_t> eligible_questions(const Corpus& corpus, std::int64_t half_length_s,
                                              FilterStats* stats) {
  if (half_length_s <= 0) {
    throw_error(ErrorCode::InvalidArgument, "window half-length must be positive");
  }
  FilterStats local;
  std::vector<std::uint32_t> out;
  const auto& events = corpus.events();
  for (std::uint32_t i = 0; i < events.size(); ++i) {
    const Event& q = events[i];
    if (q.kind != EventKind::Question) continue;
    ++local.questions;
    if (q.timestamp - half_length_s < corpus.start()) {
      ++local.pre_truncated;
      continue;
    }
    if (q.timestamp + half_length_s > corpus.end()) {
      ++local.post_truncated;
      continue;
    }
    bool self = false;
    for (std::uint32_t ai : corpus.answers_to(q.post)) {
      const Event& a = events[ai];
      if (a.user == q.user && a.timestamp <= q.timestamp + half_length_s) {
        self = true;
        break;
      }
    }
    if (self) {
      ++local.self_answered;
      continue;
    }
    ++local.eligible;
    out.push_back(i);
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace recip
