// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace recip {

enum class EventKind : std::uint8_t { Question, Answer };

inline constexpr std::uint32_t kNoPost = 0xffffffffu;

// One row of the event log. Strings are interned: user/post/tag fields are
// indexes into the owning Corpus' name tables.
struct Event {
  std::uint32_t user = 0;
  EventKind kind = EventKind::Question;
  std::uint32_t post = 0;
  std::uint32_t parent = kNoPost;      // answers only; question id being answered
  std::int64_t timestamp = 0;          // seconds since the Unix epoch
  std::int32_t score = 0;
  std::vector<std::uint32_t> tags;     // ordered; tags[0] is the top-level tag
  bool orphaned = false;               // answer whose parent never appears as a question

  friend bool operator==(const Event&, const Event&) = default;
};

// Immutable event log plus lookup indexes. Events are sorted by
// (timestamp, post name); all downstream iteration order derives from it.
class Corpus {
 public:
  // Takes raw events plus the name tables their indexes refer to. Sorts,
  // flags orphans, resolves observation bounds (min/max event time unless
  // given), and builds indexes. Throws on duplicate post ids, answers with
  // missing parent fields, or bounds that do not cover the events.
  static Corpus from_events(std::vector<Event> events,
                            std::vector<std::string> user_names,
                            std::vector<std::string> post_names,
                            std::vector<std::string> tag_names,
                            std::optional<std::int64_t> start = std::nullopt,
                            std::optional<std::int64_t> end = std::nullopt);

  const std::vector<Event>& events() const noexcept { return events_; }
  const std::vector<std::string>& user_names() const noexcept { return user_names_; }
  const std::vector<std::string>& post_names() const noexcept { return post_names_; }
  const std::vector<std::string>& tag_names() const noexcept { return tag_names_; }

  std::int64_t start() const noexcept { return start_; }
  std::int64_t end() const noexcept { return end_; }

  // Event index of the question with this post id, or npos.
  static constexpr std::uint32_t npos = 0xffffffffu;
  std::uint32_t question_event(std::uint32_t post) const noexcept;

  // Event indexes of answers to a question post, sorted like events().
  const std::vector<std::uint32_t>& answers_to(std::uint32_t post) const noexcept;

  // Event indexes authored by a user, ascending in event order.
  const std::vector<std::uint32_t>& events_of(std::uint32_t user) const noexcept;

  // Timestamp of a user's first event (account age zero point).
  std::int64_t first_event_time(std::uint32_t user) const noexcept;

  std::size_t orphan_count() const noexcept { return orphans_; }

  bool operator==(const Corpus& other) const noexcept;

 private:
  std::vector<Event> events_;
  std::vector<std::string> user_names_, post_names_, tag_names_;
  std::int64_t start_ = 0, end_ = 0;
  std::size_t orphans_ = 0;
  std::unordered_map<std::uint32_t, std::uint32_t> question_by_post_;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> answers_by_post_;
  std::vector<std::vector<std::uint32_t>> events_by_user_;
  std::vector<std::int64_t> first_event_;
  static const std::vector<std::uint32_t> kEmpty;
};

// Reads the event-log CSV (header required):
//   user_id,kind,post_id,parent_post_id,timestamp,score,tags
// kind is "question" or "answer"; timestamps are strict ISO-8601 UTC; tags
// are pipe-delimited, first tag is top-level. Malformed rows raise
// RecipError{Parse} naming the line and field. Optional bounds override the
// observed min/max event times.
Corpus parse_events(std::istream& in,
                    std::optional<std::int64_t> start = std::nullopt,
                    std::optional<std::int64_t> end = std::nullopt);

// Writes the same format back; parse(serialize(c)) == c.
void serialize_events(const Corpus& corpus, std::ostream& out,
                      const std::string& comment = std::string());

// Eligibility filter for observation windows of half-length H seconds.
struct FilterStats {
  std::size_t questions = 0;        // total question events
  std::size_t pre_truncated = 0;    // t_q - H before corpus start
  std::size_t post_truncated = 0;   // t_q + H after corpus end
  std::size_t self_answered = 0;    // asker answered their own question in-window
  std::size_t eligible = 0;
};

// Returns event indexes of eligible questions in corpus order.
// A question qualifies when its full window [t_q - H, t_q + H] lies inside
// [start, end] and no in-window answer is authored by the asker.
std::vector<std::uint32_t> eligible_questions(const Corpus& corpus,
                                              std::int64_t half_length_s,
                                              FilterStats* stats = nullptr);

}  // namespace recip
