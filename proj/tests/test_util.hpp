// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared helpers for the test binaries: a scratch-directory guard and a
// small corpus builder so cases can state their event logs inline.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "recip/events.hpp"

namespace testutil {

// mkdtemp wrapper; removes the tree on destruction.
class TmpDir {
 public:
  TmpDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "recip_test_XXXXXX").string();
    if (!mkdtemp(tmpl.data())) {
      std::perror("mkdtemp");
      std::abort();
    }
    path_ = tmpl;
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;

  const std::string& path() const noexcept { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Interns names on the fly so tests can speak in strings.
class CorpusBuilder {
 public:
  CorpusBuilder& question(const std::string& user, const std::string& post,
                          std::int64_t t, std::initializer_list<std::string> tags,
                          std::int32_t score = 0) {
    recip::Event e;
    e.user = intern(users_, user);
    e.kind = recip::EventKind::Question;
    e.post = intern(posts_, post);
    e.timestamp = t;
    e.score = score;
    for (const auto& tag : tags) e.tags.push_back(intern(tags_, tag));
    events_.push_back(std::move(e));
    return *this;
  }

  CorpusBuilder& answer(const std::string& user, const std::string& post,
                        const std::string& parent, std::int64_t t,
                        std::int32_t score = 0) {
    recip::Event e;
    e.user = intern(users_, user);
    e.kind = recip::EventKind::Answer;
    e.post = intern(posts_, post);
    e.parent = intern(posts_, parent);
    e.timestamp = t;
    e.score = score;
    events_.push_back(std::move(e));
    return *this;
  }

  recip::Corpus build(std::optional<std::int64_t> start = std::nullopt,
                      std::optional<std::int64_t> end = std::nullopt) {
    return recip::Corpus::from_events(events_, names(users_), names(posts_),
                                      names(tags_), start, end);
  }

 private:
  struct Table {
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::string> list;
  };
  static std::uint32_t intern(Table& t, const std::string& name) {
    auto [it, fresh] = t.index.try_emplace(name, static_cast<std::uint32_t>(t.list.size()));
    if (fresh) t.list.push_back(name);
    return it->second;
  }
  static std::vector<std::string> names(const Table& t) { return t.list; }

  Table users_, posts_, tags_;
  std::vector<recip::Event> events_;
};

}  // namespace testutil
