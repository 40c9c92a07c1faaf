#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "beyt/corpus.hpp"

namespace beyt::test {

inline PoemRecord poem(const std::string& id, const std::string& poet, std::size_t verses,
                       const std::string& meter = "hazaj", const std::string& form = "ghazal",
                       AttributionStatus status = AttributionStatus::confirmed) {
  PoemRecord r;
  r.poem_id = id;
  r.poet = poet;
  r.title = id;
  r.form = form;
  r.meter = meter;
  r.status = status;
  for (std::size_t i = 0; i < verses; ++i)
    r.verses.push_back({"w" + std::to_string(i) + " a", "b c"});
  return r;
}

// Corpus with `counts[k]` poems for poet k, poem ids unique across poets.
inline Corpus poets_with(const std::vector<std::size_t>& counts, std::size_t verses = 4) {
  std::vector<PoemRecord> rs;
  for (std::size_t k = 0; k < counts.size(); ++k)
    for (std::size_t i = 0; i < counts[k]; ++i)
      rs.push_back(poem("p" + std::to_string(k) + "-" + std::to_string(i),
                        "poet" + std::to_string(k), verses));
  return Corpus(std::move(rs));
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("beyt-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace beyt::test
