#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/filter/types.hpp"

namespace vlshot {

struct FilterCacheKey {
  std::uint64_t template_hash = 0;
  std::uint64_t vocab_hash = 0;
  FilterMode mode = FilterMode::plain;
  std::uint64_t demo_hash = 0;
  std::size_t k = 0;
  std::string lm_name;

  std::string digest() const {
    Fnv1a h;
    h.u64(template_hash).u64(vocab_hash).str(to_string(mode)).u64(demo_hash).u64(k).str(lm_name);
    return to_hex(h.value());
  }
};

inline std::uint64_t hash_demos(std::span<const std::string> demos) {
  Fnv1a h;
  h.u64(demos.size());
  for (const auto& d : demos) h.str(d);
  return h.value();
}

/// Persistent store of filtered answer sets (JSON object keyed by digest).
/// An empty path keeps the cache in memory only.
class FilteredSetCache {
 public:
  FilteredSetCache() = default;

  explicit FilteredSetCache(std::filesystem::path file) : file_(std::move(file)) {
    if (file_.empty() || !std::filesystem::exists(file_)) return;
    std::ifstream in(file_);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open filter cache " + file_.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::load, "filter cache " + file_.string() + ": " + e.what());
    }
    for (const auto& [key, rec] : j.items()) {
      FilteredAnswerSet set;
      set.k = rec.at("k").get<std::size_t>();
      set.mode = parse_filter_mode(rec.at("mode").get<std::string>());
      for (const auto& a : rec.at("answers"))
        set.answers.push_back({a.at(0).get<std::string>(), a.at(1).get<std::size_t>(), a.at(2).get<double>()});
      entries_.emplace(key, std::move(set));
    }
  }

  std::optional<FilteredAnswerSet> get(const FilterCacheKey& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key.digest());
    if (it == entries_.end()) return std::nullopt;
    ++hits_;
    return it->second;
  }

  void put(const FilterCacheKey& key, const FilteredAnswerSet& set) {
    std::lock_guard lock(mutex_);
    FilteredAnswerSet stored = set;
    stored.warnings.clear();
    entries_[key.digest()] = std::move(stored);
    dirty_ = true;
  }

  /// Writes through a temporary file so a crash never leaves a torn cache.
  void save() const {
    std::lock_guard lock(mutex_);
    if (file_.empty() || !dirty_) return;
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, set] : entries_) {
      nlohmann::json answers = nlohmann::json::array();
      for (const auto& a : set.answers) answers.push_back({a.answer, a.index, a.log_prob});
      j[key] = {{"k", set.k}, {"mode", to_string(set.mode)}, {"answers", std::move(answers)}};
    }
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    auto tmp = file_;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      require(static_cast<bool>(out), ErrorCode::io, "cannot write " + tmp.string());
      out << j.dump();
    }
    std::filesystem::rename(tmp, file_);
    dirty_ = false;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }
  std::size_t hits() const { return hits_; }

 private:
  std::filesystem::path file_;
  std::map<std::string, FilteredAnswerSet> entries_;
  mutable std::mutex mutex_;
  mutable std::size_t hits_ = 0;
  mutable bool dirty_ = false;
};

}  // namespace vlshot
