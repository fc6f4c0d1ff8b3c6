#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/core/error.hpp"
#include "vlshot/dataset/sampling.hpp"

namespace vlshot {

// Pool and episode manifests carry ids only; replay re-joins them against the
// loaded split.

inline nlohmann::json way_to_json(const Way& w) {
  return {{"question_type", w.question_type}, {"answer_type", std::string(to_string(w.answer_type))}};
}

inline Way way_from_json(const nlohmann::json& j) {
  return Way{j.at("question_type").get<std::string>(), parse_answer_type(j.at("answer_type").get<std::string>())};
}

inline nlohmann::json pool_to_json(const FewShotPool& pool) {
  nlohmann::json ways = nlohmann::json::array();
  for (const auto& [way, shots] : pool.ways) {
    auto rec = way_to_json(way);
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& ex : shots) ids.push_back(ex.question_id);
    rec["question_ids"] = std::move(ids);
    ways.push_back(std::move(rec));
  }
  nlohmann::json omitted = nlohmann::json::array();
  for (const auto& w : pool.omitted_ways) omitted.push_back(way_to_json(w));
  return {{"kind", "few_shot_pool"}, {"seed", pool.seed}, {"shots", pool.shots}, {"ways", std::move(ways)},
          {"omitted_ways", std::move(omitted)}};
}

inline FewShotPool pool_from_json(const nlohmann::json& j, const std::vector<VqaExample>& examples) {
  require(j.value("kind", "") == "few_shot_pool", ErrorCode::load, "not a few-shot pool manifest");
  std::unordered_map<std::string, const VqaExample*> by_id;
  for (const auto& ex : examples) by_id.emplace(ex.question_id, &ex);
  FewShotPool pool;
  pool.seed = j.at("seed").get<std::uint64_t>();
  pool.shots = j.at("shots").get<std::size_t>();
  for (const auto& rec : j.at("ways")) {
    auto way = way_from_json(rec);
    auto& bucket = pool.ways[way];
    for (const auto& id : rec.at("question_ids")) {
      auto it = by_id.find(id.get<std::string>());
      require(it != by_id.end(), ErrorCode::load, "pool manifest references unknown question_id " + id.get<std::string>());
      bucket.push_back(*it->second);
    }
  }
  for (const auto& w : j.at("omitted_ways")) pool.omitted_ways.push_back(way_from_json(w));
  return pool;
}

inline nlohmann::json episode_to_json(const Episode& ep, std::size_t ways_per_epoch, std::uint64_t seed) {
  nlohmann::json chosen = nlohmann::json::array();
  for (const auto& w : ep.chosen_ways) chosen.push_back(way_to_json(w));
  auto ids = [](const std::vector<VqaExample>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& ex : v) a.push_back(ex.question_id);
    return a;
  };
  return {{"kind", "episode"},         {"seed", seed},           {"ways_per_epoch", ways_per_epoch},
          {"proportion", ep.proportion}, {"chosen_ways", chosen}, {"support", ids(ep.support)},
          {"query", ids(ep.query)}};
}

}  // namespace vlshot
