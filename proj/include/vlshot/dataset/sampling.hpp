#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/dataset/taxonomy.hpp"
#include "vlshot/dataset/types.hpp"

namespace vlshot {

/// The N-way K-shot subset drawn once before training.
struct FewShotPool {
  std::map<Way, std::vector<VqaExample>> ways;  // populated ways only
  std::vector<Way> omitted_ways;                // ways with no available example
  std::size_t shots = 0;                        // K
  std::uint64_t seed = 0;

  std::size_t total_examples() const {
    std::size_t n = 0;
    for (const auto& [_, v] : ways) n += v.size();
    return n;
  }

  std::vector<Way> populated_ways() const {
    std::vector<Way> out;
    for (const auto& [w, v] : ways)
      if (!v.empty()) out.push_back(w);
    return out;
  }
};

struct Episode {
  std::vector<Way> chosen_ways;
  std::vector<VqaExample> support;
  std::vector<VqaExample> query;
  double proportion = 0.75;
};

/// All question-type x answer-type ways, taxonomy order then answer-type order.
inline std::vector<Way> enumerate_ways(const QuestionTaxonomy& taxonomy) {
  std::vector<Way> out;
  for (const auto& t : taxonomy.types())
    for (auto a : kAnswerTypes) out.push_back(Way{t, a});
  return out;
}

/// Samples min(K, available) distinct examples per way. Each way draws from
/// its own RNG stream so adding data to one way leaves the others unchanged.
inline FewShotPool sample_pool(const std::vector<VqaExample>& examples, const QuestionTaxonomy& taxonomy,
                               std::size_t shots, std::uint64_t seed) {
  require(shots >= 1, ErrorCode::invalid_input, "sample_pool: K must be >= 1");
  std::map<Way, std::vector<std::size_t>> by_way;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    by_way[Way{ex.question_type, ex.answer_type}].push_back(i);
  }
  FewShotPool pool;
  pool.shots = shots;
  pool.seed = seed;
  const auto ways = enumerate_ways(taxonomy);
  for (std::size_t w = 0; w < ways.size(); ++w) {
    auto it = by_way.find(ways[w]);
    if (it == by_way.end() || it->second.empty()) {
      pool.omitted_ways.push_back(ways[w]);
      continue;
    }
    auto rng = make_rng(seed, 0x9001 + w);
    auto picks = sample_without_replacement(it->second.size(), shots, rng);
    auto& bucket = pool.ways[ways[w]];
    for (auto p : picks) bucket.push_back(examples[it->second[p]]);
  }
  return pool;
}

/// Support size for a way holding n shots: ceil(proportion * n), computed with
/// a small tolerance so that e.g. 0.7 * 10 lands on 7 rather than 8.
inline std::size_t support_count(std::size_t n, double proportion) {
  const double raw = proportion * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(k, n);
}

/// Picks C of the populated ways and partitions each way's shots into support
/// and query. C == 0 means every populated way.
inline Episode split_support_query(const FewShotPool& pool, std::size_t ways_per_epoch, double proportion,
                                   std::uint64_t seed) {
  require(proportion > 0.0 && proportion < 1.0, ErrorCode::invalid_input,
          "split_support_query: proportion must lie in (0,1)");
  auto populated = pool.populated_ways();
  const std::size_t c = ways_per_epoch == 0 ? populated.size() : ways_per_epoch;
  require(c >= 1 && c <= populated.size(), ErrorCode::invalid_input,
          "split_support_query: C=" + std::to_string(c) + " but only " + std::to_string(populated.size()) +
              " populated ways");
  auto rng = make_rng(seed, 0xe915);
  shuffle_in_place(populated, rng);
  populated.resize(c);

  Episode ep;
  ep.proportion = proportion;
  ep.chosen_ways = populated;
  for (const auto& way : ep.chosen_ways) {
    std::vector<VqaExample> shots = pool.ways.at(way);
    shuffle_in_place(shots, rng);
    const auto n_support = support_count(shots.size(), proportion);
    for (std::size_t i = 0; i < shots.size(); ++i) (i < n_support ? ep.support : ep.query).push_back(shots[i]);
  }
  return ep;
}

}  // namespace vlshot
