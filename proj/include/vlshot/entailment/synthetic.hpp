#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vlshot/clip/bundle.hpp"
#include "vlshot/clip/table_backend.hpp"
#include "vlshot/core/linalg.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/dataset/types.hpp"

namespace vlshot {

/// Aligned-modality entailment data. Every image embeds exactly like its
/// caption. For each hypothesis h the three premises are h (entailment),
/// a unit vector orthogonal to h (neutral) and -h (contradiction), so the
/// premise is the only informative signal and labels are balanced.
struct AlignedEntailmentFixture {
  std::vector<VeExample> train, valid, test;
  std::shared_ptr<TableEncoder> encoder;
};

inline AlignedEntailmentFixture make_aligned_entailment_fixture(std::size_t train_hyps, std::size_t valid_hyps,
                                                                std::size_t test_hyps, std::size_t dim,
                                                                std::uint64_t seed) {
  require(dim >= 2, ErrorCode::configuration, "aligned fixture: dimension must be at least 2");
  AlignedEntailmentFixture f{{}, {}, {}, std::make_shared<TableEncoder>("aligned-table", dim)};
  auto rng = make_rng(seed, 0xa11e);
  auto unit = [&] {
    Vector v(dim);
    double n = 0.0;
    while (n < 1e-6) {
      for (auto& x : v) x = standard_normal(rng);
      n = l2_norm(v);
    }
    for (auto& x : v) x /= n;
    return v;
  };
  f.encoder->set_image(std::string(kBlackImage), unit());
  auto build = [&](std::vector<VeExample>& split, const std::string& name, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto h = unit();
      Vector ortho = unit();
      const double p = dot(ortho, h);
      for (std::size_t k = 0; k < dim; ++k) ortho[k] -= p * h[k];
      ortho = normalized(ortho);
      Vector neg(dim);
      for (std::size_t k = 0; k < dim; ++k) neg[k] = -h[k];
      const auto tag = name + "-" + std::to_string(i);
      const auto hyp = "hypothesis " + tag;
      f.encoder->set_text(hyp, h);
      const std::pair<EntailmentLabel, const Vector*> cases[] = {
          {EntailmentLabel::entailment, &h}, {EntailmentLabel::neutral, &ortho}, {EntailmentLabel::contradiction, &neg}};
      for (const auto& [label, vec] : cases) {
        const auto suffix = tag + "-" + std::string(to_string(label));
        VeExample ex{"pair " + suffix, "image " + suffix, "caption " + suffix, hyp, label};
        f.encoder->set_text(ex.premise_caption, *vec);
        f.encoder->set_image(ex.premise_image_ref, *vec);
        split.push_back(std::move(ex));
      }
    }
  };
  build(f.train, "train", train_hyps);
  build(f.valid, "valid", valid_hyps);
  build(f.test, "test", test_hyps);
  return f;
}

}  // namespace vlshot
