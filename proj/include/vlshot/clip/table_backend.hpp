#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vlshot/clip/bundle.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"

namespace vlshot {

/// Encoder backed by explicit lookup tables. Unknown inputs are adapter
/// errors. Has no parameters.
class TableEncoder : public EncoderBundle {
 public:
  TableEncoder(std::string id, std::size_t dim) : id_(std::move(id)), dim_(dim) {}

  void set_text(const std::string& text, Vector v) { put(texts_, text, std::move(v)); }
  void set_image(const std::string& ref, Vector v) { put(images_, ref, std::move(v)); }

  const std::map<std::string, Vector>& text_table() const { return texts_; }
  const std::map<std::string, Vector>& image_table() const { return images_; }

  std::string id() const override { return id_; }
  std::size_t embed_dim() const override { return dim_; }
  std::vector<ParamInfo> parameters() const override { return {}; }
  bool thread_safe() const override { return true; }
  void set_trainable(const std::vector<std::string>& names) override {
    require(names.empty(), ErrorCode::contract, id_ + ": table encoder has no parameters");
  }

  std::uint64_t fingerprint() const override {
    Fnv1a h;
    for (const auto* table : {&texts_, &images_}) {
      h.u64(table->size());
      for (const auto& [k, v] : *table) h.str(k).f64s(v);
    }
    return h.value();
  }

 protected:
  std::vector<Vector> do_encode_text(std::span<const std::string> texts) override { return look(texts_, texts, "text"); }
  std::vector<Vector> do_encode_image(std::span<const std::string> refs) override {
    return look(images_, refs, "image");
  }

 private:
  void put(std::map<std::string, Vector>& table, const std::string& key, Vector v) {
    require(v.size() == dim_, ErrorCode::contract,
            id_ + ": table vector for '" + key + "' has dimension " + std::to_string(v.size()));
    table[key] = std::move(v);
  }

  std::vector<Vector> look(const std::map<std::string, Vector>& table, std::span<const std::string> keys,
                           const char* what) const {
    std::vector<Vector> out;
    out.reserve(keys.size());
    for (const auto& k : keys) {
      auto it = table.find(k);
      require(it != table.end(), ErrorCode::adapter, id_ + ": no " + what + " entry for '" + k + "'");
      out.push_back(it->second);
    }
    return out;
  }

  std::string id_;
  std::size_t dim_;
  std::map<std::string, Vector> texts_, images_;
};

}  // namespace vlshot
