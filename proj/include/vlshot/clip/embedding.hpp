#pragma once

#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>

#include "vlshot/clip/bundle.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/linalg.hpp"

namespace vlshot {

struct Embedding {
  Vector vector;
  Modality modality = Modality::text;
  std::uint64_t source_hash = 0;
};

struct EmbeddingKey {
  std::uint64_t bundle = 0;  // hash of the bundle id
  std::uint64_t fingerprint = 0;
  Modality modality = Modality::text;
  std::uint64_t content = 0;

  auto tie() const { return std::tie(bundle, fingerprint, modality, content); }
  bool operator<(const EmbeddingKey& o) const { return tie() < o.tie(); }
};

/// Content-addressed embedding store. Readers run concurrently; inserts take
/// the exclusive lock.
///
/// On-disk layout: 8-byte magic, then per record
///   u64 content hash, u8 modality, u32 dim, u64 fingerprint, u64 bundle hash,
///   dim x f64, all little-endian.
class EmbeddingCache {
 public:
  static constexpr char kMagic[8] = {'V', 'L', 'E', 'M', 'B', 'C', '0', '1'};

  EmbeddingCache() = default;

  explicit EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
    if (!file_.empty() && std::filesystem::exists(file_)) read(file_);
  }

  std::optional<Vector> get(const EmbeddingKey& key) const {
    std::shared_lock lock(mutex_);
    auto it = map_.find(key);
    if (it == map_.end()) {
      ++misses_;
      return std::nullopt;
    }
    ++hits_;
    return it->second;
  }

  void put(const EmbeddingKey& key, Vector v) {
    std::unique_lock lock(mutex_);
    map_[key] = std::move(v);
    dirty_ = true;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
  }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

  void save() const {
    std::unique_lock lock(mutex_);
    if (file_.empty() || !dirty_) return;
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    auto tmp = file_;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      require(static_cast<bool>(out), ErrorCode::io, "cannot write " + tmp.string());
      out.write(kMagic, sizeof kMagic);
      for (const auto& [k, v] : map_) {
        put_u64(out, k.content);
        const unsigned char mod = k.modality == Modality::image ? 0 : 1;
        out.put(static_cast<char>(mod));
        put_u32(out, static_cast<std::uint32_t>(v.size()));
        put_u64(out, k.fingerprint);
        put_u64(out, k.bundle);
        for (double x : v) {
          std::uint64_t bits;
          std::memcpy(&bits, &x, sizeof bits);
          put_u64(out, bits);
        }
      }
    }
    std::filesystem::rename(tmp, file_);
    dirty_ = false;
  }

 private:
  static void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
  }
  static void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
  }
  static bool get_bytes(std::istream& in, unsigned char* b, std::size_t n) {
    in.read(reinterpret_cast<char*>(b), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
  }
  static std::uint64_t le64(const unsigned char* b) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  void read(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open embedding cache " + file.string());
    char magic[8];
    in.read(magic, 8);
    require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, ErrorCode::load,
            file.string() + ": not an embedding cache file");
    unsigned char head[29];
    while (true) {
      const auto offset = static_cast<long long>(in.tellg());
      in.read(reinterpret_cast<char*>(head), 1);
      if (in.gcount() == 0) break;
      require(get_bytes(in, head + 1, 28), ErrorCode::load,
              file.string() + ": truncated record header at byte " + std::to_string(offset));
      EmbeddingKey key;
      key.content = le64(head);
      key.modality = head[8] == 0 ? Modality::image : Modality::text;
      const std::uint32_t dim = head[9] | (head[10] << 8) | (head[11] << 16) | (static_cast<std::uint32_t>(head[12]) << 24);
      key.fingerprint = le64(head + 13);
      key.bundle = le64(head + 21);
      Vector v(dim);
      for (auto& x : v) {
        unsigned char b[8];
        require(get_bytes(in, b, 8), ErrorCode::load,
                file.string() + ": truncated vector in record at byte " + std::to_string(offset));
        const auto bits = le64(b);
        std::memcpy(&x, &bits, sizeof x);
      }
      map_[key] = std::move(v);
    }
  }

  std::filesystem::path file_;
  std::map<EmbeddingKey, Vector> map_;
  mutable std::shared_mutex mutex_;
  mutable std::atomic<std::size_t> hits_{0}, misses_{0};
  mutable bool dirty_ = false;
};

}  // namespace vlshot
