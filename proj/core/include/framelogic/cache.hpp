#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "framelogic/experts.hpp"

namespace framelogic {

/// Identity of a video's query-independent artifacts.
struct CacheKey {
  std::string video_id;
  std::string digest;  // hex SHA-256 of the artifact source bytes

  /// Key for a bundle already in memory (digest of its canonical encoding).
  static CacheKey for_bundle(const ExpertBundle& bundle);
  /// Key for raw source bytes that a loader will turn into a bundle.
  static CacheKey for_source(std::string video_id, std::string_view source_bytes);

  friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  /// Misses served from the on-disk cache without running the loader.
  std::uint64_t disk_hits = 0;
  std::uint64_t loader_calls = 0;
  /// Query-independent feature extractions per expert (one per loader run
  /// that produced that expert's artifacts).
  ExpertMap<std::uint64_t> extractions;
};

/// LRU cache of expert bundles with single-flight loading and optional
/// write-through to `<root>/<video_id>/<digest>.bundle.json`.
class BundleCache {
 public:
  using Loader = std::function<ExpertBundle()>;
  using BundlePtr = std::shared_ptr<const ExpertBundle>;

  explicit BundleCache(std::size_t capacity = 8,
                       std::optional<std::filesystem::path> disk_root = std::nullopt);

  BundleCache(const BundleCache&) = delete;
  BundleCache& operator=(const BundleCache&) = delete;

  /// Returns the cached bundle, or runs `loader` once for the key. Failed
  /// loads propagate and are not cached.
  BundlePtr get_or_load(const CacheKey& key, const Loader& loader);

  CacheStats stats() const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  bool contains(const CacheKey& key) const;

  static std::filesystem::path disk_path(const std::filesystem::path& root, const CacheKey& key);

 private:
  BundlePtr load_uncached(const CacheKey& key, const Loader& loader);
  void insert_locked(const CacheKey& key, BundlePtr bundle);

  std::size_t capacity_;
  std::optional<std::filesystem::path> disk_root_;

  mutable std::mutex mutex_;
  std::list<CacheKey> recency_;  // front = most recently used
  std::map<CacheKey, std::pair<BundlePtr, std::list<CacheKey>::iterator>> entries_;
  std::map<CacheKey, std::shared_future<BundlePtr>> in_flight_;
  CacheStats stats_;
};

}  // namespace framelogic
