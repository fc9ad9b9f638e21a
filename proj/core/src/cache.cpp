#include "framelogic/cache.hpp"

#include <system_error>

#include "framelogic/digest.hpp"

namespace framelogic {

CacheKey CacheKey::for_bundle(const ExpertBundle& bundle) {
  return CacheKey{bundle.video_id, sha256_hex(bundle_to_json(bundle))};
}

CacheKey CacheKey::for_source(std::string video_id, std::string_view source_bytes) {
  return CacheKey{std::move(video_id), sha256_hex(source_bytes)};
}

BundleCache::BundleCache(std::size_t capacity, std::optional<std::filesystem::path> disk_root)
    : capacity_(capacity), disk_root_(std::move(disk_root)) {
  if (capacity_ == 0) throw std::invalid_argument("BundleCache: capacity must be >= 1");
}

std::filesystem::path BundleCache::disk_path(const std::filesystem::path& root,
                                             const CacheKey& key) {
  return root / key.video_id / (key.digest + ".bundle.json");
}

BundleCache::BundlePtr BundleCache::get_or_load(const CacheKey& key, const Loader& loader) {
  std::promise<BundlePtr> promise;
  {
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      ++stats_.hits;
      recency_.splice(recency_.begin(), recency_, it->second.second);
      return it->second.first;
    }
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      ++stats_.hits;
      auto pending = it->second;
      lock.unlock();
      return pending.get();
    }
    ++stats_.misses;
    in_flight_.emplace(key, promise.get_future().share());
  }

  BundlePtr bundle;
  try {
    bundle = load_uncached(key, loader);
  } catch (...) {
    std::lock_guard lock(mutex_);
    in_flight_.erase(key);
    promise.set_exception(std::current_exception());
    throw;
  }

  std::lock_guard lock(mutex_);
  insert_locked(key, bundle);
  in_flight_.erase(key);
  promise.set_value(bundle);
  return bundle;
}

BundleCache::BundlePtr BundleCache::load_uncached(const CacheKey& key, const Loader& loader) {
  std::error_code ec;
  if (disk_root_) {
    const auto path = disk_path(*disk_root_, key);
    if (std::filesystem::exists(path, ec)) {
      try {
        auto cached = load_bundle(path);
        if (cached.video_id == key.video_id) {
          std::lock_guard lock(mutex_);
          ++stats_.disk_hits;
          return std::make_shared<const ExpertBundle>(std::move(cached));
        }
      } catch (const BundleError&) {
        // Unreadable or stale entry: fall through and rebuild it.
      }
    }
  }

  auto bundle = loader();
  bundle.validate();
  if (bundle.video_id != key.video_id) {
    throw BundleError(BundleError::Kind::Format, "loader returned bundle for \"" +
                                                     bundle.video_id + "\", expected \"" +
                                                     key.video_id + "\"");
  }
  {
    std::lock_guard lock(mutex_);
    ++stats_.loader_calls;
    for (auto kind : kAllExperts) {
      if (bundle.has_artifacts(kind)) ++stats_.extractions[kind];
    }
  }

  if (disk_root_) {
    const auto path = disk_path(*disk_root_, key);
    auto tmp = path;
    tmp += ".tmp";
    std::filesystem::create_directories(path.parent_path(), ec);
    if (!ec) {
      try {
        write_file(tmp, bundle_to_json(bundle));
        std::filesystem::rename(tmp, path, ec);
      } catch (const BundleError&) {
        std::filesystem::remove(tmp, ec);
      }
    }
  }
  return std::make_shared<const ExpertBundle>(std::move(bundle));
}

void BundleCache::insert_locked(const CacheKey& key, BundlePtr bundle) {
  recency_.push_front(key);
  entries_[key] = {std::move(bundle), recency_.begin()};
  while (entries_.size() > capacity_) {
    const auto& victim = recency_.back();
    entries_.erase(victim);
    recency_.pop_back();
    ++stats_.evictions;
  }
}

CacheStats BundleCache::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::size_t BundleCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

bool BundleCache::contains(const CacheKey& key) const {
  std::lock_guard lock(mutex_);
  return entries_.count(key) > 0;
}

}  // namespace framelogic
