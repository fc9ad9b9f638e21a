#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include "framelogic/cache.hpp"
#include "framelogic/digest.hpp"

namespace fl = framelogic;
namespace fs = std::filesystem;

namespace {

fl::ExpertBundle bundle_for(const std::string& id) {
  fl::ExpertBundle b;
  b.video_id = id;
  b.frame_count = 3;
  b.clip = fl::ScoreTable{fl::ExpertKind::Clip, {{"dog", {0.1, 0.2, 0.3}}}};
  b.transcript = std::vector<fl::TranscriptSegment>{{0.0, 1.0, "hello"}};
  return b;
}

fl::CacheKey key_for(const std::string& id) { return fl::CacheKey::for_source(id, "bytes of " + id); }

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("framelogic_cache_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Digest, KnownVectors) {
  EXPECT_EQ(fl::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(fl::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CacheKey, DependsOnIdAndBytes) {
  EXPECT_EQ(key_for("a"), key_for("a"));
  EXPECT_NE(fl::CacheKey::for_source("a", "x"), fl::CacheKey::for_source("a", "y"));
  EXPECT_NE(fl::CacheKey::for_source("a", "x"), fl::CacheKey::for_source("b", "x"));
  EXPECT_EQ(fl::CacheKey::for_bundle(bundle_for("a")), fl::CacheKey::for_bundle(bundle_for("a")));
  auto changed = bundle_for("a");
  changed.clip->rows[0].values[0] = 0.11;
  EXPECT_NE(fl::CacheKey::for_bundle(changed), fl::CacheKey::for_bundle(bundle_for("a")));
}

TEST(BundleCache, SecondRequestIsAHit) {
  fl::BundleCache cache(4);
  int loads = 0;
  auto loader = [&] {
    ++loads;
    return bundle_for("v");
  };
  const auto first = cache.get_or_load(key_for("v"), loader);
  const auto second = cache.get_or_load(key_for("v"), loader);
  EXPECT_EQ(first, second);
  EXPECT_EQ(loads, 1);
  const auto s = cache.stats();
  EXPECT_EQ(s.misses, 1u);
  EXPECT_EQ(s.hits, 1u);
  EXPECT_EQ(s.loader_calls, 1u);
  EXPECT_EQ(s.extractions[fl::ExpertKind::Clip], 1u);
  EXPECT_EQ(s.extractions[fl::ExpertKind::Asr], 1u);
  EXPECT_EQ(s.extractions[fl::ExpertKind::Ocr], 0u);
  EXPECT_EQ(s.extractions[fl::ExpertKind::Ovd], 0u);
}

TEST(BundleCache, LeastRecentlyUsedEviction) {
  fl::BundleCache cache(2);
  std::map<std::string, int> loads;
  auto get = [&](const std::string& id) {
    cache.get_or_load(key_for(id), [&] {
      ++loads[id];
      return bundle_for(id);
    });
  };
  // Round robin over three videos with room for two: every access misses.
  for (int round = 0; round < 3; ++round) {
    for (const char* id : {"a", "b", "c"}) get(id);
  }
  auto s = cache.stats();
  EXPECT_EQ(s.misses, 9u);
  EXPECT_EQ(s.hits, 0u);
  EXPECT_EQ(s.evictions, 7u);
  EXPECT_EQ(cache.size(), 2u);
  EXPECT_FALSE(cache.contains(key_for("a")));

  // Touching b makes c the eviction victim when a returns.
  get("b");
  get("a");
  EXPECT_TRUE(cache.contains(key_for("b")));
  EXPECT_FALSE(cache.contains(key_for("c")));
  s = cache.stats();
  EXPECT_EQ(s.hits, 1u);
  EXPECT_EQ(s.evictions, 8u);
}

TEST(BundleCache, ConcurrentRequestsShareOneLoad) {
  fl::BundleCache cache(2);
  std::atomic<int> loads{0};
  std::atomic<bool> release{false};
  auto loader = [&] {
    ++loads;
    while (!release) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    return bundle_for("v");
  };
  std::vector<std::thread> threads;
  std::vector<fl::BundleCache::BundlePtr> results(8);
  for (std::size_t i = 0; i < results.size(); ++i) {
    threads.emplace_back([&, i] { results[i] = cache.get_or_load(key_for("v"), loader); });
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  release = true;
  for (auto& t : threads) t.join();
  EXPECT_EQ(loads.load(), 1);
  for (const auto& r : results) EXPECT_EQ(r, results.front());
  const auto s = cache.stats();
  EXPECT_EQ(s.misses, 1u);
  EXPECT_EQ(s.hits, 7u);
}

TEST(BundleCache, FailedLoadsAreNotCached) {
  fl::BundleCache cache(2);
  int attempts = 0;
  auto failing = [&]() -> fl::ExpertBundle {
    ++attempts;
    throw fl::BundleError(fl::BundleError::Kind::Io, "unreadable");
  };
  EXPECT_THROW(cache.get_or_load(key_for("v"), failing), fl::BundleError);
  EXPECT_THROW(cache.get_or_load(key_for("v"), failing), fl::BundleError);
  EXPECT_EQ(attempts, 2);
  EXPECT_EQ(cache.size(), 0u);
  EXPECT_NO_THROW(cache.get_or_load(key_for("v"), [] { return bundle_for("v"); }));
}

TEST(BundleCache, RejectsLoaderReturningWrongVideo) {
  fl::BundleCache cache(2);
  EXPECT_THROW(cache.get_or_load(key_for("v"), [] { return bundle_for("w"); }), fl::BundleError);
  auto invalid = bundle_for("v");
  invalid.frame_count = 0;
  EXPECT_THROW(cache.get_or_load(key_for("v"), [&] { return invalid; }), fl::BundleError);
}

TEST(BundleCache, DiskWriteThroughServesAFreshProcess) {
  const auto root = temp_dir("disk");
  {
    fl::BundleCache cache(2, root);
    cache.get_or_load(key_for("v"), [] { return bundle_for("v"); });
    EXPECT_TRUE(fs::exists(fl::BundleCache::disk_path(root, key_for("v"))));
  }
  fl::BundleCache fresh(2, root);
  int loads = 0;
  const auto b = fresh.get_or_load(key_for("v"), [&] {
    ++loads;
    return bundle_for("v");
  });
  EXPECT_EQ(loads, 0);
  EXPECT_EQ(*b, bundle_for("v"));
  const auto s = fresh.stats();
  EXPECT_EQ(s.disk_hits, 1u);
  EXPECT_EQ(s.loader_calls, 0u);
  EXPECT_EQ(s.extractions[fl::ExpertKind::Clip], 0u);
  fs::remove_all(root);
}

TEST(BundleCache, CorruptDiskEntryIsRebuilt) {
  const auto root = temp_dir("corrupt");
  const auto path = fl::BundleCache::disk_path(root, key_for("v"));
  fs::create_directories(path.parent_path());
  fl::write_file(path, "{ not json");
  fl::BundleCache cache(2, root);
  int loads = 0;
  cache.get_or_load(key_for("v"), [&] {
    ++loads;
    return bundle_for("v");
  });
  EXPECT_EQ(loads, 1);
  EXPECT_EQ(fl::load_bundle(path), bundle_for("v"));
  fs::remove_all(root);
}

TEST(BundleCache, ZeroCapacityIsRejected) {
  EXPECT_THROW(fl::BundleCache(0), std::invalid_argument);
}
