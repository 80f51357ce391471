#pragma once

// Synthetic data generators shared across the test suites. Everything is
// seeded and deterministic.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "themetric/corpus.hpp"
#include "themetric/rng.hpp"

namespace fx {

using namespace themetric;

inline IndexedDataset make_dataset(int n_users, int n_items, std::vector<Rating> entries) {
  std::vector<std::string> uids(n_users), iids(n_items);
  char buf[32];
  for (int u = 0; u < n_users; ++u) {
    std::snprintf(buf, sizeof(buf), "u%05d", u);
    uids[u] = buf;
  }
  for (int i = 0; i < n_items; ++i) {
    std::snprintf(buf, sizeof(buf), "b%05d", i);
    iids[i] = buf;
  }
  InteractionSet set = InteractionSet::build(n_users, n_items, std::move(entries));
  return IndexedDataset(std::move(uids), std::move(iids), std::move(set));
}

// Two user groups, two item blocks; users rate inside their block with
// high ratings and spill into the other block with low ratings at the
// given noise rate.
inline IndexedDataset block_dataset(int users_per_group, int items_per_block,
                                    int ratings_per_user, double noise, std::uint64_t seed) {
  const int n_users = 2 * users_per_group;
  const int n_items = 2 * items_per_block;
  std::mt19937_64 rng(mix_seed(seed, 0xB10C));
  std::vector<Rating> entries;
  entries.reserve(static_cast<std::size_t>(n_users) * ratings_per_user);
  std::vector<int> pool(items_per_block);
  for (int u = 0; u < n_users; ++u) {
    const int own_base = (u < users_per_group) ? 0 : items_per_block;
    const int other_base = (u < users_per_group) ? items_per_block : 0;
    for (int i = 0; i < items_per_block; ++i) pool[i] = i;
    shuffle_in_place(pool, rng);
    for (int r = 0; r < ratings_per_user; ++r) {
      const bool flip = uniform01(rng) < noise;
      const int base = flip ? other_base : own_base;
      const int item = base + pool[r % items_per_block];
      const int rating = flip ? 1 + static_cast<int>(uniform_below(rng, 3))
                              : 7 + static_cast<int>(uniform_below(rng, 4));
      entries.push_back({u, item, rating});
    }
  }
  // collapse (user, item) duplicates introduced by the flip branch
  std::sort(entries.begin(), entries.end(), [](const Rating& a, const Rating& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.item != b.item) return a.item < b.item;
    return a.value < b.value;
  });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const Rating& a, const Rating& b) {
                              return a.user == b.user && a.item == b.item;
                            }),
                entries.end());
  return make_dataset(n_users, n_items, std::move(entries));
}

inline std::vector<ThemeInfo> make_themes(int count) {
  std::vector<ThemeInfo> themes;
  for (int t = 0; t < count; ++t) themes.push_back({t, "theme-" + std::to_string(t)});
  return themes;
}

// item i -> theme slot i % n_themes
inline ThemeAssignment cyclic_themes(int n_items, int n_themes) {
  std::vector<int> slots(n_items);
  std::vector<std::string> iids(n_items);
  for (int i = 0; i < n_items; ++i) {
    slots[i] = i % n_themes;
    iids[i] = "b" + std::to_string(i);
  }
  return ThemeAssignment(make_themes(n_themes), std::move(slots), std::move(iids));
}

inline ThemeAssignment themes_from_slots(std::vector<int> slots, int n_themes) {
  std::vector<std::string> iids(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) iids[i] = "b" + std::to_string(i);
  return ThemeAssignment(make_themes(n_themes), std::move(slots), std::move(iids));
}

inline PopularitySet popularity_from_members(std::vector<char> member,
                                             std::vector<std::int64_t> counts) {
  PopularitySet p;
  p.member = std::move(member);
  p.train_counts = std::move(counts);
  p.size = 0;
  for (char m : p.member)
    if (m) ++p.size;
  p.fraction = p.member.empty() ? 1.0 : static_cast<double>(p.size) / p.member.size();
  p.ranking.resize(p.member.size());
  for (std::size_t i = 0; i < p.ranking.size(); ++i) p.ranking[i] = static_cast<int>(i);
  std::sort(p.ranking.begin(), p.ranking.end(), [&](int a, int b) {
    if (p.train_counts[a] != p.train_counts[b]) return p.train_counts[a] > p.train_counts[b];
    return a < b;
  });
  return p;
}

// interactions that survive preprocess unchanged: every user gets
// `per_user` distinct items, every item at least 5 raters
inline std::vector<Interaction> survivable_interactions(int n_users, int n_items, int per_user,
                                                        std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x5EED));
  std::vector<Interaction> out;
  std::vector<int> degree(n_items, 0);
  for (int u = 0; u < n_users; ++u) {
    char ub[32], ib[32];
    std::snprintf(ub, sizeof(ub), "u%05d", u);
    for (int r = 0; r < per_user; ++r) {
      // round-robin base keeps every item's degree near the average
      const int item = static_cast<int>((static_cast<long>(u) * per_user + r) % n_items);
      std::snprintf(ib, sizeof(ib), "b%05d", item);
      ++degree[item];
      out.push_back({ub, ib, 5 + static_cast<int>(uniform_below(rng, 6))});
    }
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("themetric_" + tag);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace fx
