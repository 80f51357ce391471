#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "themetric/common.hpp"

namespace themetric {

// One explicit user -> item rating event. rating 0 marks an implicit
// interaction; preprocess() drops those.
struct Interaction {
  std::string user_id;
  std::string item_id;
  int rating = 0;  // in [0, 10]
};

struct ItemRecord {
  std::string item_id;
  std::optional<int> theme_id;
  std::string title;
  std::string author;
};

struct ThemeInfo {
  int id = 0;
  std::string label;
};

struct Rating {
  int user = 0;
  int item = 0;
  int value = 0;
};

// Immutable sparse (user, item, rating) store with row (per-user) and
// column (per-item) access.
class InteractionSet {
 public:
  struct ColEntry {
    int user = 0;
    int value = 0;
  };

  InteractionSet() = default;
  static InteractionSet build(int n_users, int n_items, std::vector<Rating> entries);

  int n_users() const { return n_users_; }
  int n_items() const { return n_items_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  std::span<const Rating> all() const { return rows_; }
  std::span<const Rating> user_row(int u) const {
    return {rows_.data() + user_off_[u], rows_.data() + user_off_[u + 1]};
  }
  std::span<const ColEntry> item_col(int i) const {
    return {cols_.data() + item_off_[i], cols_.data() + item_off_[i + 1]};
  }

  std::optional<int> rating_of(int user, int item) const;
  bool has(int user, int item) const { return rating_of(user, item).has_value(); }

  std::vector<std::int64_t> item_counts() const;

 private:
  int n_users_ = 0;
  int n_items_ = 0;
  std::vector<Rating> rows_;  // sorted by (user, item)
  std::vector<int> user_off_;
  std::vector<ColEntry> cols_;  // grouped by item, users ascending
  std::vector<int> item_off_;
};

struct DatasetStats {
  int users = 0;
  int items = 0;
  std::int64_t interactions = 0;
  double sparsity = 0.0;
  double avg_rating = 0.0;
  double median_rating = 0.0;
  double ratings_per_user = 0.0;
  double ratings_per_item = 0.0;
};

// Deduplicated, filtered, integer-indexed rating store. Indices are
// assigned in ascending external-key order and the set is immutable.
class IndexedDataset {
 public:
  IndexedDataset(std::vector<std::string> user_ids, std::vector<std::string> item_ids,
                 InteractionSet interactions);

  int n_users() const { return static_cast<int>(user_ids_.size()); }
  int n_items() const { return static_cast<int>(item_ids_.size()); }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const InteractionSet& interactions() const { return interactions_; }

  double sparsity() const;
  DatasetStats stats() const;

 private:
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  InteractionSet interactions_;
};

// Item -> theme assignments keyed by external id, as loaded from disk.
class ThemeCatalog {
 public:
  ThemeCatalog(std::vector<ThemeInfo> themes, std::vector<ItemRecord> items);

  const std::vector<ThemeInfo>& themes() const { return themes_; }
  int theme_count() const { return static_cast<int>(themes_.size()); }
  const std::vector<ItemRecord>& items() const { return items_; }

  bool has_theme_id(int theme_id) const { return pos_.count(theme_id) > 0; }
  std::optional<int> theme_of_external(const std::string& item_id) const;

 private:
  std::vector<ThemeInfo> themes_;  // ascending id
  std::unordered_map<int, int> pos_;
  std::vector<ItemRecord> items_;
  std::unordered_map<std::string, std::size_t> item_pos_;
};

// Theme ids resolved onto a dataset's dense item indices. All theme
// slots are kept even when no item maps to them.
class ThemeAssignment {
 public:
  ThemeAssignment(std::vector<ThemeInfo> themes, std::vector<int> slot_of_item,
                  std::vector<std::string> item_ids);

  const std::vector<ThemeInfo>& themes() const { return themes_; }
  int theme_count() const { return static_cast<int>(themes_.size()); }
  int n_items() const { return static_cast<int>(slot_of_item_.size()); }

  bool has_theme(int item_index) const { return slot_of_item_[item_index] >= 0; }
  // Slot (position in themes()) of the item's theme; DataError naming the
  // item when unassigned.
  int theme_slot(int item_index) const;
  int theme_id_of(int item_index) const { return themes_[theme_slot(item_index)].id; }

  // Items that lack a theme, by external id.
  std::vector<std::string> unassigned_items() const;

 private:
  std::vector<ThemeInfo> themes_;
  std::vector<int> slot_of_item_;  // -1 = unassigned
  std::vector<std::string> item_ids_;
};

struct DataSplit {
  InteractionSet train;
  InteractionSet valid;
  InteractionSet test;
  std::uint64_t seed = 0;
};

struct PopularitySet {
  double fraction = 0.0;
  std::vector<std::int64_t> train_counts;  // per item index
  std::vector<int> ranking;                // count desc, index asc
  std::vector<char> member;                // per item index
  int size = 0;

  bool contains(int item) const { return member[item] != 0; }
};

// --- ingestion ------------------------------------------------------------

// `interactions.csv`, header user_id,item_id,rating. Errors carry the
// offending line number.
std::vector<Interaction> load_interactions(const std::string& path);

// items file: item_id,theme_id[,title,author]; themes file: theme_id,label.
// Items referencing unknown themes and duplicate item ids are rejected.
ThemeCatalog load_theme_catalog(const std::string& items_path, const std::string& themes_path);

// --- preprocessing ---------------------------------------------------------

// Drops implicit ratings, merges duplicate items on the normalized
// title+author key, then removes users with <5 or >200 ratings and items
// with <5 ratings until the thresholds hold everywhere.
IndexedDataset preprocess(const std::vector<Interaction>& raw,
                          const std::vector<ItemRecord>& items);

// Lowercased, whitespace-collapsed, punctuation-stripped title+author key.
// Empty when the record has no title and no author.
std::string duplicate_merge_key(const ItemRecord& rec);

ThemeAssignment bind_themes(const ThemeCatalog& catalog, const IndexedDataset& ds);

// Seeded per-user 80-10-10 split: floor(test_frac*n) to test,
// floor(valid_frac*n) to valid, remainder to train.
DataSplit split(const IndexedDataset& ds, std::uint64_t seed, double valid_frac = 0.1,
                double test_frac = 0.1);

// Top ceil(fraction * n_items) items by train interaction count, ties
// broken by ascending item index.
PopularitySet popular_set(const InteractionSet& train, double fraction);

// Share of each theme over an item set; one entry per theme slot, zeros
// included. Item without a theme -> DataError naming it.
std::vector<double> theme_distribution(std::span<const int> item_set,
                                       const ThemeAssignment& themes);

}  // namespace themetric
