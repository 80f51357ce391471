#include "themetric/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "themetric/csv.hpp"
#include "themetric/rng.hpp"

namespace themetric {

namespace {

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  std::size_t i = 0;
  if (s[0] == '-') i = 1;
  if (i == s.size()) return false;
  long v = 0;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
    if (v > 1000000000L) return false;
  }
  out = static_cast<int>(s[0] == '-' ? -v : v);
  return true;
}

}  // namespace

// --- InteractionSet ---------------------------------------------------------

InteractionSet InteractionSet::build(int n_users, int n_items, std::vector<Rating> entries) {
  InteractionSet s;
  s.n_users_ = n_users;
  s.n_items_ = n_items;
  std::sort(entries.begin(), entries.end(), [](const Rating& a, const Rating& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Rating& r = entries[i];
    if (r.user < 0 || r.user >= n_users || r.item < 0 || r.item >= n_items)
      throw DataError("interaction index out of range");
    if (i > 0 && entries[i - 1].user == r.user && entries[i - 1].item == r.item)
      throw DataError("duplicate (user, item) interaction in set");
  }
  s.rows_ = std::move(entries);

  s.user_off_.assign(n_users + 1, 0);
  for (const Rating& r : s.rows_) ++s.user_off_[r.user + 1];
  for (int u = 0; u < n_users; ++u) s.user_off_[u + 1] += s.user_off_[u];

  s.item_off_.assign(n_items + 1, 0);
  for (const Rating& r : s.rows_) ++s.item_off_[r.item + 1];
  for (int i = 0; i < n_items; ++i) s.item_off_[i + 1] += s.item_off_[i];
  s.cols_.resize(s.rows_.size());
  std::vector<int> cursor(s.item_off_.begin(), s.item_off_.end() - 1);
  for (const Rating& r : s.rows_) s.cols_[cursor[r.item]++] = {r.user, r.value};
  return s;
}

std::optional<int> InteractionSet::rating_of(int user, int item) const {
  auto row = user_row(user);
  auto it = std::lower_bound(row.begin(), row.end(), item,
                             [](const Rating& r, int i) { return r.item < i; });
  if (it != row.end() && it->item == item) return it->value;
  return std::nullopt;
}

std::vector<std::int64_t> InteractionSet::item_counts() const {
  std::vector<std::int64_t> counts(n_items_, 0);
  for (int i = 0; i < n_items_; ++i) counts[i] = item_off_[i + 1] - item_off_[i];
  return counts;
}

// --- IndexedDataset ---------------------------------------------------------

IndexedDataset::IndexedDataset(std::vector<std::string> user_ids,
                               std::vector<std::string> item_ids, InteractionSet interactions)
    : user_ids_(std::move(user_ids)),
      item_ids_(std::move(item_ids)),
      interactions_(std::move(interactions)) {}

double IndexedDataset::sparsity() const {
  const double cells = static_cast<double>(n_users()) * static_cast<double>(n_items());
  if (cells == 0.0) return 0.0;
  return 1.0 - static_cast<double>(interactions_.size()) / cells;
}

DatasetStats IndexedDataset::stats() const {
  DatasetStats st;
  st.users = n_users();
  st.items = n_items();
  st.interactions = static_cast<std::int64_t>(interactions_.size());
  st.sparsity = sparsity();
  if (st.interactions > 0) {
    std::vector<int> values;
    values.reserve(interactions_.size());
    double sum = 0.0;
    for (const Rating& r : interactions_.all()) {
      values.push_back(r.value);
      sum += r.value;
    }
    std::sort(values.begin(), values.end());
    st.avg_rating = sum / static_cast<double>(values.size());
    const std::size_t n = values.size();
    st.median_rating = (n % 2 == 1) ? values[n / 2]
                                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    st.ratings_per_user = static_cast<double>(st.interactions) / st.users;
    st.ratings_per_item = static_cast<double>(st.interactions) / st.items;
  }
  return st;
}

// --- ThemeCatalog -----------------------------------------------------------

ThemeCatalog::ThemeCatalog(std::vector<ThemeInfo> themes, std::vector<ItemRecord> items)
    : themes_(std::move(themes)), items_(std::move(items)) {
  std::sort(themes_.begin(), themes_.end(),
            [](const ThemeInfo& a, const ThemeInfo& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < themes_.size(); ++i) {
    if (!pos_.emplace(themes_[i].id, static_cast<int>(i)).second)
      throw DataError("duplicate theme id " + std::to_string(themes_[i].id));
  }
  std::vector<std::string> duplicates;
  std::vector<std::string> dangling;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!item_pos_.emplace(items_[i].item_id, i).second) duplicates.push_back(items_[i].item_id);
    if (items_[i].theme_id && pos_.count(*items_[i].theme_id) == 0)
      dangling.push_back(items_[i].item_id + " -> theme " + std::to_string(*items_[i].theme_id));
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate item ids:";
    for (const auto& d : duplicates) msg += " " + d;
    throw DataError(msg);
  }
  if (!dangling.empty()) {
    std::string msg = "items referencing unknown themes:";
    for (const auto& d : dangling) msg += " " + d;
    throw DataError(msg);
  }
}

std::optional<int> ThemeCatalog::theme_of_external(const std::string& item_id) const {
  auto it = item_pos_.find(item_id);
  if (it == item_pos_.end()) return std::nullopt;
  return items_[it->second].theme_id;
}

// --- ThemeAssignment --------------------------------------------------------

ThemeAssignment::ThemeAssignment(std::vector<ThemeInfo> themes, std::vector<int> slot_of_item,
                                 std::vector<std::string> item_ids)
    : themes_(std::move(themes)),
      slot_of_item_(std::move(slot_of_item)),
      item_ids_(std::move(item_ids)) {}

int ThemeAssignment::theme_slot(int item_index) const {
  const int slot = slot_of_item_[item_index];
  if (slot < 0) throw DataError("item without theme: " + item_ids_[item_index]);
  return slot;
}

std::vector<std::string> ThemeAssignment::unassigned_items() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < slot_of_item_.size(); ++i)
    if (slot_of_item_[i] < 0) out.push_back(item_ids_[i]);
  return out;
}

// --- ingestion --------------------------------------------------------------

std::vector<Interaction> load_interactions(const std::string& path) {
  CsvReader reader(path);
  expect_header(reader, {"user_id", "item_id", "rating"});
  std::vector<Interaction> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::string where = path + ": line " + std::to_string(reader.line());
    if (fields.size() != 3) throw DataError(where + ": expected 3 columns");
    int rating = 0;
    if (!parse_int(fields[2], rating)) throw DataError(where + ": non-integer rating");
    if (rating < 0 || rating > 10) throw DataError(where + ": rating outside [0, 10]");
    out.push_back({std::move(fields[0]), std::move(fields[1]), rating});
  }
  return out;
}

ThemeCatalog load_theme_catalog(const std::string& items_path, const std::string& themes_path) {
  std::vector<ThemeInfo> themes;
  {
    CsvReader reader(themes_path);
    expect_header(reader, {"theme_id", "label"});
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      const std::string where = themes_path + ": line " + std::to_string(reader.line());
      if (fields.size() != 2) throw DataError(where + ": expected 2 columns");
      int id = 0;
      if (!parse_int(fields[0], id)) throw DataError(where + ": non-integer theme_id");
      themes.push_back({id, std::move(fields[1])});
    }
  }
  std::vector<ItemRecord> items;
  {
    CsvReader reader(items_path);
    const std::size_t ncols = expect_header(reader, {"item_id", "theme_id"}, {"title", "author"});
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      const std::string where = items_path + ": line " + std::to_string(reader.line());
      if (fields.size() != ncols) throw DataError(where + ": expected " +
                                                  std::to_string(ncols) + " columns");
      ItemRecord rec;
      rec.item_id = std::move(fields[0]);
      if (!fields[1].empty()) {
        int tid = 0;
        if (!parse_int(fields[1], tid)) throw DataError(where + ": non-integer theme_id");
        rec.theme_id = tid;
      }
      if (ncols > 2) rec.title = std::move(fields[2]);
      if (ncols > 3) rec.author = std::move(fields[3]);
      items.push_back(std::move(rec));
    }
  }
  return ThemeCatalog(std::move(themes), std::move(items));
}

// --- preprocessing ----------------------------------------------------------

std::string duplicate_merge_key(const ItemRecord& rec) {
  if (rec.title.empty() && rec.author.empty()) return {};
  std::string key;
  auto append_normalized = [&key](const std::string& s) {
    bool pending_space = false;
    for (char ch : s) {
      const unsigned char c = static_cast<unsigned char>(ch);
      if (std::isalnum(c)) {
        if (pending_space && !key.empty()) key.push_back(' ');
        pending_space = false;
        key.push_back(static_cast<char>(std::tolower(c)));
      } else if (std::isspace(c)) {
        pending_space = true;
      }
      // punctuation dropped without acting as a separator
    }
  };
  append_normalized(rec.title);
  key.push_back('\x1f');
  append_normalized(rec.author);
  return key;
}

IndexedDataset preprocess(const std::vector<Interaction>& raw,
                          const std::vector<ItemRecord>& items) {
  // duplicate-item merge: groups share a normalized title+author key; the
  // lexicographically smallest item id becomes canonical
  std::unordered_map<std::string, std::string> canonical;  // item_id -> canonical id
  {
    std::unordered_map<std::string, std::string> smallest_by_key;
    for (const ItemRecord& rec : items) {
      const std::string key = duplicate_merge_key(rec);
      if (key.empty()) continue;
      auto it = smallest_by_key.find(key);
      if (it == smallest_by_key.end() || rec.item_id < it->second)
        smallest_by_key.insert_or_assign(key, rec.item_id);
    }
    for (const ItemRecord& rec : items) {
      const std::string key = duplicate_merge_key(rec);
      if (key.empty()) continue;
      const std::string& canon = smallest_by_key.at(key);
      if (canon != rec.item_id) canonical.emplace(rec.item_id, canon);
    }
  }

  // explicit ratings only, duplicates collapsed to the highest rating
  std::map<std::pair<std::string, std::string>, int> dedup;
  for (const Interaction& x : raw) {
    if (x.rating == 0) continue;
    auto it = canonical.find(x.item_id);
    const std::string& item = it == canonical.end() ? x.item_id : it->second;
    auto key = std::make_pair(x.user_id, item);
    auto [pos, inserted] = dedup.emplace(std::move(key), x.rating);
    if (!inserted && x.rating > pos->second) pos->second = x.rating;
  }

  // degree filters to fixpoint
  std::map<std::string, int> user_deg, item_deg;
  for (const auto& [key, rating] : dedup) {
    ++user_deg[key.first];
    ++item_deg[key.second];
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = dedup.begin(); it != dedup.end();) {
      const int ud = user_deg[it->first.first];
      const int id = item_deg[it->first.second];
      if (ud < 5 || ud > 200 || id < 5) {
        --user_deg[it->first.first];
        --item_deg[it->first.second];
        it = dedup.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  if (dedup.empty()) throw DataError("no data survives preprocessing");

  // dense indices in ascending external-key order
  std::vector<std::string> user_ids, item_ids;
  {
    std::set<std::string> users, its;
    for (const auto& [key, rating] : dedup) {
      users.insert(key.first);
      its.insert(key.second);
    }
    user_ids.assign(users.begin(), users.end());
    item_ids.assign(its.begin(), its.end());
  }
  std::unordered_map<std::string, int> user_index, item_index;
  for (std::size_t i = 0; i < user_ids.size(); ++i) user_index[user_ids[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < item_ids.size(); ++i) item_index[item_ids[i]] = static_cast<int>(i);

  std::vector<Rating> entries;
  entries.reserve(dedup.size());
  for (const auto& [key, rating] : dedup)
    entries.push_back({user_index[key.first], item_index[key.second], rating});

  InteractionSet set = InteractionSet::build(static_cast<int>(user_ids.size()),
                                             static_cast<int>(item_ids.size()),
                                             std::move(entries));
  return IndexedDataset(std::move(user_ids), std::move(item_ids), std::move(set));
}

ThemeAssignment bind_themes(const ThemeCatalog& catalog, const IndexedDataset& ds) {
  std::vector<int> slot(ds.n_items(), -1);
  std::unordered_map<int, int> pos;
  for (std::size_t i = 0; i < catalog.themes().size(); ++i)
    pos[catalog.themes()[i].id] = static_cast<int>(i);
  for (int i = 0; i < ds.n_items(); ++i) {
    const auto tid = catalog.theme_of_external(ds.item_ids()[i]);
    if (tid) slot[i] = pos.at(*tid);
  }
  return ThemeAssignment(catalog.themes(), std::move(slot), ds.item_ids());
}

// --- split ------------------------------------------------------------------

DataSplit split(const IndexedDataset& ds, std::uint64_t seed, double valid_frac,
                double test_frac) {
  if (valid_frac < 0.0 || test_frac < 0.0 || valid_frac + test_frac >= 1.0)
    throw ConfigError("split fractions must be nonnegative and sum below 1");
  const InteractionSet& all = ds.interactions();
  std::vector<Rating> train, valid, test;
  train.reserve(all.size());
  for (int u = 0; u < ds.n_users(); ++u) {
    auto row = all.user_row(u);
    std::vector<Rating> shuffled(row.begin(), row.end());
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(u)));
    shuffle_in_place(shuffled, rng);
    const std::size_t n = shuffled.size();
    const auto n_test = static_cast<std::size_t>(std::floor(test_frac * n + 1e-9));
    const auto n_valid = static_cast<std::size_t>(std::floor(valid_frac * n + 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_test) test.push_back(shuffled[i]);
      else if (i < n_test + n_valid) valid.push_back(shuffled[i]);
      else train.push_back(shuffled[i]);
    }
  }
  DataSplit out;
  out.train = InteractionSet::build(ds.n_users(), ds.n_items(), std::move(train));
  out.valid = InteractionSet::build(ds.n_users(), ds.n_items(), std::move(valid));
  out.test = InteractionSet::build(ds.n_users(), ds.n_items(), std::move(test));
  out.seed = seed;
  return out;
}

// --- popular subset ---------------------------------------------------------

PopularitySet popular_set(const InteractionSet& train, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError("popular fraction must lie in (0, 1]");
  if (train.empty()) throw DataError("popular_set: empty train set");
  PopularitySet out;
  out.fraction = fraction;
  out.train_counts = train.item_counts();
  const int n = train.n_items();
  out.ranking.resize(n);
  for (int i = 0; i < n; ++i) out.ranking[i] = i;
  std::sort(out.ranking.begin(), out.ranking.end(), [&](int a, int b) {
    if (out.train_counts[a] != out.train_counts[b])
      return out.train_counts[a] > out.train_counts[b];
    return a < b;
  });
  out.size = static_cast<int>(std::ceil(fraction * n - 1e-9));
  out.member.assign(n, 0);
  for (int i = 0; i < out.size; ++i) out.member[out.ranking[i]] = 1;
  return out;
}

// --- theme distribution -----------------------------------------------------

std::vector<double> theme_distribution(std::span<const int> item_set,
                                       const ThemeAssignment& themes) {
  if (item_set.empty()) throw DataError("theme_distribution: empty item set");
  std::vector<double> shares(themes.theme_count(), 0.0);
  for (int item : item_set) shares[themes.theme_slot(item)] += 1.0;
  const double total = static_cast<double>(item_set.size());
  for (double& s : shares) s /= total;
  return shares;
}

}  // namespace themetric
