#include "themetric/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "themetric/stats.hpp"

namespace themetric {

namespace {

int hits_in_topk(std::span<const ScoredItem> recs, std::span<const int> relevant, int k) {
  int hits = 0;
  const int limit = std::min<int>(k, static_cast<int>(recs.size()));
  for (int i = 0; i < limit; ++i) {
    if (std::binary_search(relevant.begin(), relevant.end(), recs[i].item)) ++hits;
  }
  return hits;
}

double log2_discount(int rank_1based) { return std::log2(static_cast<double>(rank_1based) + 1.0); }

}  // namespace

std::optional<Prf> precision_recall_f1_at_k(std::span<const ScoredItem> recs,
                                            std::span<const int> relevant, int k) {
  if (relevant.empty()) return std::nullopt;
  const int hits = hits_in_topk(recs, relevant, k);
  Prf out;
  out.precision = static_cast<double>(hits) / k;  // k, not list length
  out.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

std::optional<double> ndcg_at_k(std::span<const ScoredItem> recs, std::span<const int> relevant,
                                int k) {
  if (relevant.empty()) return std::nullopt;
  double dcg = 0.0;
  const int limit = std::min<int>(k, static_cast<int>(recs.size()));
  for (int i = 0; i < limit; ++i) {
    if (std::binary_search(relevant.begin(), relevant.end(), recs[i].item))
      dcg += 1.0 / log2_discount(i + 1);
  }
  double idcg = 0.0;
  const int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  for (int i = 0; i < ideal; ++i) idcg += 1.0 / log2_discount(i + 1);
  return dcg / idcg;
}

AccuracyReport accuracy_report(const RecommendationSet& recs,
                               const std::vector<std::vector<int>>& relevant, int k) {
  AccuracyReport report;
  double p = 0.0, r = 0.0, f = 0.0, n = 0.0;
  int evaluated = 0;
  for (std::size_t u = 0; u < recs.lists.size(); ++u) {
    const auto& rel = relevant[u];
    const auto prf = precision_recall_f1_at_k(recs.lists[u], rel, k);
    if (!prf) continue;
    const auto nd = ndcg_at_k(recs.lists[u], rel, k);
    p += prf->precision;
    r += prf->recall;
    f += prf->f1;
    n += *nd;
    ++evaluated;
  }
  if (evaluated > 0) {
    report.precision = p / evaluated;
    report.recall = r / evaluated;
    report.f1 = f / evaluated;
    report.ndcg = n / evaluated;
  }
  report.evaluated_users = evaluated;
  return report;
}

double item_coverage(const RecommendationSet& recs, int n_items) {
  if (recs.lists.empty()) throw DataError("item_coverage: empty recommendation set");
  std::vector<char> seen(n_items, 0);
  std::int64_t distinct = 0;
  for (const auto& list : recs.lists) {
    for (const ScoredItem& s : list) {
      if (!seen[s.item]) {
        seen[s.item] = 1;
        ++distinct;
      }
    }
  }
  return static_cast<double>(distinct) / static_cast<double>(n_items);
}

ExposureReport exposure_ratio(const RecommendationSet& recs, const InteractionSet& train,
                              const ThemeAssignment& themes, ShareBasis rec_basis,
                              ShareBasis train_basis) {
  const int n_themes = themes.theme_count();
  const int n_items = train.n_items();

  std::vector<double> rec_slots(n_themes, 0.0), rec_unique(n_themes, 0.0);
  std::vector<double> train_unique(n_themes, 0.0), train_slots(n_themes, 0.0);

  std::vector<char> item_recommended(n_items, 0);
  double total_slots = 0.0;
  for (const auto& list : recs.lists) {
    for (const ScoredItem& s : list) {
      rec_slots[themes.theme_slot(s.item)] += 1.0;
      total_slots += 1.0;
      item_recommended[s.item] = 1;
    }
  }
  double total_rec_unique = 0.0;
  for (int i = 0; i < n_items; ++i) {
    if (item_recommended[i]) {
      rec_unique[themes.theme_slot(i)] += 1.0;
      total_rec_unique += 1.0;
    }
  }

  double total_train_unique = 0.0, total_train_slots = 0.0;
  for (int i = 0; i < n_items; ++i) {
    const auto col = train.item_col(i);
    if (col.empty()) continue;
    const int slot = themes.theme_slot(i);
    train_unique[slot] += 1.0;
    total_train_unique += 1.0;
    train_slots[slot] += static_cast<double>(col.size());
    total_train_slots += static_cast<double>(col.size());
  }

  auto normalize = [](std::vector<double>& v, double total) {
    if (total > 0.0)
      for (double& x : v) x /= total;
  };
  normalize(rec_slots, total_slots);
  normalize(rec_unique, total_rec_unique);
  normalize(train_unique, total_train_unique);
  normalize(train_slots, total_train_slots);

  ExposureReport report;
  report.rec_basis = rec_basis;
  report.train_basis = train_basis;
  report.themes.resize(n_themes);
  for (int t = 0; t < n_themes; ++t) {
    ThemeExposure& e = report.themes[t];
    e.theme_id = themes.themes()[t].id;
    e.rec_share_slots = rec_slots[t];
    e.rec_share_unique = rec_unique[t];
    e.train_share_unique = train_unique[t];
    e.train_share_slots = train_slots[t];
    const double rec_share = rec_basis == ShareBasis::Slots ? rec_slots[t] : rec_unique[t];
    const double train_share =
        train_basis == ShareBasis::Slots ? train_slots[t] : train_unique[t];
    e.defined = train_share > 0.0;
    e.ratio = e.defined ? rec_share / train_share : 0.0;
  }
  return report;
}

std::vector<std::optional<double>> avg_popularity_ratio(const InteractionSet& train,
                                                        const ThemeAssignment& themes) {
  const int n_themes = themes.theme_count();
  std::vector<double> ratio_sum(n_themes, 0.0);
  std::vector<int> book_count(n_themes, 0);
  const double total = static_cast<double>(train.size());
  if (total <= 0.0) throw DataError("avg_popularity_ratio: empty train set");
  for (int i = 0; i < train.n_items(); ++i) {
    const int slot = themes.theme_slot(i);
    ++book_count[slot];
    ratio_sum[slot] += static_cast<double>(train.item_col(i).size()) / total;
  }
  std::vector<std::optional<double>> out(n_themes);
  for (int t = 0; t < n_themes; ++t) {
    if (book_count[t] > 0) out[t] = ratio_sum[t] / book_count[t];
  }
  return out;
}

ChiSquareResult chi_square_theme(int theme_slot, const PopularitySet& popular,
                                 const ThemeAssignment& themes) {
  ChiSquareResult result;
  result.theme_id = themes.themes()[theme_slot].id;

  // 2x2 over unique books: {in theme, not} x {popular, not}
  double obs[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (int i = 0; i < themes.n_items(); ++i) {
    const int row = themes.theme_slot(i) == theme_slot ? 0 : 1;
    const int col = popular.contains(i) ? 0 : 1;
    obs[row][col] += 1.0;
  }
  const double row_sum[2] = {obs[0][0] + obs[0][1], obs[1][0] + obs[1][1]};
  const double col_sum[2] = {obs[0][0] + obs[1][0], obs[0][1] + obs[1][1]};
  const double total = row_sum[0] + row_sum[1];
  if (row_sum[0] == 0.0 || row_sum[1] == 0.0 || col_sum[0] == 0.0 || col_sum[1] == 0.0) {
    result.testable = false;
    return result;
  }
  double stat = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double expected = row_sum[r] * col_sum[c] / total;
      const double diff = obs[r][c] - expected;
      stat += diff * diff / expected;
    }
  }
  result.statistic = stat;
  result.p_value = chi_square_upper_tail(stat, 1);
  result.significant = result.p_value < 0.05;
  return result;
}

double gini(std::span<const double> counts, GiniSupport mode) {
  std::vector<double> support;
  support.reserve(counts.size());
  for (double v : counts) {
    if (v < 0.0) throw DataError("gini: negative count");
    if (mode == GiniSupport::Full || v > 0.0) support.push_back(v);
  }
  double sum = 0.0;
  for (double v : support) sum += v;
  if (support.empty() || sum <= 0.0) throw DataError("gini: all-zero vector");
  std::sort(support.begin(), support.end());
  const double n = static_cast<double>(support.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i)
    acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * support[i];
  return acc / (n * sum);
}

}  // namespace themetric
