#pragma once

#include <optional>
#include <span>
#include <vector>

#include "themetric/corpus.hpp"
#include "themetric/models.hpp"

namespace themetric {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// relevant must be sorted ascending. nullopt when the relevant set is
// empty ("not evaluable"); such users are excluded from averages.
std::optional<Prf> precision_recall_f1_at_k(std::span<const ScoredItem> recs,
                                            std::span<const int> relevant, int k);

// Binary relevance: DCG = sum rel_i / log2(i+1), IDCG over
// min(k, |relevant|) ones.
std::optional<double> ndcg_at_k(std::span<const ScoredItem> recs, std::span<const int> relevant,
                                int k);

struct AccuracyReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ndcg = 0.0;
  int evaluated_users = 0;
};

AccuracyReport accuracy_report(const RecommendationSet& recs,
                               const std::vector<std::vector<int>>& relevant, int k);

// |distinct recommended items| / n_items.
double item_coverage(const RecommendationSet& recs, int n_items);

enum class ShareBasis { Slots, UniqueItems };

struct ThemeExposure {
  int theme_id = 0;
  double rec_share_slots = 0.0;
  double rec_share_unique = 0.0;
  double train_share_unique = 0.0;
  double train_share_slots = 0.0;
  bool defined = false;  // train-side share > 0
  double ratio = 0.0;    // rec share / train share on the configured bases
};

struct ExposureReport {
  ShareBasis rec_basis = ShareBasis::Slots;
  ShareBasis train_basis = ShareBasis::UniqueItems;
  std::vector<ThemeExposure> themes;  // one per theme slot
};

ExposureReport exposure_ratio(const RecommendationSet& recs, const InteractionSet& train,
                              const ThemeAssignment& themes,
                              ShareBasis rec_basis = ShareBasis::Slots,
                              ShareBasis train_basis = ShareBasis::UniqueItems);

// Mean book popularity ratio (train interactions of the book / all train
// interactions) over each theme's books. nullopt for themes with no books.
std::vector<std::optional<double>> avg_popularity_ratio(const InteractionSet& train,
                                                        const ThemeAssignment& themes);

struct ChiSquareResult {
  int theme_id = 0;
  double statistic = 0.0;
  int degrees_of_freedom = 1;
  double p_value = 1.0;
  bool significant = false;  // p < 0.05
  bool testable = true;      // false when a marginal is zero
};

// 2x2 independence test over unique books: {in theme, not} x {popular,
// not}, df = 1, no continuity correction.
ChiSquareResult chi_square_theme(int theme_slot, const PopularitySet& popular,
                                 const ThemeAssignment& themes);

enum class GiniSupport { Nonzero, Full };

// Gini coefficient over the chosen support: G = sum_i (2i - n - 1) x_i /
// (n sum x), entries sorted ascending. All-zero input -> DataError.
double gini(std::span<const double> counts, GiniSupport mode);

struct GiniValue {
  double value = 0.0;
  GiniSupport support_mode = GiniSupport::Nonzero;
};

}  // namespace themetric
