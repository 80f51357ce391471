#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "themetric/corpus.hpp"
#include "themetric/metrics.hpp"
#include "themetric/models.hpp"

namespace themetric {

struct UserProfileStats {
  int user = 0;
  double popular_share = 0.0;
  int theme_count = 0;
  std::vector<double> theme_counts;  // per theme slot
  double gini = 0.0;
};

enum class PopularityGroup { Mainstream, Mixed, LongTail };
enum class DiversityGroup { Specialist, Moderate, Generalist };

std::string popularity_group_name(PopularityGroup g);
std::string diversity_group_name(DiversityGroup g);

// History stats per user over their train items. Users without train
// items are not expected here (preprocess + split guarantee >= 1).
std::vector<UserProfileStats> profile_users(const InteractionSet& train,
                                            const PopularitySet& popular,
                                            const ThemeAssignment& themes,
                                            GiniSupport gini_support);

// share > 0.7 -> Mainstream, share < 0.3 -> LongTail, else Mixed
// (both boundaries fall in Mixed).
PopularityGroup assign_popularity_group(const UserProfileStats& stats);

struct DiversityAssignment {
  std::vector<DiversityGroup> groups;  // aligned with the input stats
  double p25_theme_count = 0.0;
  double p75_theme_count = 0.0;
  double p25_gini = 0.0;
  double p75_gini = 0.0;
  // all-equal stats: the inclusive rules make everyone Specialist
  bool degenerate = false;
};

// Nearest-rank percentiles over the population; Specialist checked before
// Generalist, bounds inclusive. Population < 4 -> DataError.
DiversityAssignment assign_diversity_groups(std::span<const UserProfileStats> stats);

struct IntersectionCensus {
  // cell [pop][div], indexed by enum order
  std::array<std::array<int, 3>, 3> counts{};
  std::vector<std::pair<PopularityGroup, DiversityGroup>> cell_of_user;
};

IntersectionCensus intersect_groups(std::span<const PopularityGroup> pop,
                                    std::span<const DiversityGroup> div);

struct GroupDeltaRow {
  std::string group_key;  // "pop:...", "div:..." or "cell:pop|div"
  int population = 0;
  std::optional<double> hist_themes_mean;
  std::optional<double> rec_themes_mean;
  std::optional<double> hist_gini_mean;
  std::optional<double> rec_gini_mean;
  std::optional<double> hist_popular_share_mean;
  std::optional<double> rec_popular_share_mean;
  std::optional<int> hist_dominant_theme;  // theme id, ties -> ascending id
  std::optional<int> rec_dominant_theme;
};

struct GroupDeltaReport {
  std::vector<GroupDeltaRow> rows;  // 3 pop + 3 div + 9 cells, fixed order
};

// History-vs-recommendation profile means per group and 3x3 cell for one
// algorithm's recommendations. Per-user values are averaged (not pooled).
GroupDeltaReport group_delta_report(const RecommendationSet& recs,
                                    std::span<const UserProfileStats> stats,
                                    std::span<const PopularityGroup> pop_groups,
                                    std::span<const DiversityGroup> div_groups,
                                    const ThemeAssignment& themes, const PopularitySet& popular,
                                    GiniSupport gini_support);

}  // namespace themetric
