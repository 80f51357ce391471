#include "themetric/segmentation.hpp"

#include <algorithm>
#include <cmath>

namespace themetric {

namespace {

// nearest-rank percentile: value at rank ceil(q * n) in ascending order
double percentile_nearest_rank(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return values[rank - 1];
}

struct ProfileView {
  double theme_count;
  double gini;
  double popular_share;
  const std::vector<double>* theme_counts;
};

// profile of one recommendation list, mirroring the history profile
std::optional<ProfileView> list_profile(std::span<const ScoredItem> list,
                                        const ThemeAssignment& themes,
                                        const PopularitySet& popular, GiniSupport gini_support,
                                        std::vector<double>& theme_scratch) {
  if (list.empty()) return std::nullopt;
  std::fill(theme_scratch.begin(), theme_scratch.end(), 0.0);
  int popular_hits = 0;
  for (const ScoredItem& s : list) {
    theme_scratch[themes.theme_slot(s.item)] += 1.0;
    if (popular.contains(s.item)) ++popular_hits;
  }
  ProfileView v;
  v.theme_count = 0.0;
  for (double c : theme_scratch)
    if (c > 0.0) v.theme_count += 1.0;
  v.gini = gini(theme_scratch, gini_support);
  v.popular_share = static_cast<double>(popular_hits) / static_cast<double>(list.size());
  v.theme_counts = &theme_scratch;
  return v;
}

struct RowAccumulator {
  int population = 0;
  int evaluable = 0;  // users with a non-empty recommendation list
  double hist_themes = 0.0, rec_themes = 0.0;
  double hist_gini = 0.0, rec_gini = 0.0;
  double hist_pop = 0.0, rec_pop = 0.0;
  std::vector<double> hist_theme_totals;
  std::vector<double> rec_theme_totals;
};

std::optional<int> dominant_theme(const std::vector<double>& totals,
                                  const std::vector<ThemeInfo>& themes) {
  int best = -1;
  for (std::size_t t = 0; t < totals.size(); ++t) {
    if (totals[t] <= 0.0) continue;
    if (best < 0 || totals[t] > totals[best]) best = static_cast<int>(t);
    // ties keep the earlier slot, i.e. the ascending theme id
  }
  if (best < 0) return std::nullopt;
  return themes[best].id;
}

GroupDeltaRow finalize_row(std::string key, const RowAccumulator& acc,
                           const std::vector<ThemeInfo>& themes) {
  GroupDeltaRow row;
  row.group_key = std::move(key);
  row.population = acc.population;
  if (acc.population > 0) {
    const double n = acc.population;
    row.hist_themes_mean = acc.hist_themes / n;
    row.hist_gini_mean = acc.hist_gini / n;
    row.hist_popular_share_mean = acc.hist_pop / n;
    row.hist_dominant_theme = dominant_theme(acc.hist_theme_totals, themes);
  }
  if (acc.evaluable > 0) {
    const double n = acc.evaluable;
    row.rec_themes_mean = acc.rec_themes / n;
    row.rec_gini_mean = acc.rec_gini / n;
    row.rec_popular_share_mean = acc.rec_pop / n;
    row.rec_dominant_theme = dominant_theme(acc.rec_theme_totals, themes);
  }
  return row;
}

}  // namespace

std::string popularity_group_name(PopularityGroup g) {
  switch (g) {
    case PopularityGroup::Mainstream: return "Mainstream";
    case PopularityGroup::Mixed: return "Mixed";
    case PopularityGroup::LongTail: return "LongTail";
  }
  return "?";
}

std::string diversity_group_name(DiversityGroup g) {
  switch (g) {
    case DiversityGroup::Specialist: return "Specialist";
    case DiversityGroup::Moderate: return "Moderate";
    case DiversityGroup::Generalist: return "Generalist";
  }
  return "?";
}

std::vector<UserProfileStats> profile_users(const InteractionSet& train,
                                            const PopularitySet& popular,
                                            const ThemeAssignment& themes,
                                            GiniSupport gini_support) {
  std::vector<UserProfileStats> out;
  out.reserve(train.n_users());
  for (int u = 0; u < train.n_users(); ++u) {
    auto row = train.user_row(u);
    if (row.empty()) throw DataError("profile_users: user " + std::to_string(u) +
                                     " has no train interactions");
    UserProfileStats stats;
    stats.user = u;
    stats.theme_counts.assign(themes.theme_count(), 0.0);
    int popular_hits = 0;
    for (const Rating& r : row) {
      stats.theme_counts[themes.theme_slot(r.item)] += 1.0;
      if (popular.contains(r.item)) ++popular_hits;
    }
    stats.popular_share = static_cast<double>(popular_hits) / static_cast<double>(row.size());
    stats.theme_count = 0;
    for (double c : stats.theme_counts)
      if (c > 0.0) ++stats.theme_count;
    stats.gini = gini(stats.theme_counts, gini_support);
    out.push_back(std::move(stats));
  }
  return out;
}

PopularityGroup assign_popularity_group(const UserProfileStats& stats) {
  if (stats.popular_share > 0.7) return PopularityGroup::Mainstream;
  if (stats.popular_share < 0.3) return PopularityGroup::LongTail;
  return PopularityGroup::Mixed;
}

DiversityAssignment assign_diversity_groups(std::span<const UserProfileStats> stats) {
  if (stats.size() < 4)
    throw DataError("assign_diversity_groups: population must be >= 4 for percentiles");
  std::vector<double> theme_counts, ginis;
  theme_counts.reserve(stats.size());
  ginis.reserve(stats.size());
  for (const UserProfileStats& s : stats) {
    theme_counts.push_back(static_cast<double>(s.theme_count));
    ginis.push_back(s.gini);
  }
  DiversityAssignment out;
  out.p25_theme_count = percentile_nearest_rank(theme_counts, 0.25);
  out.p75_theme_count = percentile_nearest_rank(theme_counts, 0.75);
  out.p25_gini = percentile_nearest_rank(ginis, 0.25);
  out.p75_gini = percentile_nearest_rank(ginis, 0.75);
  out.degenerate =
      out.p25_theme_count == out.p75_theme_count && out.p25_gini == out.p75_gini;

  out.groups.reserve(stats.size());
  for (const UserProfileStats& s : stats) {
    const double tc = static_cast<double>(s.theme_count);
    // Specialist checked first: with an all-equal population both rules
    // hold and everyone lands here
    if (tc <= out.p25_theme_count && s.gini >= out.p75_gini)
      out.groups.push_back(DiversityGroup::Specialist);
    else if (tc >= out.p75_theme_count && s.gini <= out.p25_gini)
      out.groups.push_back(DiversityGroup::Generalist);
    else
      out.groups.push_back(DiversityGroup::Moderate);
  }
  return out;
}

IntersectionCensus intersect_groups(std::span<const PopularityGroup> pop,
                                    std::span<const DiversityGroup> div) {
  if (pop.size() != div.size())
    throw DataError("intersect_groups: group maps cover different user sets");
  IntersectionCensus census;
  census.cell_of_user.reserve(pop.size());
  for (std::size_t u = 0; u < pop.size(); ++u) {
    census.counts[static_cast<int>(pop[u])][static_cast<int>(div[u])] += 1;
    census.cell_of_user.emplace_back(pop[u], div[u]);
  }
  return census;
}

GroupDeltaReport group_delta_report(const RecommendationSet& recs,
                                    std::span<const UserProfileStats> stats,
                                    std::span<const PopularityGroup> pop_groups,
                                    std::span<const DiversityGroup> div_groups,
                                    const ThemeAssignment& themes, const PopularitySet& popular,
                                    GiniSupport gini_support) {
  if (stats.size() != pop_groups.size() || stats.size() != div_groups.size())
    throw DataError("group_delta_report: stats and group maps must align");
  if (recs.lists.size() != stats.size())
    throw DataError("group_delta_report: recommendations missing for some profiled users");

  const int n_themes = themes.theme_count();
  const auto init_acc = [n_themes](RowAccumulator& acc) {
    acc.hist_theme_totals.assign(n_themes, 0.0);
    acc.rec_theme_totals.assign(n_themes, 0.0);
  };
  std::array<RowAccumulator, 3> by_pop;
  std::array<RowAccumulator, 3> by_div;
  std::array<std::array<RowAccumulator, 3>, 3> by_cell;
  for (auto& acc : by_pop) init_acc(acc);
  for (auto& acc : by_div) init_acc(acc);
  for (auto& row : by_cell)
    for (auto& acc : row) init_acc(acc);

  std::vector<double> theme_scratch(n_themes, 0.0);
  for (std::size_t u = 0; u < stats.size(); ++u) {
    const UserProfileStats& s = stats[u];
    const auto rec_profile =
        list_profile(recs.lists[u], themes, popular, gini_support, theme_scratch);
    const int p = static_cast<int>(pop_groups[u]);
    const int d = static_cast<int>(div_groups[u]);
    for (RowAccumulator* acc : {&by_pop[p], &by_div[d], &by_cell[p][d]}) {
      acc->population += 1;
      acc->hist_themes += s.theme_count;
      acc->hist_gini += s.gini;
      acc->hist_pop += s.popular_share;
      for (int t = 0; t < n_themes; ++t) acc->hist_theme_totals[t] += s.theme_counts[t];
      if (rec_profile) {
        acc->evaluable += 1;
        acc->rec_themes += rec_profile->theme_count;
        acc->rec_gini += rec_profile->gini;
        acc->rec_pop += rec_profile->popular_share;
        for (int t = 0; t < n_themes; ++t)
          acc->rec_theme_totals[t] += (*rec_profile->theme_counts)[t];
      }
    }
  }

  GroupDeltaReport report;
  for (int p = 0; p < 3; ++p) {
    report.rows.push_back(finalize_row(
        "pop:" + popularity_group_name(static_cast<PopularityGroup>(p)), by_pop[p],
        themes.themes()));
  }
  for (int d = 0; d < 3; ++d) {
    report.rows.push_back(finalize_row(
        "div:" + diversity_group_name(static_cast<DiversityGroup>(d)), by_div[d],
        themes.themes()));
  }
  for (int p = 0; p < 3; ++p) {
    for (int d = 0; d < 3; ++d) {
      report.rows.push_back(
          finalize_row("cell:" + popularity_group_name(static_cast<PopularityGroup>(p)) + "|" +
                           diversity_group_name(static_cast<DiversityGroup>(d)),
                       by_cell[p][d], themes.themes()));
    }
  }
  return report;
}

}  // namespace themetric
