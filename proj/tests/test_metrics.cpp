#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "themetric/metrics.hpp"
#include "themetric/rng.hpp"

using namespace themetric;

namespace {

std::vector<ScoredItem> as_list(const std::vector<int>& items) {
  std::vector<ScoredItem> out;
  double score = static_cast<double>(items.size());
  for (int i : items) out.push_back({i, score--});
  return out;
}

}  // namespace

TEST_CASE("precision/recall/f1 on the worked example") {
  // 2 hits in top-10, 4 relevant total
  const auto list = as_list({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const std::vector<int> relevant = {2, 5, 11, 12};
  const auto prf = precision_recall_f1_at_k(list, relevant, 10);
  REQUIRE(prf);
  CHECK(prf->precision == doctest::Approx(0.2));
  CHECK(prf->recall == doctest::Approx(0.5));
  CHECK(prf->f1 == doctest::Approx(2.0 * 0.2 * 0.5 / 0.7));
}

TEST_CASE("precision/recall/f1 with zero hits and empty relevant sets") {
  const auto list = as_list({1, 2, 3});
  const std::vector<int> relevant = {7};
  const auto prf = precision_recall_f1_at_k(list, relevant, 3);
  REQUIRE(prf);
  CHECK(prf->precision == 0.0);
  CHECK(prf->recall == 0.0);
  CHECK(prf->f1 == 0.0);
  CHECK_FALSE(precision_recall_f1_at_k(list, {}, 3).has_value());
}

TEST_CASE("precision/recall match the set-intersection oracle on randomized fixtures") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 40; ++trial) {
    const int n_items = 30;
    const int k = 1 + static_cast<int>(uniform_below(rng, 15));
    std::vector<int> pool(n_items);
    std::iota(pool.begin(), pool.end(), 0);
    shuffle_in_place(pool, rng);
    const int list_len = 1 + static_cast<int>(uniform_below(rng, n_items));
    std::vector<int> listed(pool.begin(), pool.begin() + list_len);
    std::set<int> relevant;
    const int n_rel = 1 + static_cast<int>(uniform_below(rng, 10));
    while (static_cast<int>(relevant.size()) < n_rel)
      relevant.insert(static_cast<int>(uniform_below(rng, n_items)));
    std::vector<int> rel_sorted(relevant.begin(), relevant.end());

    const auto got = precision_recall_f1_at_k(as_list(listed), rel_sorted, k);
    const auto want = oracle::prf_at_k(listed, relevant, k);
    REQUIRE(got);
    CHECK(std::fabs(got->precision - want.precision) < 1e-12);
    CHECK(std::fabs(got->recall - want.recall) < 1e-12);
    CHECK(std::fabs(got->f1 - want.f1) < 1e-12);

    const auto nd = ndcg_at_k(as_list(listed), rel_sorted, k);
    REQUIRE(nd);
    CHECK(std::fabs(*nd - oracle::ndcg_at_k(listed, relevant, k)) < 1e-12);
  }
}

TEST_CASE("ndcg hand computations") {
  // all top-k relevant
  CHECK(*ndcg_at_k(as_list({1, 2, 3}), std::vector<int>{1, 2, 3}, 3) == doctest::Approx(1.0));
  // single relevant item at rank 3, one relevant total: 1/log2(4)
  CHECK(*ndcg_at_k(as_list({9, 8, 5, 7}), std::vector<int>{5}, 10) == doctest::Approx(0.5));
  // relevant at ranks 1 and 4, two relevant total
  const double want = (1.0 + 1.0 / std::log2(5.0)) / (1.0 + 1.0 / std::log2(3.0));
  CHECK(*ndcg_at_k(as_list({4, 1, 2, 6}), std::vector<int>{4, 6}, 10) == doctest::Approx(want));
  CHECK(want == doctest::Approx(0.8772).epsilon(1e-4));
}

TEST_CASE("promoting a relevant item never lowers ndcg") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> listed(12);
    std::iota(listed.begin(), listed.end(), 0);
    shuffle_in_place(listed, rng);
    std::set<int> relevant;
    while (relevant.size() < 4) relevant.insert(static_cast<int>(uniform_below(rng, 12)));
    std::vector<int> rel_sorted(relevant.begin(), relevant.end());
    // find a non-relevant item ranked above some relevant item and swap
    for (std::size_t hi = 0; hi < listed.size(); ++hi) {
      if (relevant.count(listed[hi])) continue;
      for (std::size_t lo = hi + 1; lo < listed.size(); ++lo) {
        if (!relevant.count(listed[lo])) continue;
        const double before = *ndcg_at_k(as_list(listed), rel_sorted, 10);
        std::vector<int> swapped = listed;
        std::swap(swapped[hi], swapped[lo]);
        const double after = *ndcg_at_k(as_list(swapped), rel_sorted, 10);
        CHECK(after >= before - 1e-12);
        hi = listed.size();  // one swap per trial
        break;
      }
    }
  }
}

TEST_CASE("item_coverage identities and oracle") {
  // all users share one 10-item list over the paper-sized catalog
  RecommendationSet shared;
  shared.k = 10;
  shared.lists.assign(40, as_list({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  CHECK(item_coverage(shared, 5229) == doctest::Approx(10.0 / 5229.0));
  CHECK(item_coverage(shared, 5229) * 100.0 == doctest::Approx(0.19).epsilon(0.01));

  RecommendationSet full;
  full.k = 1;
  for (int i = 0; i < 25; ++i) full.lists.push_back(as_list({i}));
  CHECK(item_coverage(full, 25) == doctest::Approx(1.0));

  std::mt19937_64 rng(5150);
  RecommendationSet random_lists;
  random_lists.k = 5;
  for (int u = 0; u < 200; ++u) {
    std::vector<int> items;
    for (int r = 0; r < 5; ++r) items.push_back(static_cast<int>(uniform_below(rng, 90)));
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    random_lists.lists.push_back(as_list(items));
  }
  CHECK(item_coverage(random_lists, 90) == doctest::Approx(oracle::coverage(random_lists, 90)));
}

namespace {

// train with theme slot shares proportional to `weights` over unique items
InteractionSet themed_train(const std::vector<int>& item_counts, int n_users) {
  std::vector<Rating> entries;
  for (std::size_t i = 0; i < item_counts.size(); ++i)
    for (int u = 0; u < item_counts[i]; ++u)
      entries.push_back({u % n_users, static_cast<int>(i), 5});
  return InteractionSet::build(n_users, static_cast<int>(item_counts.size()), entries);
}

}  // namespace

TEST_CASE("exposure ratio identities") {
  // 4 items, 2 themes, both themes equally present in train (unique basis)
  const ThemeAssignment themes = fx::cyclic_themes(4, 2);
  const InteractionSet train = themed_train({5, 5, 5, 5}, 5);

  RecommendationSet recs;
  recs.k = 2;
  recs.lists.assign(10, as_list({0, 1}));  // theme 0 and theme 1 once each
  const ExposureReport report = exposure_ratio(recs, train, themes);
  REQUIRE(report.themes.size() == 2);
  CHECK(report.themes[0].defined);
  CHECK(report.themes[0].ratio == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.themes[1].ratio == doctest::Approx(1.0).epsilon(1e-9));

  RecommendationSet skewed;
  skewed.k = 10;
  std::vector<int> mostly_theme0 = {0, 2, 1};  // slots: 2/3 theme 0, 1/3 theme 1
  skewed.lists.assign(6, as_list(mostly_theme0));
  const ExposureReport s = exposure_ratio(skewed, train, themes);
  CHECK(s.themes[0].ratio == doctest::Approx((2.0 / 3.0) / 0.5));
  CHECK(s.themes[1].ratio == doctest::Approx((1.0 / 3.0) / 0.5));
}

TEST_CASE("exposure report on a 3-theme corpus matches hand-computed quotients") {
  // items 0..5; themes: 0,0,1,1,2,2. Unique train books: items 0..4 only
  // (item 5 unrated), so train unique shares are 2/5, 2/5, 1/5.
  std::vector<int> slots = {0, 0, 1, 1, 2, 2};
  const ThemeAssignment themes = fx::themes_from_slots(slots, 3);
  const InteractionSet train = themed_train({3, 2, 4, 1, 2, 0}, 4);

  RecommendationSet recs;
  recs.k = 4;
  recs.lists.push_back(as_list({0, 2, 4, 5}));  // slots: t0, t1, t2, t2
  recs.lists.push_back(as_list({1, 3, 4, 5}));  // slots: t0, t1, t2, t2
  const ExposureReport report = exposure_ratio(recs, train, themes);
  // rec slot shares: t0 = 2/8, t1 = 2/8, t2 = 4/8
  CHECK(report.themes[0].rec_share_slots == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(report.themes[1].rec_share_slots == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(report.themes[2].rec_share_slots == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(report.themes[0].train_share_unique == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(report.themes[0].ratio == doctest::Approx(0.25 / 0.4).epsilon(1e-9));
  CHECK(report.themes[1].ratio == doctest::Approx(0.25 / 0.4).epsilon(1e-9));
  CHECK(report.themes[2].ratio == doctest::Approx(0.5 / 0.2).epsilon(1e-9));
  // train slot shares: t0 = 5/12, t1 = 5/12, t2 = 2/12
  CHECK(report.themes[0].train_share_slots == doctest::Approx(5.0 / 12.0).epsilon(1e-9));
  // rec unique shares: distinct items {0,1,2,3,4,5} -> t0 2/6, t1 2/6, t2 2/6
  CHECK(report.themes[2].rec_share_unique == doctest::Approx(2.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("themes absent from train are flagged undefined") {
  std::vector<int> slots = {0, 1};
  const ThemeAssignment themes = fx::themes_from_slots(slots, 2);
  const InteractionSet train = themed_train({4, 0}, 4);  // theme 1 never rated
  RecommendationSet recs;
  recs.k = 1;
  recs.lists.push_back(as_list({1}));
  const ExposureReport report = exposure_ratio(recs, train, themes);
  CHECK(report.themes[0].defined);
  CHECK_FALSE(report.themes[1].defined);
}

TEST_CASE("average popularity ratio per theme") {
  // one theme holding all interactions via a single book
  {
    std::vector<int> slots = {0, 1};
    const ThemeAssignment themes = fx::themes_from_slots(slots, 2);
    const InteractionSet train = themed_train({7, 0}, 7);
    const auto values = avg_popularity_ratio(train, themes);
    REQUIRE(values[0]);
    CHECK(*values[0] == doctest::Approx(1.0));  // single book carries everything
  }
  // theme with two books at 10 and 30 interactions of 100 total
  {
    std::vector<int> slots = {0, 0, 1};
    const ThemeAssignment themes = fx::themes_from_slots(slots, 2);
    const InteractionSet train = themed_train({10, 30, 60}, 60);
    const auto values = avg_popularity_ratio(train, themes);
    REQUIRE(values[0]);
    CHECK(*values[0] == doctest::Approx((0.1 + 0.3) / 2.0));
  }
}

TEST_CASE("avg popularity ratios weighted by book counts sum to one") {
  std::mt19937_64 rng(31);
  std::vector<int> slots(40);
  for (int& s : slots) s = static_cast<int>(uniform_below(rng, 6));
  const ThemeAssignment themes = fx::themes_from_slots(slots, 6);
  std::vector<int> counts(40);
  for (int& c : counts) c = 1 + static_cast<int>(uniform_below(rng, 9));
  const InteractionSet train = themed_train(counts, 9);

  const auto values = avg_popularity_ratio(train, themes);
  std::vector<int> books_per_theme(6, 0);
  for (int s : slots) ++books_per_theme[s];
  double weighted = 0.0;
  for (int t = 0; t < 6; ++t)
    if (values[t]) weighted += *values[t] * books_per_theme[t];
  CHECK(std::fabs(weighted - 1.0) < 1e-9);
}

TEST_CASE("theme with zero books is excluded with a flag") {
  std::vector<int> slots = {0, 0};
  const ThemeAssignment themes = fx::themes_from_slots(slots, 2);  // theme 1 bookless
  const InteractionSet train = themed_train({3, 2}, 3);
  const auto values = avg_popularity_ratio(train, themes);
  CHECK(values[0].has_value());
  CHECK_FALSE(values[1].has_value());
}

TEST_CASE("chi-square: observed equals expected gives statistic 0, p 1") {
  // 2 themes x popular split exactly proportional: 10 of 40 popular in each
  std::vector<int> slots(80);
  std::vector<char> member(80, 0);
  for (int i = 0; i < 80; ++i) slots[i] = i < 40 ? 0 : 1;
  for (int i = 0; i < 10; ++i) member[i] = 1;
  for (int i = 40; i < 50; ++i) member[i] = 1;
  const ThemeAssignment themes = fx::themes_from_slots(slots, 2);
  const PopularitySet popular =
      fx::popularity_from_members(member, std::vector<std::int64_t>(80, 1));
  const ChiSquareResult r = chi_square_theme(0, popular, themes);
  CHECK(r.testable);
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK_FALSE(r.significant);
}

TEST_CASE("chi-square hand-computed table [[10,20],[20,10]]") {
  // theme books: 10 popular + 20 not; other books: 20 popular + 10 not
  std::vector<int> slots(60);
  std::vector<char> member(60, 0);
  for (int i = 0; i < 60; ++i) slots[i] = i < 30 ? 0 : 1;
  for (int i = 0; i < 10; ++i) member[i] = 1;
  for (int i = 30; i < 50; ++i) member[i] = 1;
  const ThemeAssignment themes = fx::themes_from_slots(slots, 2);
  const PopularitySet popular =
      fx::popularity_from_members(member, std::vector<std::int64_t>(60, 1));
  const ChiSquareResult r = chi_square_theme(0, popular, themes);
  CHECK(r.statistic == doctest::Approx(6.6667).epsilon(1e-4));
  CHECK(r.p_value == doctest::Approx(0.00982).epsilon(1e-2));
  CHECK(std::fabs(r.p_value - 0.00982) < 1e-4);
  CHECK(r.significant);
  CHECK(r.degrees_of_freedom == 1);

  // swapping rows (testing the complement theme) keeps the statistic
  const ChiSquareResult other = chi_square_theme(1, popular, themes);
  CHECK(other.statistic == doctest::Approx(r.statistic).epsilon(1e-12));

  // swapping columns (complement popular set) keeps the statistic
  std::vector<char> complement(60);
  for (int i = 0; i < 60; ++i) complement[i] = member[i] ? 0 : 1;
  const PopularitySet flipped =
      fx::popularity_from_members(complement, std::vector<std::int64_t>(60, 1));
  const ChiSquareResult swapped = chi_square_theme(0, flipped, themes);
  CHECK(swapped.statistic == doctest::Approx(r.statistic).epsilon(1e-12));
}

TEST_CASE("chi-square zero marginal is not testable") {
  std::vector<int> slots = {0, 0, 0, 0};  // theme 1 has zero books
  const ThemeAssignment themes = fx::themes_from_slots(slots, 2);
  const PopularitySet popular =
      fx::popularity_from_members({1, 1, 0, 0}, std::vector<std::int64_t>(4, 1));
  CHECK_FALSE(chi_square_theme(1, popular, themes).testable);
}

TEST_CASE("gini closed forms") {
  const std::vector<double> uniform = {3, 3, 3, 3, 3};
  CHECK(gini(uniform, GiniSupport::Nonzero) == 0.0);
  CHECK(gini(uniform, GiniSupport::Full) == 0.0);

  const std::vector<double> point_mass = {0, 0, 0, 12};
  CHECK(gini(point_mass, GiniSupport::Full) == doctest::Approx(0.75));
  CHECK(gini(point_mass, GiniSupport::Nonzero) == doctest::Approx(0.0));

  const std::vector<double> pair = {1, 3};
  CHECK(gini(pair, GiniSupport::Nonzero) == doctest::Approx(0.25));

  CHECK_THROWS_AS(gini(std::vector<double>{0.0, 0.0}, GiniSupport::Full), DataError);
  CHECK_THROWS_AS(gini(std::vector<double>{}, GiniSupport::Full), DataError);
  CHECK_THROWS_AS(gini(std::vector<double>{1.0, -1.0}, GiniSupport::Full), DataError);
}

TEST_CASE("gini is exactly scale-invariant for power-of-two factors") {
  const std::vector<double> v = {1, 5, 2, 9, 4};
  const double base = gini(v, GiniSupport::Nonzero);
  for (double lambda : {2.0, 4.0, 0.5, 0.25}) {
    std::vector<double> scaled;
    for (double x : v) scaled.push_back(lambda * x);
    CHECK(gini(scaled, GiniSupport::Nonzero) == base);
  }
}

TEST_CASE("gini transfer principle on 3-element vectors") {
  const std::vector<double> v = {2, 5, 9};
  // move one unit from the largest to the smallest entry
  const std::vector<double> transferred = {3, 5, 8};
  CHECK(gini(transferred, GiniSupport::Nonzero) < gini(v, GiniSupport::Nonzero));
}

TEST_CASE("gini matches the mean-absolute-difference oracle") {
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(uniform_below(rng, 10));
    std::vector<double> v(n);
    for (double& x : v) x = 1.0 + static_cast<double>(uniform_below(rng, 50));
    CHECK(std::fabs(gini(v, GiniSupport::Nonzero) - oracle::gini_mad(v)) < 1e-9);
  }
}

TEST_CASE("accuracy report averages only evaluable users") {
  RecommendationSet recs;
  recs.k = 2;
  recs.lists.push_back(as_list({0, 1}));
  recs.lists.push_back(as_list({2, 3}));
  recs.lists.push_back(as_list({4, 5}));
  std::vector<std::vector<int>> relevant = {{0, 1}, {}, {9}};
  const AccuracyReport report = accuracy_report(recs, relevant, 2);
  CHECK(report.evaluated_users == 2);
  CHECK(report.precision == doctest::Approx((1.0 + 0.0) / 2.0));
  CHECK(report.recall == doctest::Approx((1.0 + 0.0) / 2.0));
  CHECK(report.ndcg == doctest::Approx(0.5));
}
