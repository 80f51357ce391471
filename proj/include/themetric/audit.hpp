#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "themetric/corpus.hpp"
#include "themetric/metrics.hpp"
#include "themetric/models.hpp"
#include "themetric/segmentation.hpp"

namespace themetric {

enum class AuditStage { Data, Recs, Groups };

struct AuditConfig {
  std::string interactions_path;
  std::string items_path;
  std::string themes_path;
  std::uint64_t seed = 42;
  double train_frac = 0.8;
  double valid_frac = 0.1;
  double test_frac = 0.1;
  int k = 10;
  double popular_fraction = 0.2;
  int relevance_threshold = 0;  // 0: every test item is relevant
  GiniSupport gini_support = GiniSupport::Nonzero;
  bool exclude_seen = true;
  ShareBasis exposure_rec_basis = ShareBasis::Slots;
  ShareBasis exposure_train_basis = ShareBasis::UniqueItems;
  std::vector<Algo> algorithms;          // defaults to all eight
  std::vector<AuditStage> stages;        // defaults to data, recs, groups
  std::map<Algo, std::vector<TrainConfig>> grids;  // overrides per algorithm
  std::string out_dir = "reports";
  std::string models_dir;  // when set, trained models are cached here

  AuditConfig();
  void validate() const;  // ConfigError on violated invariants
  bool runs_stage(AuditStage s) const;
};

struct DataBiasSection {
  std::vector<double> theme_share_unique;  // per theme slot, over unique books
  double top_20pct_theme_share = 0.0;      // cumulative share of the top ceil(0.2K) themes
  std::vector<ChiSquareResult> chi_square;
  int significant_themes = 0;
  std::vector<std::optional<double>> avg_popularity_ratio;
};

struct AlgoRecs {
  Algo algo = Algo::Random;
  TrainConfig config;
  RecommendationSet recs;
};

struct AlgoRecBias {
  Algo algo = Algo::Random;
  AccuracyReport accuracy;
  double coverage = 0.0;
  std::vector<double> rec_theme_share_slots;
  std::vector<double> rec_theme_share_unique;
  ExposureReport exposure;
};

struct RecBiasSection {
  std::vector<AlgoRecBias> algos;
};

struct AlgoGroupBias {
  Algo algo = Algo::Random;
  GroupDeltaReport report;
};

struct GroupBiasSection {
  IntersectionCensus census;
  DiversityAssignment diversity_meta;  // percentiles + degenerate flag
  std::vector<AlgoGroupBias> algos;
};

struct TuningLog {
  Algo algo = Algo::Random;
  std::vector<std::pair<TrainConfig, double>> scores;
  TrainConfig best;
};

struct BiasReportBundle {
  BiasReportBundle(AuditConfig cfg, DatasetStats stats, IndexedDataset ds)
      : config(std::move(cfg)), dataset_stats(stats), dataset(std::move(ds)) {}

  AuditConfig config;
  DatasetStats dataset_stats;
  IndexedDataset dataset;  // index needed to externalize ids in reports
  std::vector<TuningLog> tuning;
  std::vector<AlgoRecs> recommendations;
  std::optional<DataBiasSection> data_bias;
  std::optional<RecBiasSection> rec_bias;
  std::optional<GroupBiasSection> group_bias;
  std::vector<UserProfileStats> profiles;
  std::vector<PopularityGroup> pop_groups;
  std::vector<DiversityGroup> div_groups;
  std::vector<ThemeInfo> themes;
};

struct TrainedAlgo {
  Algo algo = Algo::Random;
  TrainConfig config;
  Model model;
  std::optional<TuningLog> tuning;  // baselines skip the grid phase
};

// Grid-tunes the learned algorithms on validation NDCG@k, then fits the
// chosen config of every configured algorithm on train. Honors
// config.models_dir as a model cache.
std::vector<TrainedAlgo> tune_and_train(const InteractionSet& train,
                                        const InteractionSet& valid, const AuditConfig& cfg);

DataBiasSection run_data_bias_audit(const IndexedDataset& ds, const ThemeAssignment& themes,
                                    const PopularitySet& popular, const InteractionSet& train);

RecBiasSection run_rec_bias_audit(const std::vector<AlgoRecs>& recs, const DataSplit& split,
                                  const ThemeAssignment& themes, const AuditConfig& cfg);

GroupBiasSection run_group_bias_audit(const std::vector<AlgoRecs>& recs,
                                      const std::vector<UserProfileStats>& stats,
                                      const std::vector<PopularityGroup>& pop_groups,
                                      const DiversityAssignment& diversity,
                                      const ThemeAssignment& themes,
                                      const PopularitySet& popular, const AuditConfig& cfg);

// Whole pipeline: preprocess -> split -> tune -> train -> recommend ->
// configured audit stages. Deterministic for a fixed (inputs, config).
BiasReportBundle run_full(const AuditConfig& config);

// Writes data_bias.json / rec_bias.json / group_bias.json (as configured),
// summary.csv, segments.csv and recommendations_<algo>.csv. Atomic
// write-temp-then-rename per file. Returns the paths written.
std::vector<std::string> emit_reports(const BiasReportBundle& bundle, const std::string& out_dir);

}  // namespace themetric
