#include "themetric/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "themetric/csv.hpp"
#include "themetric/report_io.hpp"

namespace themetric {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", round6(v));
  return buf;
}

nlohmann::json dataset_fingerprint(const InteractionSet& train, std::uint64_t seed) {
  return {{"seed", seed},
          {"n_users", train.n_users()},
          {"n_items", train.n_items()},
          {"train_interactions", train.size()}};
}

}  // namespace

// --- config ------------------------------------------------------------------

AuditConfig::AuditConfig() {
  algorithms = all_algos();
  stages = {AuditStage::Data, AuditStage::Recs, AuditStage::Groups};
}

void AuditConfig::validate() const {
  if (std::fabs(train_frac + valid_frac + test_frac - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  if (train_frac <= 0.0 || valid_frac < 0.0 || test_frac < 0.0)
    throw ConfigError("split ratios must be nonnegative with train > 0");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(popular_fraction > 0.0) || popular_fraction > 1.0)
    throw ConfigError("popular_fraction must lie in (0, 1]");
  if (relevance_threshold < 0 || relevance_threshold > 10)
    throw ConfigError("relevance_threshold must lie in [0, 10]");
  if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    for (std::size_t j = i + 1; j < algorithms.size(); ++j) {
      if (algorithms[i] == algorithms[j])
        throw ConfigError("duplicate algorithm: " + algo_name(algorithms[i]));
    }
  }
  for (const auto& [algo, grid] : grids) {
    if (grid.empty()) throw ConfigError("empty grid for " + algo_name(algo));
    for (const TrainConfig& c : grid) {
      if (c.algo != algo)
        throw ConfigError("grid for " + algo_name(algo) + " contains a " + algo_name(c.algo) +
                          " config");
    }
  }
}

bool AuditConfig::runs_stage(AuditStage s) const {
  return std::find(stages.begin(), stages.end(), s) != stages.end();
}

// --- tuning + training ---------------------------------------------------------

std::vector<TrainedAlgo> tune_and_train(const InteractionSet& train,
                                        const InteractionSet& valid, const AuditConfig& cfg) {
  namespace fs = std::filesystem;
  const bool cache = !cfg.models_dir.empty();
  if (cache) fs::create_directories(cfg.models_dir);

  std::vector<TrainedAlgo> out;
  for (Algo algo : cfg.algorithms) {
    const std::string cache_path =
        cache ? cfg.models_dir + "/model_" + algo_name(algo) + ".json" : std::string();

    if (cache && fs::exists(cache_path)) {
      std::ifstream in(cache_path);
      nlohmann::json j;
      in >> j;
      if (j.contains("fingerprint") &&
          j.at("fingerprint") == dataset_fingerprint(train, cfg.seed)) {
        TrainedAlgo t;
        t.algo = algo;
        if (algo == Algo::UserKnn) {
          t.config = train_config_from_json(j.at("config"), algo, cfg.seed);
          t.model = fit_userknn(train, t.config);
        } else {
          t.model = model_from_json(j, &t.config);
        }
        out.push_back(std::move(t));
        continue;
      }
      // stale cache entry: retrain below and overwrite
    }

    TrainedAlgo t;
    t.algo = algo;
    auto it = cfg.grids.find(algo);
    const std::vector<TrainConfig> grid =
        it != cfg.grids.end() ? it->second : default_grid(algo, cfg.seed);

    if (algo == Algo::Random || algo == Algo::MostPop) {
      t.config = grid.front();
    } else if (grid.size() == 1 && valid.empty()) {
      t.config = grid.front();
      t.tuning = TuningLog{algo, {}, grid.front()};
    } else {
      const GridResult result =
          grid_search(train, valid, grid, cfg.k, cfg.exclude_seen, cfg.relevance_threshold);
      t.config = result.best;
      t.tuning = TuningLog{algo, result.scores, result.best};
    }
    t.model = fit_model(train, t.config);

    if (cache) {
      nlohmann::json j = model_to_json(t.model, t.config);
      j["fingerprint"] = dataset_fingerprint(train, cfg.seed);
      atomic_write_file(cache_path, j.dump(2) + "\n");
    }
    out.push_back(std::move(t));
  }
  return out;
}

// --- stage: data bias -----------------------------------------------------------

DataBiasSection run_data_bias_audit(const IndexedDataset& ds, const ThemeAssignment& themes,
                                    const PopularitySet& popular, const InteractionSet& train) {
  DataBiasSection s;
  std::vector<int> all_items(ds.n_items());
  std::iota(all_items.begin(), all_items.end(), 0);
  s.theme_share_unique = theme_distribution(all_items, themes);

  // cumulative share held by the top ceil(0.2 K) themes
  std::vector<int> slots(themes.theme_count());
  std::iota(slots.begin(), slots.end(), 0);
  std::sort(slots.begin(), slots.end(), [&](int a, int b) {
    if (s.theme_share_unique[a] != s.theme_share_unique[b])
      return s.theme_share_unique[a] > s.theme_share_unique[b];
    return a < b;
  });
  const int top = static_cast<int>(
      std::ceil(0.2 * static_cast<double>(themes.theme_count()) - 1e-9));
  for (int i = 0; i < top; ++i) s.top_20pct_theme_share += s.theme_share_unique[slots[i]];

  s.significant_themes = 0;
  for (int t = 0; t < themes.theme_count(); ++t) {
    ChiSquareResult r = chi_square_theme(t, popular, themes);
    if (r.testable && r.significant) ++s.significant_themes;
    s.chi_square.push_back(std::move(r));
  }
  s.avg_popularity_ratio = avg_popularity_ratio(train, themes);
  return s;
}

// --- stage: recommendation bias ---------------------------------------------------

RecBiasSection run_rec_bias_audit(const std::vector<AlgoRecs>& recs, const DataSplit& split,
                                  const ThemeAssignment& themes, const AuditConfig& cfg) {
  RecBiasSection section;
  const auto relevant = relevant_sets(split.test, cfg.relevance_threshold);
  for (const AlgoRecs& ar : recs) {
    AlgoRecBias bias;
    bias.algo = ar.algo;
    bias.accuracy = accuracy_report(ar.recs, relevant, cfg.k);
    bias.coverage = item_coverage(ar.recs, split.train.n_items());
    bias.exposure = exposure_ratio(ar.recs, split.train, themes, cfg.exposure_rec_basis,
                                   cfg.exposure_train_basis);
    bias.rec_theme_share_slots.reserve(bias.exposure.themes.size());
    bias.rec_theme_share_unique.reserve(bias.exposure.themes.size());
    for (const ThemeExposure& e : bias.exposure.themes) {
      bias.rec_theme_share_slots.push_back(e.rec_share_slots);
      bias.rec_theme_share_unique.push_back(e.rec_share_unique);
    }
    section.algos.push_back(std::move(bias));
  }
  return section;
}

// --- stage: group bias -------------------------------------------------------------

GroupBiasSection run_group_bias_audit(const std::vector<AlgoRecs>& recs,
                                      const std::vector<UserProfileStats>& stats,
                                      const std::vector<PopularityGroup>& pop_groups,
                                      const DiversityAssignment& diversity,
                                      const ThemeAssignment& themes,
                                      const PopularitySet& popular, const AuditConfig& cfg) {
  GroupBiasSection section;
  section.census = intersect_groups(pop_groups, diversity.groups);
  section.diversity_meta = diversity;
  for (const AlgoRecs& ar : recs) {
    AlgoGroupBias bias;
    bias.algo = ar.algo;
    bias.report = group_delta_report(ar.recs, stats, pop_groups, diversity.groups, themes,
                                     popular, cfg.gini_support);
    section.algos.push_back(std::move(bias));
  }
  return section;
}

// --- full pipeline -------------------------------------------------------------------

BiasReportBundle run_full(const AuditConfig& config) {
  config.validate();
  const std::vector<Interaction> raw = load_interactions(config.interactions_path);
  const ThemeCatalog catalog = load_theme_catalog(config.items_path, config.themes_path);
  IndexedDataset ds = preprocess(raw, catalog.items());
  const ThemeAssignment themes = bind_themes(catalog, ds);
  {
    const auto missing = themes.unassigned_items();
    if (!missing.empty()) {
      std::string msg = "items without a theme after preprocessing:";
      for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
      if (missing.size() > 10) msg += " (+" + std::to_string(missing.size() - 10) + " more)";
      throw DataError(msg);
    }
  }
  const DataSplit sp = split(ds, config.seed, config.valid_frac, config.test_frac);
  const PopularitySet popular = popular_set(sp.train, config.popular_fraction);

  BiasReportBundle bundle{config, ds.stats(), std::move(ds)};
  bundle.themes = themes.themes();

  std::vector<TrainedAlgo> trained;
  try {
    trained = tune_and_train(sp.train, sp.valid, config);
  } catch (const std::exception& e) {
    throw TrainingError(std::string("training stage: ") + e.what());
  }
  for (TrainedAlgo& t : trained) {
    AlgoRecs ar;
    ar.algo = t.algo;
    ar.config = t.config;
    ar.recs = recommend_topk(t.model, sp.train, config.k, config.exclude_seen);
    bundle.recommendations.push_back(std::move(ar));
    if (t.tuning) bundle.tuning.push_back(std::move(*t.tuning));
  }

  bundle.profiles = profile_users(sp.train, popular, themes, config.gini_support);
  for (const UserProfileStats& s : bundle.profiles)
    bundle.pop_groups.push_back(assign_popularity_group(s));
  const DiversityAssignment diversity = assign_diversity_groups(bundle.profiles);
  bundle.div_groups = diversity.groups;

  if (config.runs_stage(AuditStage::Data))
    bundle.data_bias = run_data_bias_audit(bundle.dataset, themes, popular, sp.train);
  if (config.runs_stage(AuditStage::Recs))
    bundle.rec_bias = run_rec_bias_audit(bundle.recommendations, sp, themes, config);
  if (config.runs_stage(AuditStage::Groups))
    bundle.group_bias =
        run_group_bias_audit(bundle.recommendations, bundle.profiles, bundle.pop_groups,
                             diversity, themes, popular, config);

  emit_reports(bundle, config.out_dir);
  return bundle;
}

// --- emission ---------------------------------------------------------------------------

std::vector<std::string> emit_reports(const BiasReportBundle& bundle,
                                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  std::vector<std::string> written;
  const nlohmann::json provenance = provenance_to_json(bundle);

  auto write_json = [&](const std::string& name, nlohmann::json j) {
    j["provenance"] = provenance;
    const std::string path = out_dir + "/" + name;
    atomic_write_file(path, dump_fixed(j));
    written.push_back(path);
  };

  if (bundle.data_bias) write_json("data_bias.json", data_bias_to_json(*bundle.data_bias, bundle.themes));
  if (bundle.rec_bias) write_json("rec_bias.json", rec_bias_to_json(*bundle.rec_bias, bundle.themes));
  if (bundle.group_bias)
    write_json("group_bias.json", group_bias_to_json(*bundle.group_bias, bundle.themes));

  // summary.csv: one row per algorithm x metric
  {
    std::string csv = "algorithm,metric,value\n";
    if (bundle.rec_bias) {
      for (const AlgoRecBias& a : bundle.rec_bias->algos) {
        const std::string name = algo_name(a.algo);
        csv += name + ",precision," + fixed6(a.accuracy.precision) + "\n";
        csv += name + ",recall," + fixed6(a.accuracy.recall) + "\n";
        csv += name + ",f1," + fixed6(a.accuracy.f1) + "\n";
        csv += name + ",ndcg," + fixed6(a.accuracy.ndcg) + "\n";
        csv += name + ",coverage," + fixed6(a.coverage) + "\n";
        csv += name + ",evaluated_users," + std::to_string(a.accuracy.evaluated_users) + "\n";
      }
    }
    const std::string path = out_dir + "/summary.csv";
    atomic_write_file(path, csv);
    written.push_back(path);
  }

  // segments.csv
  {
    std::string csv = "user_id,popular_share,theme_count,gini,pop_group,div_group,cell\n";
    for (std::size_t u = 0; u < bundle.profiles.size(); ++u) {
      const UserProfileStats& s = bundle.profiles[u];
      const std::string pop = popularity_group_name(bundle.pop_groups[u]);
      const std::string div = diversity_group_name(bundle.div_groups[u]);
      csv += csv_escape(bundle.dataset.user_ids()[s.user]) + "," + fixed6(s.popular_share) +
             "," + std::to_string(s.theme_count) + "," + fixed6(s.gini) + "," + pop + "," + div +
             "," + pop + "|" + div + "\n";
    }
    const std::string path = out_dir + "/segments.csv";
    atomic_write_file(path, csv);
    written.push_back(path);
  }

  // recommendations_<algo>.csv
  for (const AlgoRecs& ar : bundle.recommendations) {
    const std::string path = out_dir + "/recommendations_" + algo_name(ar.algo) + ".csv";
    atomic_write_file(
        path, recommendations_csv(ar.recs, bundle.dataset.user_ids(), bundle.dataset.item_ids()));
    written.push_back(path);
  }
  return written;
}

}  // namespace themetric
