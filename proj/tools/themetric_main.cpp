// themetric: thematic-bias audit CLI for explicit-rating recommenders.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "themetric/audit.hpp"
#include "themetric/csv.hpp"
#include "themetric/report_io.hpp"

namespace {

using namespace themetric;
using nlohmann::json;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string algos;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

AuditConfig effective_config(const Options& opt) {
  AuditConfig cfg = load_audit_config(opt.config_path);
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (opt.seed_set) cfg.seed = opt.seed;
  if (!opt.algos.empty()) {
    cfg.algorithms.clear();
    std::stringstream ss(opt.algos);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) cfg.algorithms.push_back(algo_from_name(name));
    }
  }
  cfg.validate();
  return cfg;
}

struct LoadedData {
  IndexedDataset dataset;
  ThemeAssignment themes;
};

LoadedData load_dataset(const AuditConfig& cfg) {
  const auto raw = load_interactions(cfg.interactions_path);
  const auto catalog = load_theme_catalog(cfg.items_path, cfg.themes_path);
  IndexedDataset ds = preprocess(raw, catalog.items());
  ThemeAssignment themes = bind_themes(catalog, ds);
  return {std::move(ds), std::move(themes)};
}

void require_full_theme_coverage(const ThemeAssignment& themes) {
  const auto missing = themes.unassigned_items();
  if (missing.empty()) return;
  std::string msg = "items without a theme:";
  for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
  if (missing.size() > 10) msg += " (+" + std::to_string(missing.size() - 10) + " more)";
  throw DataError(msg);
}

void write_out(const AuditConfig& cfg, const std::string& name, const std::string& body) {
  std::filesystem::create_directories(cfg.out_dir);
  atomic_write_file(cfg.out_dir + "/" + name, body);
  std::cerr << "wrote " << cfg.out_dir << "/" << name << "\n";
}

json tuning_json(const std::vector<TrainedAlgo>& trained) {
  json out = json::object();
  for (const TrainedAlgo& t : trained) {
    if (!t.tuning) continue;
    json scores = json::array();
    for (const auto& [config, score] : t.tuning->scores) {
      scores.push_back({{"config", train_config_to_json(config)},
                        {"ndcg", std::isfinite(score) ? json(round6(score)) : json(nullptr)}});
    }
    out[algo_name(t.algo)] = {{"best", train_config_to_json(t.tuning->best)},
                              {"scores", scores}};
  }
  return out;
}

int cmd_preprocess(const AuditConfig& cfg) {
  const LoadedData data = load_dataset(cfg);
  const json stats = stats_to_json(data.dataset.stats());
  write_out(cfg, "preprocess_stats.json", dump_fixed(stats));
  std::cout << dump_fixed(stats);
  return 0;
}

int cmd_split(const AuditConfig& cfg) {
  const LoadedData data = load_dataset(cfg);
  const DataSplit sp = split(data.dataset, cfg.seed, cfg.valid_frac, cfg.test_frac);
  std::string csv = "user_id,item_id,rating,part\n";
  const auto& uid = data.dataset.user_ids();
  const auto& iid = data.dataset.item_ids();
  auto append = [&](const InteractionSet& part, const char* tag) {
    for (const Rating& r : part.all())
      csv += csv_escape(uid[r.user]) + "," + csv_escape(iid[r.item]) + "," +
             std::to_string(r.value) + "," + tag + "\n";
  };
  append(sp.train, "train");
  append(sp.valid, "valid");
  append(sp.test, "test");
  write_out(cfg, "split.csv", csv);
  return 0;
}

std::vector<TrainedAlgo> train_models(const AuditConfig& cfg, const DataSplit& sp,
                                      bool persist_models) {
  AuditConfig train_cfg = cfg;
  if (persist_models && train_cfg.models_dir.empty())
    train_cfg.models_dir = cfg.out_dir + "/models";
  return tune_and_train(sp.train, sp.valid, train_cfg);
}

int cmd_tune(const AuditConfig& cfg) {
  const LoadedData data = load_dataset(cfg);
  const DataSplit sp = split(data.dataset, cfg.seed, cfg.valid_frac, cfg.test_frac);
  const auto trained = train_models(cfg, sp, /*persist_models=*/false);
  write_out(cfg, "tuning.json", dump_fixed(tuning_json(trained)));
  return 0;
}

int cmd_train(const AuditConfig& cfg) {
  const LoadedData data = load_dataset(cfg);
  const DataSplit sp = split(data.dataset, cfg.seed, cfg.valid_frac, cfg.test_frac);
  const auto trained = train_models(cfg, sp, /*persist_models=*/true);
  write_out(cfg, "tuning.json", dump_fixed(tuning_json(trained)));
  const std::string dir = cfg.models_dir.empty() ? cfg.out_dir + "/models" : cfg.models_dir;
  std::cerr << "models stored under " << dir << "\n";
  return 0;
}

int cmd_recommend(const AuditConfig& cfg) {
  const LoadedData data = load_dataset(cfg);
  const DataSplit sp = split(data.dataset, cfg.seed, cfg.valid_frac, cfg.test_frac);
  const auto trained = train_models(cfg, sp, /*persist_models=*/false);
  for (const TrainedAlgo& t : trained) {
    const RecommendationSet recs = recommend_topk(t.model, sp.train, cfg.k, cfg.exclude_seen);
    write_out(cfg, "recommendations_" + algo_name(t.algo) + ".csv",
              recommendations_csv(recs, data.dataset.user_ids(), data.dataset.item_ids()));
  }
  return 0;
}

// data stage only: no models are trained
int cmd_audit_data(AuditConfig cfg) {
  cfg.stages = {AuditStage::Data};
  const LoadedData data = load_dataset(cfg);
  require_full_theme_coverage(data.themes);
  const DataSplit sp = split(data.dataset, cfg.seed, cfg.valid_frac, cfg.test_frac);
  const PopularitySet popular = popular_set(sp.train, cfg.popular_fraction);

  BiasReportBundle bundle{cfg, data.dataset.stats(), data.dataset};
  bundle.themes = data.themes.themes();
  bundle.data_bias = run_data_bias_audit(bundle.dataset, data.themes, popular, sp.train);
  bundle.profiles = profile_users(sp.train, popular, data.themes, cfg.gini_support);
  for (const UserProfileStats& s : bundle.profiles)
    bundle.pop_groups.push_back(assign_popularity_group(s));
  bundle.div_groups = assign_diversity_groups(bundle.profiles).groups;
  for (const std::string& path : emit_reports(bundle, cfg.out_dir))
    std::cerr << "wrote " << path << "\n";
  return 0;
}

int cmd_run(AuditConfig cfg, std::vector<AuditStage> stages) {
  if (!stages.empty()) cfg.stages = std::move(stages);
  const auto t0 = std::chrono::steady_clock::now();
  const BiasReportBundle bundle = run_full(cfg);
  const auto t1 = std::chrono::steady_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(t1 - t0).count();
  std::cerr << "audit finished in " << secs << "s: " << bundle.dataset_stats.users << " users, "
            << bundle.dataset_stats.items << " items, " << bundle.recommendations.size()
            << " algorithms; reports under " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"themetric: thematic-bias auditing for book recommenders"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file")->required();
    sub->add_option("--out", opt.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", opt.seed, "seed (overrides config)")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    sub->add_option("--algos", opt.algos, "comma-separated algorithm list (overrides config)");
  };

  CLI::App* preprocess = app.add_subcommand("preprocess", "ingest and filter the ratings");
  CLI::App* split_cmd = app.add_subcommand("split", "write the seeded train/valid/test split");
  CLI::App* tune = app.add_subcommand("tune", "grid-tune on validation NDCG@k");
  CLI::App* train = app.add_subcommand("train", "tune and persist final models");
  CLI::App* recommend = app.add_subcommand("recommend", "emit top-k lists per algorithm");
  CLI::App* audit_data = app.add_subcommand("audit-data", "input-data bias stage");
  CLI::App* audit_recs = app.add_subcommand("audit-recs", "recommendation bias stage");
  CLI::App* audit_groups = app.add_subcommand("audit-groups", "user-group bias stage");
  CLI::App* run_all = app.add_subcommand("run-all", "full multi-stage audit");
  for (CLI::App* sub : {preprocess, split_cmd, tune, train, recommend, audit_data, audit_recs,
                        audit_groups, run_all})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const AuditConfig cfg = effective_config(opt);
    if (preprocess->parsed()) return cmd_preprocess(cfg);
    if (split_cmd->parsed()) return cmd_split(cfg);
    if (tune->parsed()) return cmd_tune(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (recommend->parsed()) return cmd_recommend(cfg);
    if (audit_data->parsed()) return cmd_audit_data(cfg);
    if (audit_recs->parsed()) return cmd_run(cfg, {AuditStage::Recs});
    if (audit_groups->parsed()) return cmd_run(cfg, {AuditStage::Groups});
    if (run_all->parsed()) return cmd_run(cfg, {});
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
