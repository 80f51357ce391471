#include "themetric/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "themetric/csv.hpp"

namespace themetric {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::string theme_key(int theme_id) { return std::to_string(theme_id); }

json themes_json(const std::vector<ThemeInfo>& themes) {
  json out = json::object();
  for (const ThemeInfo& t : themes) out[theme_key(t.id)] = t.label;
  return out;
}

json per_theme_json(const std::vector<ThemeInfo>& themes, const std::vector<double>& values) {
  json out = json::object();
  for (std::size_t t = 0; t < themes.size(); ++t) out[theme_key(themes[t].id)] = round6(values[t]);
  return out;
}

std::string share_basis_name(ShareBasis b) {
  return b == ShareBasis::Slots ? "slots" : "unique";
}

ShareBasis share_basis_from_name(const std::string& s) {
  if (s == "slots") return ShareBasis::Slots;
  if (s == "unique") return ShareBasis::UniqueItems;
  throw ConfigError("unknown share basis: " + s + " (want 'slots' or 'unique')");
}

std::string gini_support_name(GiniSupport g) {
  return g == GiniSupport::Nonzero ? "nonzero" : "full";
}

GiniSupport gini_support_from_name(const std::string& s) {
  if (s == "nonzero") return GiniSupport::Nonzero;
  if (s == "full") return GiniSupport::Full;
  throw ConfigError("unknown gini support: " + s + " (want 'nonzero' or 'full')");
}

std::string stage_name(AuditStage s) {
  switch (s) {
    case AuditStage::Data: return "data";
    case AuditStage::Recs: return "recs";
    case AuditStage::Groups: return "groups";
  }
  return "?";
}

AuditStage stage_from_name(const std::string& s) {
  if (s == "data") return AuditStage::Data;
  if (s == "recs") return AuditStage::Recs;
  if (s == "groups") return AuditStage::Groups;
  throw ConfigError("unknown stage: " + s + " (want data, recs or groups)");
}

json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return round6(*v);
}

}  // namespace

double round6(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // normalize -0
}

// --- fixed-format dump -------------------------------------------------------

namespace {

void dump_rec(const json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const std::string closing_pad(static_cast<std::size_t>(indent) * depth, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        dump_rec(value, out, indent, depth + 1);
      }
      out += "\n" + closing_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump_rec(value, out, indent, depth + 1);
      }
      out += "\n" + closing_pad + "]";
      return;
    }
    case json::value_t::number_float: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", j.get<double>());
      out += buf;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_fixed(const json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  out += "\n";
  return out;
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + tmp);
    out << contents;
    if (!out.flush()) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

// --- TrainConfig <-> json ------------------------------------------------------

json train_config_to_json(const TrainConfig& cfg) {
  json j = json::object();
  j["algo"] = algo_name(cfg.algo);
  j["factors"] = cfg.factors;
  j["learn_rate"] = round6(cfg.learn_rate);
  j["reg"] = round6(cfg.reg);
  j["epochs"] = cfg.epochs;
  j["neg_samples"] = cfg.neg_samples;
  j["conf_obs"] = round6(cfg.conf_obs);
  j["conf_unobs"] = round6(cfg.conf_unobs);
  j["k_neighbors"] = cfg.k_neighbors;
  j["seed"] = cfg.seed;
  return j;
}

TrainConfig train_config_from_json(const json& j, Algo algo, std::uint64_t seed) {
  reject_unknown_keys(j,
                      {"algo", "factors", "learn_rate", "reg", "epochs", "neg_samples",
                       "conf_obs", "conf_unobs", "k_neighbors", "seed"},
                      "train config");
  TrainConfig cfg;
  cfg.algo = algo;
  cfg.seed = seed;
  if (j.contains("algo")) cfg.algo = algo_from_name(j.at("algo").get<std::string>());
  if (j.contains("factors")) cfg.factors = j.at("factors").get<int>();
  if (j.contains("learn_rate")) cfg.learn_rate = j.at("learn_rate").get<double>();
  if (j.contains("reg")) cfg.reg = j.at("reg").get<double>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("neg_samples")) cfg.neg_samples = j.at("neg_samples").get<int>();
  if (j.contains("conf_obs")) cfg.conf_obs = j.at("conf_obs").get<double>();
  if (j.contains("conf_unobs")) cfg.conf_unobs = j.at("conf_unobs").get<double>();
  if (j.contains("k_neighbors")) cfg.k_neighbors = j.at("k_neighbors").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

// --- AuditConfig <-> json ----------------------------------------------------

json audit_config_to_json(const AuditConfig& cfg) {
  json j = json::object();
  j["interactions"] = cfg.interactions_path;
  j["items"] = cfg.items_path;
  j["themes"] = cfg.themes_path;
  j["seed"] = cfg.seed;
  j["split"] = {{"train", round6(cfg.train_frac)},
                {"valid", round6(cfg.valid_frac)},
                {"test", round6(cfg.test_frac)}};
  j["k"] = cfg.k;
  j["popular_fraction"] = round6(cfg.popular_fraction);
  j["relevance_threshold"] = cfg.relevance_threshold;
  j["gini_support"] = gini_support_name(cfg.gini_support);
  j["exclude_seen"] = cfg.exclude_seen;
  j["exposure_rec_basis"] = share_basis_name(cfg.exposure_rec_basis);
  j["exposure_train_basis"] = share_basis_name(cfg.exposure_train_basis);
  json algos = json::array();
  for (Algo a : cfg.algorithms) algos.push_back(algo_name(a));
  j["algorithms"] = algos;
  json stages = json::array();
  for (AuditStage s : cfg.stages) stages.push_back(stage_name(s));
  j["stages"] = stages;
  if (!cfg.grids.empty()) {
    json grids = json::object();
    for (const auto& [algo, grid] : cfg.grids) {
      json arr = json::array();
      for (const TrainConfig& c : grid) arr.push_back(train_config_to_json(c));
      grids[algo_name(algo)] = arr;
    }
    j["grids"] = grids;
  }
  j["out_dir"] = cfg.out_dir;
  if (!cfg.models_dir.empty()) j["models_dir"] = cfg.models_dir;
  return j;
}

AuditConfig audit_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"interactions", "items", "themes", "seed", "split", "k",
                       "popular_fraction", "relevance_threshold", "gini_support", "exclude_seen",
                       "exposure_rec_basis", "exposure_train_basis", "algorithms", "stages",
                       "grids", "out_dir", "models_dir"},
                      "config");
  AuditConfig cfg;
  auto get_string = [&](const char* key, std::string& out) {
    if (j.contains(key)) {
      if (!j.at(key).is_string()) throw ConfigError(std::string("config: ") + key +
                                                    " must be a string");
      out = j.at(key).get<std::string>();
    }
  };
  get_string("interactions", cfg.interactions_path);
  get_string("items", cfg.items_path);
  get_string("themes", cfg.themes_path);
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("split")) {
    const json& s = j.at("split");
    reject_unknown_keys(s, {"train", "valid", "test"}, "config.split");
    if (s.contains("train")) cfg.train_frac = s.at("train").get<double>();
    if (s.contains("valid")) cfg.valid_frac = s.at("valid").get<double>();
    if (s.contains("test")) cfg.test_frac = s.at("test").get<double>();
  }
  if (j.contains("k")) cfg.k = j.at("k").get<int>();
  if (j.contains("popular_fraction"))
    cfg.popular_fraction = j.at("popular_fraction").get<double>();
  if (j.contains("relevance_threshold"))
    cfg.relevance_threshold = j.at("relevance_threshold").get<int>();
  if (j.contains("gini_support"))
    cfg.gini_support = gini_support_from_name(j.at("gini_support").get<std::string>());
  if (j.contains("exclude_seen")) cfg.exclude_seen = j.at("exclude_seen").get<bool>();
  if (j.contains("exposure_rec_basis"))
    cfg.exposure_rec_basis = share_basis_from_name(j.at("exposure_rec_basis").get<std::string>());
  if (j.contains("exposure_train_basis"))
    cfg.exposure_train_basis =
        share_basis_from_name(j.at("exposure_train_basis").get<std::string>());
  if (j.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& a : j.at("algorithms"))
      cfg.algorithms.push_back(algo_from_name(a.get<std::string>()));
  }
  if (j.contains("stages")) {
    cfg.stages.clear();
    for (const auto& s : j.at("stages")) cfg.stages.push_back(stage_from_name(s.get<std::string>()));
  }
  if (j.contains("grids")) {
    for (const auto& [name, arr] : j.at("grids").items()) {
      const Algo algo = algo_from_name(name);
      std::vector<TrainConfig> grid;
      for (const auto& entry : arr) grid.push_back(train_config_from_json(entry, algo, cfg.seed));
      if (grid.empty()) throw ConfigError("config: empty grid for " + name);
      cfg.grids[algo] = std::move(grid);
    }
  }
  get_string("out_dir", cfg.out_dir);
  get_string("models_dir", cfg.models_dir);
  cfg.validate();
  return cfg;
}

AuditConfig load_audit_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return audit_config_from_json(j);
}

// --- report sections ----------------------------------------------------------

json stats_to_json(const DatasetStats& st) {
  return {{"users", st.users},
          {"items", st.items},
          {"interactions", st.interactions},
          {"sparsity", round6(st.sparsity)},
          {"avg_rating", round6(st.avg_rating)},
          {"median_rating", round6(st.median_rating)},
          {"ratings_per_user", round6(st.ratings_per_user)},
          {"ratings_per_item", round6(st.ratings_per_item)}};
}

std::string recommendations_csv(const RecommendationSet& recs,
                                const std::vector<std::string>& user_ids,
                                const std::vector<std::string>& item_ids) {
  std::string csv = "user_id,rank,item_id,score\n";
  for (std::size_t u = 0; u < recs.lists.size(); ++u) {
    const auto& list = recs.lists[u];
    for (std::size_t r = 0; r < list.size(); ++r) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", round6(list[r].score));
      csv += csv_escape(user_ids[u]) + "," + std::to_string(r + 1) + "," +
             csv_escape(item_ids[list[r].item]) + "," + buf + "\n";
    }
  }
  return csv;
}

json provenance_to_json(const BiasReportBundle& b) {
  json j = json::object();
  json echo = audit_config_to_json(b.config);
  // stage list and output locations select which files exist and where,
  // not their content; keeping them out of the echo leaves per-stage
  // outputs byte-stable across stage selections and target directories
  echo.erase("stages");
  echo.erase("out_dir");
  echo.erase("models_dir");
  j["config"] = echo;
  j["seed"] = b.config.seed;
  j["dataset"] = stats_to_json(b.dataset_stats);
  return j;
}

json data_bias_to_json(const DataBiasSection& s, const std::vector<ThemeInfo>& themes) {
  json j = json::object();
  j["themes"] = themes_json(themes);
  j["theme_share_unique"] = per_theme_json(themes, s.theme_share_unique);
  j["top_20pct_theme_share"] = round6(s.top_20pct_theme_share);
  json chi = json::object();
  for (const ChiSquareResult& r : s.chi_square) {
    chi[theme_key(r.theme_id)] = {{"statistic", round6(r.statistic)},
                                  {"df", r.degrees_of_freedom},
                                  {"p_value", round6(r.p_value)},
                                  {"significant", r.significant},
                                  {"testable", r.testable}};
  }
  j["chi_square"] = chi;
  j["significant_themes"] = s.significant_themes;
  json apr = json::object();
  for (std::size_t t = 0; t < themes.size(); ++t)
    apr[theme_key(themes[t].id)] = opt_to_json(s.avg_popularity_ratio[t]);
  j["avg_popularity_ratio"] = apr;
  return j;
}

json rec_bias_to_json(const RecBiasSection& s, const std::vector<ThemeInfo>& themes) {
  json algos = json::object();
  for (const AlgoRecBias& a : s.algos) {
    json entry = json::object();
    entry["accuracy"] = {{"precision", round6(a.accuracy.precision)},
                         {"recall", round6(a.accuracy.recall)},
                         {"f1", round6(a.accuracy.f1)},
                         {"ndcg", round6(a.accuracy.ndcg)},
                         {"evaluated_users", a.accuracy.evaluated_users}};
    entry["coverage"] = round6(a.coverage);
    entry["theme_share_slots"] = per_theme_json(themes, a.rec_theme_share_slots);
    entry["theme_share_unique"] = per_theme_json(themes, a.rec_theme_share_unique);
    json exp = json::object();
    for (const ThemeExposure& e : a.exposure.themes) {
      exp[theme_key(e.theme_id)] = {{"rec_share_slots", round6(e.rec_share_slots)},
                                    {"rec_share_unique", round6(e.rec_share_unique)},
                                    {"train_share_unique", round6(e.train_share_unique)},
                                    {"train_share_slots", round6(e.train_share_slots)},
                                    {"defined", e.defined},
                                    {"ratio", e.defined ? json(round6(e.ratio)) : json(nullptr)}};
    }
    entry["exposure"] = exp;
    entry["rec_basis"] = share_basis_name(a.exposure.rec_basis);
    entry["train_basis"] = share_basis_name(a.exposure.train_basis);
    algos[algo_name(a.algo)] = entry;
  }
  json j = json::object();
  j["algorithms"] = algos;
  return j;
}

json group_bias_to_json(const GroupBiasSection& s, const std::vector<ThemeInfo>& themes) {
  json j = json::object();
  json census = json::object();
  for (int p = 0; p < 3; ++p) {
    for (int d = 0; d < 3; ++d) {
      const std::string key = popularity_group_name(static_cast<PopularityGroup>(p)) + "|" +
                              diversity_group_name(static_cast<DiversityGroup>(d));
      census[key] = s.census.counts[p][d];
    }
  }
  j["census"] = census;
  j["percentiles"] = {{"theme_count_p25", round6(s.diversity_meta.p25_theme_count)},
                      {"theme_count_p75", round6(s.diversity_meta.p75_theme_count)},
                      {"gini_p25", round6(s.diversity_meta.p25_gini)},
                      {"gini_p75", round6(s.diversity_meta.p75_gini)}};
  j["degenerate_population"] = s.diversity_meta.degenerate;
  j["themes"] = themes_json(themes);
  json algos = json::object();
  for (const AlgoGroupBias& a : s.algos) {
    json rows = json::array();
    for (const GroupDeltaRow& r : a.report.rows) {
      json row = json::object();
      row["group"] = r.group_key;
      row["population"] = r.population;
      row["hist_themes_mean"] = opt_to_json(r.hist_themes_mean);
      row["rec_themes_mean"] = opt_to_json(r.rec_themes_mean);
      row["hist_gini_mean"] = opt_to_json(r.hist_gini_mean);
      row["rec_gini_mean"] = opt_to_json(r.rec_gini_mean);
      row["hist_popular_share_mean"] = opt_to_json(r.hist_popular_share_mean);
      row["rec_popular_share_mean"] = opt_to_json(r.rec_popular_share_mean);
      row["hist_dominant_theme"] =
          r.hist_dominant_theme ? json(*r.hist_dominant_theme) : json(nullptr);
      row["rec_dominant_theme"] =
          r.rec_dominant_theme ? json(*r.rec_dominant_theme) : json(nullptr);
      rows.push_back(row);
    }
    algos[algo_name(a.algo)] = json{{"rows", rows}};
  }
  j["algorithms"] = algos;
  return j;
}

// --- model dump -----------------------------------------------------------------

json model_to_json(const Model& m, const TrainConfig& cfg) {
  json j = json::object();
  j["kind"] = algo_name(model_algo(m));
  j["config"] = train_config_to_json(cfg);
  if (const auto* random = std::get_if<RandomModel>(&m)) {
    j["seed"] = random->seed;
  } else if (const auto* pop = std::get_if<PopularityModel>(&m)) {
    j["counts"] = pop->counts;
  } else if (const auto* fm = std::get_if<FactorModel>(&m)) {
    j["factors"] = fm->factors;
    j["global_mean"] = fm->global_mean;
    j["user_factors"] = fm->user_factors;  // row-major
    j["item_factors"] = fm->item_factors;
    j["user_bias"] = fm->user_bias;
    j["item_bias"] = fm->item_bias;
    j["n_users"] = fm->n_users();
    j["n_items"] = fm->n_items();
  } else {
    j["refit"] = true;  // kNN models are refit from config
  }
  return j;
}

Model model_from_json(const json& j, TrainConfig* cfg_out) {
  const Algo kind = algo_from_name(j.at("kind").get<std::string>());
  TrainConfig cfg = train_config_from_json(j.at("config"), kind, 0);
  if (cfg_out) *cfg_out = cfg;
  switch (kind) {
    case Algo::Random:
      return RandomModel{j.at("seed").get<std::uint64_t>()};
    case Algo::MostPop: {
      PopularityModel m;
      m.counts = j.at("counts").get<std::vector<std::int64_t>>();
      m.order.resize(m.counts.size());
      for (std::size_t i = 0; i < m.order.size(); ++i) m.order[i] = static_cast<int>(i);
      std::sort(m.order.begin(), m.order.end(), [&](int a, int b) {
        if (m.counts[a] != m.counts[b]) return m.counts[a] > m.counts[b];
        return a < b;
      });
      return m;
    }
    case Algo::UserKnn:
      throw IoError("model_from_json: kNN models are not serialized; refit from config");
    default: {
      FactorModel m;
      m.kind = kind;
      m.factors = j.at("factors").get<int>();
      m.global_mean = j.at("global_mean").get<double>();
      m.user_factors = j.at("user_factors").get<std::vector<double>>();
      m.item_factors = j.at("item_factors").get<std::vector<double>>();
      m.user_bias = j.at("user_bias").get<std::vector<double>>();
      m.item_bias = j.at("item_bias").get<std::vector<double>>();
      return m;
    }
  }
}

}  // namespace themetric
