#pragma once

#include <string>

#include <json.hpp>

#include "themetric/audit.hpp"

namespace themetric {

// Config file schema mirrors AuditConfig; unknown keys are rejected.
AuditConfig load_audit_config(const std::string& path);
AuditConfig audit_config_from_json(const nlohmann::json& j);
nlohmann::json audit_config_to_json(const AuditConfig& cfg);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, Algo algo, std::uint64_t seed);

// JSON views of the audit sections. Object keys are emitted sorted; all
// real-valued fields are rounded to 6 decimals first.
nlohmann::json stats_to_json(const DatasetStats& st);

// CSV body for one algorithm's lists: user_id,rank,item_id,score.
std::string recommendations_csv(const RecommendationSet& recs,
                                const std::vector<std::string>& user_ids,
                                const std::vector<std::string>& item_ids);

nlohmann::json data_bias_to_json(const DataBiasSection& s, const std::vector<ThemeInfo>& themes);
nlohmann::json rec_bias_to_json(const RecBiasSection& s, const std::vector<ThemeInfo>& themes);
nlohmann::json group_bias_to_json(const GroupBiasSection& s, const std::vector<ThemeInfo>& themes);
nlohmann::json provenance_to_json(const BiasReportBundle& b);

// Serializes with doubles printed as fixed 6-decimal so reruns are
// byte-identical.
std::string dump_fixed(const nlohmann::json& j, int indent = 2);

double round6(double v);

// Model dump / reload for checkpoint reuse (factor and baseline models;
// kNN models are refit, their fit is cheap).
nlohmann::json model_to_json(const Model& m, const TrainConfig& cfg);
Model model_from_json(const nlohmann::json& j, TrainConfig* cfg_out);

// write-temp-then-rename; IoError on failure
void atomic_write_file(const std::string& path, const std::string& contents);

}  // namespace themetric
