#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "themetric/corpus.hpp"

namespace themetric {

enum class Algo { Random, MostPop, MF, PMF, NMF, WMF, BPR, UserKnn };

const std::vector<Algo>& all_algos();
std::string algo_name(Algo a);
Algo algo_from_name(const std::string& name);  // ConfigError on unknown name

struct TrainConfig {
  Algo algo = Algo::Random;
  int factors = 10;
  double learn_rate = 0.005;
  double reg = 0.01;
  int epochs = 50;           // SGD epochs / ALS sweeps
  int neg_samples = 1;       // BPR negatives per positive
  double conf_obs = 1.0;     // WMF observed confidence
  double conf_unobs = 0.01;  // WMF unobserved confidence
  int k_neighbors = 20;      // UserKnn
  std::uint64_t seed = 42;

  std::string describe() const;  // compact one-line form for logs/reports
};

bool operator==(const TrainConfig& a, const TrainConfig& b);

// Per-algorithm default grids; used when a config file does not override
// them. Baselines get a single config.
std::vector<TrainConfig> default_grid(Algo a, std::uint64_t seed);

// --- models -----------------------------------------------------------

// Seed-deterministic pseudo-random scorer; score(u, i) depends only on
// (seed, u, i).
struct RandomModel {
  std::uint64_t seed = 0;
  double score(int user, int item) const;
};

struct PopularityModel {
  std::vector<std::int64_t> counts;  // train interaction count per item
  std::vector<int> order;            // count desc, index asc
  double score(int item) const { return static_cast<double>(counts[item]); }
};

// Latent-factor models share one container; biases and the global mean
// are only populated for MF.
struct FactorModel {
  Algo kind = Algo::MF;
  int factors = 0;
  double global_mean = 0.0;
  std::vector<double> user_factors;  // n_users x d, row-major
  std::vector<double> item_factors;  // n_items x d, row-major
  std::vector<double> user_bias;
  std::vector<double> item_bias;

  int n_users() const;
  int n_items() const;
  double score(int user, int item) const;
};

// User-kNN over mean-centered ratings. Similarity rows are precomputed at
// fit time (co-rated traversal); scoring aggregates the k most similar
// raters of each candidate item.
struct NeighborModel {
  int k_neighbors = 0;
  std::vector<double> user_mean;
  struct Link {
    int user;
    double sim;
  };
  std::vector<std::vector<Link>> neighbors;  // per user, sim in [-1,1], no self-links
};

using Model = std::variant<RandomModel, PopularityModel, FactorModel, NeighborModel>;

Algo model_algo(const Model& m);

// --- training -----------------------------------------------------------

Model fit_model(const InteractionSet& train, const TrainConfig& cfg);

RandomModel fit_random(const InteractionSet& train, const TrainConfig& cfg);
PopularityModel fit_mostpop(const InteractionSet& train, const TrainConfig& cfg);
// Biased MF: r_hat = mu + b_u + b_i + p.q, SGD on squared error with L2.
FactorModel fit_mf(const InteractionSet& train, const TrainConfig& cfg);
// PMF: bias-free squared-error SGD with L2 priors on raw ratings.
FactorModel fit_pmf(const InteractionSet& train, const TrainConfig& cfg);
// NMF: projected SGD, factors clamped at zero after every update.
FactorModel fit_nmf(const InteractionSet& train, const TrainConfig& cfg);
// WMF: implicit-feedback ALS, preference 1/0 with confidences a/b.
FactorModel fit_wmf(const InteractionSet& train, const TrainConfig& cfg);
// BPR: SGD on the pairwise logistic objective over sampled triples.
FactorModel fit_bpr(const InteractionSet& train, const TrainConfig& cfg);
NeighborModel fit_userknn(const InteractionSet& train, const TrainConfig& cfg);

// --- recommendation -------------------------------------------------------

struct ScoredItem {
  int item = 0;
  double score = 0.0;
};

struct RecommendationSet {
  int k = 10;
  std::vector<std::vector<ScoredItem>> lists;  // per user, score desc / index asc
  bool truncated = false;                      // some list shorter than k
};

// Scores every item for one user into `out` (size n_items).
void score_user(const Model& m, const InteractionSet& train, int user, std::span<double> out);

RecommendationSet recommend_topk(const Model& m, const InteractionSet& train, int k,
                                 bool exclude_seen);

// --- tuning ---------------------------------------------------------------

// Items counting as relevant per user: partition ratings >= min_rating.
std::vector<std::vector<int>> relevant_sets(const InteractionSet& part, int min_rating);

// Mean NDCG@k over users with a non-empty relevant set.
double mean_ndcg_at_k(const RecommendationSet& recs,
                      const std::vector<std::vector<int>>& relevant, int k);

struct GridResult {
  TrainConfig best;
  double best_score = 0.0;
  std::vector<std::pair<TrainConfig, double>> scores;  // grid order
};

// Trains each config on `train`, scores NDCG@k on `valid`, returns the
// argmax (ties -> first listed). Configs that diverge are skipped; all
// diverging -> TrainingError.
GridResult grid_search(const InteractionSet& train, const InteractionSet& valid,
                       std::span<const TrainConfig> grid, int k, bool exclude_seen,
                       int relevance_threshold);

}  // namespace themetric
