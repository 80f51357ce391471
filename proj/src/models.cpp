#include "themetric/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "themetric/metrics.hpp"
#include "themetric/rng.hpp"

namespace themetric {

namespace {

std::mt19937_64 algo_rng(const TrainConfig& cfg) {
  return std::mt19937_64(mix_seed(cfg.seed, static_cast<std::uint64_t>(cfg.algo) + 1));
}

void check_finite(std::span<const double> params, Algo algo, int epoch) {
  for (double v : params) {
    if (!std::isfinite(v))
      throw TrainingError(algo_name(algo) + " diverged at epoch " + std::to_string(epoch) +
                          " (non-finite parameter); lower the learning rate");
  }
}

void check_positive(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

double train_mean(const InteractionSet& train) {
  double sum = 0.0;
  for (const Rating& r : train.all()) sum += r.value;
  return train.empty() ? 0.0 : sum / static_cast<double>(train.size());
}

std::vector<double> init_normal(std::size_t n, double scale, std::mt19937_64& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * normal01(rng);
  return v;
}

// in-place Cholesky solve of A x = rhs for SPD A (d x d, row-major);
// false when a pivot is not positive
bool spd_solve(std::vector<double>& a, std::vector<double>& x, int d) {
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i * d + j];
      for (int k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        a[i * d + i] = std::sqrt(s);
      } else {
        a[i * d + j] = s / a[j * d + j];
      }
    }
  }
  // forward: L y = rhs
  for (int i = 0; i < d; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= a[i * d + k] * x[k];
    x[i] = s / a[i * d + i];
  }
  // backward: L^T x = y
  for (int i = d - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < d; ++k) s -= a[k * d + i] * x[k];
    x[i] = s / a[i * d + i];
  }
  return true;
}

}  // namespace

// --- names and configs -----------------------------------------------------

const std::vector<Algo>& all_algos() {
  static const std::vector<Algo> algos = {Algo::Random, Algo::MostPop, Algo::MF,  Algo::PMF,
                                          Algo::NMF,    Algo::WMF,     Algo::BPR, Algo::UserKnn};
  return algos;
}

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::Random: return "Random";
    case Algo::MostPop: return "MostPop";
    case Algo::MF: return "MF";
    case Algo::PMF: return "PMF";
    case Algo::NMF: return "NMF";
    case Algo::WMF: return "WMF";
    case Algo::BPR: return "BPR";
    case Algo::UserKnn: return "UserKNN";
  }
  return "?";
}

Algo algo_from_name(const std::string& name) {
  for (Algo a : all_algos())
    if (algo_name(a) == name) return a;
  throw ConfigError("unknown algorithm: " + name);
}

std::string TrainConfig::describe() const {
  std::ostringstream os;
  os << algo_name(algo);
  switch (algo) {
    case Algo::Random:
    case Algo::MostPop:
      break;
    case Algo::MF:
    case Algo::PMF:
    case Algo::NMF:
      os << "(d=" << factors << ",lr=" << learn_rate << ",reg=" << reg << ",epochs=" << epochs
         << ")";
      break;
    case Algo::WMF:
      os << "(d=" << factors << ",reg=" << reg << ",sweeps=" << epochs << ",a=" << conf_obs
         << ",b=" << conf_unobs << ")";
      break;
    case Algo::BPR:
      os << "(d=" << factors << ",lr=" << learn_rate << ",reg=" << reg << ",epochs=" << epochs
         << ",neg=" << neg_samples << ")";
      break;
    case Algo::UserKnn:
      os << "(k=" << k_neighbors << ")";
      break;
  }
  return os.str();
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return a.algo == b.algo && a.factors == b.factors && a.learn_rate == b.learn_rate &&
         a.reg == b.reg && a.epochs == b.epochs && a.neg_samples == b.neg_samples &&
         a.conf_obs == b.conf_obs && a.conf_unobs == b.conf_unobs &&
         a.k_neighbors == b.k_neighbors && a.seed == b.seed;
}

std::vector<TrainConfig> default_grid(Algo a, std::uint64_t seed) {
  std::vector<TrainConfig> grid;
  TrainConfig base;
  base.algo = a;
  base.seed = seed;
  switch (a) {
    case Algo::Random:
    case Algo::MostPop:
      grid.push_back(base);
      break;
    case Algo::MF:
    case Algo::PMF:
    case Algo::NMF:
    case Algo::BPR:
      for (int d : {10, 50}) {
        for (double lr : {0.005, 0.02}) {
          for (double reg : {0.01, 0.1}) {
            TrainConfig c = base;
            c.factors = d;
            c.learn_rate = lr;
            c.reg = reg;
            c.epochs = 50;
            grid.push_back(c);
          }
        }
      }
      break;
    case Algo::WMF:
      for (int d : {10, 50}) {
        for (double reg : {0.01, 0.1}) {
          TrainConfig c = base;
          c.factors = d;
          c.reg = reg;
          c.epochs = 15;
          c.conf_obs = 1.0;
          c.conf_unobs = 0.01;
          grid.push_back(c);
        }
      }
      break;
    case Algo::UserKnn:
      for (int k : {20, 50}) {
        TrainConfig c = base;
        c.k_neighbors = k;
        grid.push_back(c);
      }
      break;
  }
  return grid;
}

// --- models -----------------------------------------------------------------

double RandomModel::score(int user, int item) const {
  const std::uint64_t pair =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(user)) << 32) |
      static_cast<std::uint32_t>(item);
  return bits_to_unit(splitmix64(seed ^ splitmix64(pair)));
}

int FactorModel::n_users() const {
  return factors > 0 ? static_cast<int>(user_factors.size()) / factors
                     : static_cast<int>(user_bias.size());
}

int FactorModel::n_items() const {
  return factors > 0 ? static_cast<int>(item_factors.size()) / factors
                     : static_cast<int>(item_bias.size());
}

double FactorModel::score(int user, int item) const {
  double s = global_mean;
  if (!user_bias.empty()) {
    s += user_bias[user];
    s += item_bias[item];
  }
  const double* p = user_factors.data() + static_cast<std::size_t>(user) * factors;
  const double* q = item_factors.data() + static_cast<std::size_t>(item) * factors;
  for (int f = 0; f < factors; ++f) s += p[f] * q[f];
  return s;
}

Algo model_algo(const Model& m) {
  if (std::holds_alternative<RandomModel>(m)) return Algo::Random;
  if (std::holds_alternative<PopularityModel>(m)) return Algo::MostPop;
  if (std::holds_alternative<NeighborModel>(m)) return Algo::UserKnn;
  return std::get<FactorModel>(m).kind;
}

// --- baselines ----------------------------------------------------------------

RandomModel fit_random(const InteractionSet&, const TrainConfig& cfg) {
  return RandomModel{mix_seed(cfg.seed, static_cast<std::uint64_t>(Algo::Random) + 1)};
}

PopularityModel fit_mostpop(const InteractionSet& train, const TrainConfig&) {
  if (train.empty()) throw DataError("MostPop: empty train set");
  PopularityModel m;
  m.counts = train.item_counts();
  m.order.resize(train.n_items());
  for (int i = 0; i < train.n_items(); ++i) m.order[i] = i;
  std::sort(m.order.begin(), m.order.end(), [&](int a, int b) {
    if (m.counts[a] != m.counts[b]) return m.counts[a] > m.counts[b];
    return a < b;
  });
  return m;
}

// --- SGD factor models --------------------------------------------------------

FactorModel fit_mf(const InteractionSet& train, const TrainConfig& cfg) {
  check_positive(cfg.factors >= 0, "MF: factors must be >= 0");
  check_positive(cfg.learn_rate > 0.0 && cfg.reg >= 0.0 && cfg.epochs >= 1,
                 "MF: need learn_rate > 0, reg >= 0, epochs >= 1");
  if (train.empty()) throw DataError("MF: empty train set");

  const int d = cfg.factors;
  std::mt19937_64 rng = algo_rng(cfg);
  FactorModel m;
  m.kind = Algo::MF;
  m.factors = d;
  m.global_mean = train_mean(train);
  m.user_factors = init_normal(static_cast<std::size_t>(train.n_users()) * d, 0.1, rng);
  m.item_factors = init_normal(static_cast<std::size_t>(train.n_items()) * d, 0.1, rng);
  m.user_bias.assign(train.n_users(), 0.0);
  m.item_bias.assign(train.n_items(), 0.0);

  std::vector<std::uint32_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  const auto all = train.all();
  const double lr = cfg.learn_rate, reg = cfg.reg;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_in_place(order, rng);
    for (std::uint32_t idx : order) {
      const Rating& r = all[idx];
      double* p = m.user_factors.data() + static_cast<std::size_t>(r.user) * d;
      double* q = m.item_factors.data() + static_cast<std::size_t>(r.item) * d;
      double pred = m.global_mean + m.user_bias[r.user] + m.item_bias[r.item];
      for (int f = 0; f < d; ++f) pred += p[f] * q[f];
      const double e = r.value - pred;
      m.user_bias[r.user] += lr * (e - reg * m.user_bias[r.user]);
      m.item_bias[r.item] += lr * (e - reg * m.item_bias[r.item]);
      for (int f = 0; f < d; ++f) {
        const double pf = p[f];
        p[f] += lr * (e * q[f] - reg * pf);
        q[f] += lr * (e * pf - reg * q[f]);
      }
    }
    check_finite(m.user_bias, Algo::MF, epoch);
    check_finite(m.item_bias, Algo::MF, epoch);
    check_finite(m.user_factors, Algo::MF, epoch);
    check_finite(m.item_factors, Algo::MF, epoch);
  }
  return m;
}

namespace {

// shared SGD loop for the bias-free squared-error models (PMF; NMF adds a
// projection onto the nonnegative orthant)
FactorModel fit_plain_sgd(const InteractionSet& train, const TrainConfig& cfg, Algo kind,
                          bool nonnegative) {
  check_positive(cfg.factors >= 1, algo_name(kind) + ": factors must be >= 1");
  check_positive(cfg.learn_rate > 0.0 && cfg.reg >= 0.0 && cfg.epochs >= 1,
                 algo_name(kind) + ": need learn_rate > 0, reg >= 0, epochs >= 1");
  if (train.empty()) throw DataError(algo_name(kind) + ": empty train set");

  const int d = cfg.factors;
  std::mt19937_64 rng = algo_rng(cfg);
  FactorModel m;
  m.kind = kind;
  m.factors = d;
  m.global_mean = 0.0;

  const double mu = train_mean(train);
  const std::size_t nu = static_cast<std::size_t>(train.n_users()) * d;
  const std::size_t ni = static_cast<std::size_t>(train.n_items()) * d;
  if (nonnegative) {
    // expected initial prediction near the mean rating, entries positive
    const double hi = 2.0 * std::sqrt(mu / d);
    m.user_factors.resize(nu);
    m.item_factors.resize(ni);
    for (double& x : m.user_factors) x = 0.01 + hi * uniform01(rng);
    for (double& x : m.item_factors) x = 0.01 + hi * uniform01(rng);
  } else {
    // symmetric start whose product reconstructs the mean rating
    const double base = std::sqrt(mu / d);
    m.user_factors = init_normal(nu, 0.1, rng);
    m.item_factors = init_normal(ni, 0.1, rng);
    for (double& x : m.user_factors) x += base;
    for (double& x : m.item_factors) x += base;
  }

  std::vector<std::uint32_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  const auto all = train.all();
  const double lr = cfg.learn_rate, reg = cfg.reg;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_in_place(order, rng);
    for (std::uint32_t idx : order) {
      const Rating& r = all[idx];
      double* p = m.user_factors.data() + static_cast<std::size_t>(r.user) * d;
      double* q = m.item_factors.data() + static_cast<std::size_t>(r.item) * d;
      double pred = 0.0;
      for (int f = 0; f < d; ++f) pred += p[f] * q[f];
      const double e = r.value - pred;
      for (int f = 0; f < d; ++f) {
        const double pf = p[f];
        p[f] += lr * (e * q[f] - reg * pf);
        q[f] += lr * (e * pf - reg * q[f]);
        if (nonnegative) {
          if (p[f] < 0.0) p[f] = 0.0;
          if (q[f] < 0.0) q[f] = 0.0;
        }
      }
    }
    check_finite(m.user_factors, kind, epoch);
    check_finite(m.item_factors, kind, epoch);
  }
  return m;
}

}  // namespace

FactorModel fit_pmf(const InteractionSet& train, const TrainConfig& cfg) {
  return fit_plain_sgd(train, cfg, Algo::PMF, /*nonnegative=*/false);
}

FactorModel fit_nmf(const InteractionSet& train, const TrainConfig& cfg) {
  return fit_plain_sgd(train, cfg, Algo::NMF, /*nonnegative=*/true);
}

// --- WMF (implicit ALS) --------------------------------------------------------

FactorModel fit_wmf(const InteractionSet& train, const TrainConfig& cfg) {
  check_positive(cfg.factors >= 1, "WMF: factors must be >= 1");
  check_positive(cfg.epochs >= 1, "WMF: sweeps must be >= 1");
  check_positive(cfg.conf_obs >= cfg.conf_unobs && cfg.conf_unobs > 0.0,
                 "WMF: confidences must satisfy a >= b > 0");
  check_positive(cfg.reg >= 0.0, "WMF: reg must be >= 0");
  if (train.empty()) throw DataError("WMF: empty train set");

  const int d = cfg.factors;
  const int n_users = train.n_users();
  const int n_items = train.n_items();
  const double a = cfg.conf_obs, b = cfg.conf_unobs, reg = cfg.reg;

  std::mt19937_64 rng = algo_rng(cfg);
  FactorModel m;
  m.kind = Algo::WMF;
  m.factors = d;
  m.user_factors.assign(static_cast<std::size_t>(n_users) * d, 0.0);
  m.item_factors = init_normal(static_cast<std::size_t>(n_items) * d, 0.1, rng);

  std::vector<double> gram(static_cast<std::size_t>(d) * d);
  std::vector<double> system(static_cast<std::size_t>(d) * d);
  std::vector<double> rhs(d);

  auto gram_of = [&](const std::vector<double>& factors, int rows) {
    std::fill(gram.begin(), gram.end(), 0.0);
    for (int r = 0; r < rows; ++r) {
      const double* v = factors.data() + static_cast<std::size_t>(r) * d;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) gram[i * d + j] += v[i] * v[j];
    }
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) gram[i * d + j] = gram[j * d + i];
  };

  // one half-sweep: re-solve `solve_factors` holding `fixed` constant.
  // row_of(r) yields the fixed-side index and confidence structure.
  auto solve_side = [&](std::vector<double>& solve_factors, const std::vector<double>& fixed,
                        int n_solve, auto&& observed_of) {
    gram_of(fixed, static_cast<int>(fixed.size()) / d);
    for (int r = 0; r < n_solve; ++r) {
      std::copy(gram.begin(), gram.end(), system.begin());
      for (double& g : system) g *= b;
      for (int i = 0; i < d; ++i) system[i * d + i] += reg;
      std::fill(rhs.begin(), rhs.end(), 0.0);
      for (int other : observed_of(r)) {
        const double* y = fixed.data() + static_cast<std::size_t>(other) * d;
        for (int i = 0; i < d; ++i) {
          rhs[i] += a * y[i];
          for (int j = 0; j <= i; ++j) system[i * d + j] += (a - b) * y[i] * y[j];
        }
      }
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) system[i * d + j] = system[j * d + i];
      if (!spd_solve(system, rhs, d))
        throw TrainingError("WMF: singular normal equations; use reg > 0");
      std::copy(rhs.begin(), rhs.end(),
                solve_factors.begin() + static_cast<std::size_t>(r) * d);
    }
  };

  std::vector<int> scratch;
  for (int sweep = 1; sweep <= cfg.epochs; ++sweep) {
    solve_side(m.user_factors, m.item_factors, n_users, [&](int u) -> const std::vector<int>& {
      scratch.clear();
      for (const Rating& r : train.user_row(u)) scratch.push_back(r.item);
      return scratch;
    });
    solve_side(m.item_factors, m.user_factors, n_items, [&](int i) -> const std::vector<int>& {
      scratch.clear();
      for (const auto& e : train.item_col(i)) scratch.push_back(e.user);
      return scratch;
    });
    check_finite(m.user_factors, Algo::WMF, sweep);
    check_finite(m.item_factors, Algo::WMF, sweep);
  }
  return m;
}

// --- BPR --------------------------------------------------------------------

FactorModel fit_bpr(const InteractionSet& train, const TrainConfig& cfg) {
  check_positive(cfg.factors >= 1, "BPR: factors must be >= 1");
  check_positive(cfg.learn_rate > 0.0 && cfg.reg >= 0.0 && cfg.epochs >= 1,
                 "BPR: need learn_rate > 0, reg >= 0, epochs >= 1");
  check_positive(cfg.neg_samples >= 1, "BPR: neg_samples must be >= 1");
  if (train.empty()) throw DataError("BPR: empty train set");
  for (int u = 0; u < train.n_users(); ++u) {
    if (train.user_row(u).size() == static_cast<std::size_t>(train.n_items()))
      throw TrainingError("BPR: user " + std::to_string(u) + " has rated every item");
  }

  const int d = cfg.factors;
  std::mt19937_64 rng = algo_rng(cfg);
  FactorModel m;
  m.kind = Algo::BPR;
  m.factors = d;
  m.user_factors = init_normal(static_cast<std::size_t>(train.n_users()) * d, 0.1, rng);
  m.item_factors = init_normal(static_cast<std::size_t>(train.n_items()) * d, 0.1, rng);

  const auto all = train.all();
  const double lr = cfg.learn_rate, reg = cfg.reg;
  const std::uint64_t n_pairs = all.size();
  const std::uint64_t triples_per_epoch = n_pairs * static_cast<std::uint64_t>(cfg.neg_samples);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::uint64_t t = 0; t < triples_per_epoch; ++t) {
      const Rating& pos = all[uniform_below(rng, n_pairs)];
      const int u = pos.user;
      auto row = train.user_row(u);
      auto rated = [&row](int item) {
        auto it = std::lower_bound(row.begin(), row.end(), item,
                                   [](const Rating& r, int v) { return r.item < v; });
        return it != row.end() && it->item == item;
      };
      int j;
      do {
        j = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(train.n_items())));
      } while (rated(j));
      double* p = m.user_factors.data() + static_cast<std::size_t>(u) * d;
      double* qi = m.item_factors.data() + static_cast<std::size_t>(pos.item) * d;
      double* qj = m.item_factors.data() + static_cast<std::size_t>(j) * d;
      double x = 0.0;
      for (int f = 0; f < d; ++f) x += p[f] * (qi[f] - qj[f]);
      const double sig = 1.0 / (1.0 + std::exp(x));
      for (int f = 0; f < d; ++f) {
        const double pf = p[f];
        p[f] += lr * (sig * (qi[f] - qj[f]) - reg * pf);
        qi[f] += lr * (sig * pf - reg * qi[f]);
        qj[f] += lr * (-sig * pf - reg * qj[f]);
      }
    }
    check_finite(m.user_factors, Algo::BPR, epoch);
    check_finite(m.item_factors, Algo::BPR, epoch);
  }
  return m;
}

// --- user kNN ------------------------------------------------------------------

NeighborModel fit_userknn(const InteractionSet& train, const TrainConfig& cfg) {
  check_positive(cfg.k_neighbors >= 1, "UserKNN: k_neighbors must be >= 1");
  if (train.empty()) throw DataError("UserKNN: empty train set");

  const int n_users = train.n_users();
  NeighborModel m;
  m.k_neighbors = cfg.k_neighbors;
  m.user_mean.assign(n_users, 0.0);
  for (int u = 0; u < n_users; ++u) {
    auto row = train.user_row(u);
    if (row.empty()) continue;
    double s = 0.0;
    for (const Rating& r : row) s += r.value;
    m.user_mean[u] = s / static_cast<double>(row.size());
  }

  // mean-centered cosine over co-rated items, accumulated via item columns
  m.neighbors.resize(n_users);
  std::vector<double> dot(n_users, 0.0), norm_self(n_users, 0.0), norm_other(n_users, 0.0);
  std::vector<int> touched;
  for (int u = 0; u < n_users; ++u) {
    touched.clear();
    for (const Rating& r : train.user_row(u)) {
      const double cu = r.value - m.user_mean[u];
      for (const auto& e : train.item_col(r.item)) {
        if (e.user == u) continue;
        if (dot[e.user] == 0.0 && norm_self[e.user] == 0.0 && norm_other[e.user] == 0.0)
          touched.push_back(e.user);
        const double cv = e.value - m.user_mean[e.user];
        dot[e.user] += cu * cv;
        norm_self[e.user] += cu * cu;
        norm_other[e.user] += cv * cv;
      }
    }
    std::sort(touched.begin(), touched.end());
    auto& links = m.neighbors[u];
    for (int v : touched) {
      const double denom = std::sqrt(norm_self[v]) * std::sqrt(norm_other[v]);
      if (denom > 0.0) {
        double sim = dot[v] / denom;
        sim = std::clamp(sim, -1.0, 1.0);
        if (sim != 0.0) links.push_back({v, sim});
      }
      dot[v] = norm_self[v] = norm_other[v] = 0.0;
    }
  }
  return m;
}

// --- scoring -------------------------------------------------------------------

namespace {

void score_user_knn(const NeighborModel& m, const InteractionSet& train, int user,
                    std::span<double> out) {
  const double mean_u = m.user_mean[user];
  std::fill(out.begin(), out.end(), mean_u);  // fallback for empty neighborhoods

  struct Contribution {
    int item;
    double sim;
    double centered;
  };
  std::vector<Contribution> contribs;
  for (const NeighborModel::Link& link : m.neighbors[user]) {
    const double mean_v = m.user_mean[link.user];
    for (const Rating& r : train.user_row(link.user))
      contribs.push_back({r.item, link.sim, r.value - mean_v});
  }
  // per item keep the k most similar raters; stable sort preserves the
  // ascending-neighbor order among equal sims
  std::stable_sort(contribs.begin(), contribs.end(), [](const auto& a, const auto& b) {
    if (a.item != b.item) return a.item < b.item;
    return a.sim > b.sim;
  });
  std::size_t i = 0;
  while (i < contribs.size()) {
    std::size_t j = i;
    double num = 0.0, den = 0.0;
    int taken = 0;
    while (j < contribs.size() && contribs[j].item == contribs[i].item) {
      if (taken < m.k_neighbors) {
        num += contribs[j].sim * contribs[j].centered;
        den += std::fabs(contribs[j].sim);
        ++taken;
      }
      ++j;
    }
    if (den > 0.0) out[contribs[i].item] = mean_u + num / den;
    i = j;
  }
}

}  // namespace

void score_user(const Model& m, const InteractionSet& train, int user, std::span<double> out) {
  if (const auto* random = std::get_if<RandomModel>(&m)) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = random->score(user, static_cast<int>(i));
  } else if (const auto* pop = std::get_if<PopularityModel>(&m)) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pop->score(static_cast<int>(i));
  } else if (const auto* fm = std::get_if<FactorModel>(&m)) {
    const int d = fm->factors;
    const double* p = fm->user_factors.data() + static_cast<std::size_t>(user) * d;
    const double bias_u =
        fm->user_bias.empty() ? 0.0 : fm->user_bias[user];
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double* q = fm->item_factors.data() + i * d;
      double s = fm->global_mean + bias_u;
      if (!fm->item_bias.empty()) s += fm->item_bias[i];
      for (int f = 0; f < d; ++f) s += p[f] * q[f];
      out[i] = s;
    }
  } else {
    score_user_knn(std::get<NeighborModel>(m), train, user, out);
  }
}

RecommendationSet recommend_topk(const Model& m, const InteractionSet& train, int k,
                                 bool exclude_seen) {
  if (k < 1) throw ConfigError("recommend_topk: k must be >= 1");
  const int n_users = train.n_users();
  const int n_items = train.n_items();
  RecommendationSet out;
  out.k = k;
  out.lists.resize(n_users);

  std::vector<double> scores(n_items);
  std::vector<char> seen(n_items, 0);
  std::vector<int> candidates;
  candidates.reserve(n_items);

  for (int u = 0; u < n_users; ++u) {
    score_user(m, train, u, scores);
    for (double s : scores) {
      if (!std::isfinite(s))
        throw TrainingError(algo_name(model_algo(m)) + ": non-finite score for user " +
                            std::to_string(u));
    }
    auto row = train.user_row(u);
    if (exclude_seen)
      for (const Rating& r : row) seen[r.item] = 1;
    candidates.clear();
    for (int i = 0; i < n_items; ++i)
      if (!seen[i]) candidates.push_back(i);
    if (exclude_seen)
      for (const Rating& r : row) seen[r.item] = 0;

    const int take = std::min<int>(k, static_cast<int>(candidates.size()));
    std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(),
                      [&](int a, int b) {
                        if (scores[a] != scores[b]) return scores[a] > scores[b];
                        return a < b;
                      });
    auto& list = out.lists[u];
    list.reserve(take);
    for (int i = 0; i < take; ++i) list.push_back({candidates[i], scores[candidates[i]]});
    if (take < k) out.truncated = true;
  }
  return out;
}

// --- tuning ----------------------------------------------------------------------

std::vector<std::vector<int>> relevant_sets(const InteractionSet& part, int min_rating) {
  std::vector<std::vector<int>> out(part.n_users());
  for (int u = 0; u < part.n_users(); ++u) {
    for (const Rating& r : part.user_row(u))
      if (r.value >= min_rating) out[u].push_back(r.item);  // row order: items ascending
  }
  return out;
}

double mean_ndcg_at_k(const RecommendationSet& recs,
                      const std::vector<std::vector<int>>& relevant, int k) {
  double sum = 0.0;
  int evaluated = 0;
  for (std::size_t u = 0; u < recs.lists.size(); ++u) {
    const auto nd = ndcg_at_k(recs.lists[u], relevant[u], k);
    if (!nd) continue;
    sum += *nd;
    ++evaluated;
  }
  return evaluated > 0 ? sum / evaluated : 0.0;
}

Model fit_model(const InteractionSet& train, const TrainConfig& cfg) {
  switch (cfg.algo) {
    case Algo::Random: return fit_random(train, cfg);
    case Algo::MostPop: return fit_mostpop(train, cfg);
    case Algo::MF: return fit_mf(train, cfg);
    case Algo::PMF: return fit_pmf(train, cfg);
    case Algo::NMF: return fit_nmf(train, cfg);
    case Algo::WMF: return fit_wmf(train, cfg);
    case Algo::BPR: return fit_bpr(train, cfg);
    case Algo::UserKnn: return fit_userknn(train, cfg);
  }
  throw ConfigError("fit_model: unknown algorithm");
}

GridResult grid_search(const InteractionSet& train, const InteractionSet& valid,
                       std::span<const TrainConfig> grid, int k, bool exclude_seen,
                       int relevance_threshold) {
  if (grid.empty()) throw ConfigError("grid_search: empty grid");
  if (valid.empty()) throw DataError("grid_search: empty validation partition");

  const auto relevant = relevant_sets(valid, relevance_threshold);
  GridResult result;
  result.best_score = -std::numeric_limits<double>::infinity();
  bool any_ok = false;
  std::string last_error;
  for (const TrainConfig& cfg : grid) {
    double score;
    try {
      const Model model = fit_model(train, cfg);
      const RecommendationSet recs = recommend_topk(model, train, k, exclude_seen);
      score = mean_ndcg_at_k(recs, relevant, k);
      any_ok = true;
    } catch (const TrainingError& e) {
      last_error = e.what();
      score = -std::numeric_limits<double>::infinity();
    }
    result.scores.emplace_back(cfg, score);
    if (score > result.best_score) {
      result.best_score = score;
      result.best = cfg;
    }
  }
  if (!any_ok)
    throw TrainingError("grid_search: every configuration diverged (last: " + last_error + ")");
  return result;
}

}  // namespace themetric
