#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/csv.hpp"
#include "threadloop/parallel.hpp"
#include "threadloop/rng.hpp"

namespace threadloop {

// Guard for >= comparisons between floating permutation statistics; keeps a
// permuted statistic equal to the observed one counted as extreme.
inline constexpr double kTieEpsilon = 1e-12;

struct InferenceResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;   // degenerate (statistic, statistic) when the test
  double ci_high = 0.0;  // defines no interval
  std::uint64_t n_resamples = 0;
  std::uint64_t seed = 0;
  bool exact = false;  // full enumeration instead of Monte Carlo
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw ConfigError("mean of empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Type-7 quantile (linear interpolation), the spreadsheet/R default.
inline double quantile_type7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ConfigError("quantile of empty vector");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  std::size_t lo = static_cast<std::size_t>(h);
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// 95% upper bound on an event rate after observing zero events in n trials.
inline double rule_of_three(std::uint64_t n) {
  if (n == 0) throw ConfigError("rule_of_three requires n >= 1");
  return 3.0 / static_cast<double>(n);
}

// Two-sided exact binomial test on discordant pair counts, p(success) = 1/2.
// Terms accumulate through the ratio recurrence to avoid factorials.
inline std::optional<double> mcnemar_exact(std::uint64_t b, std::uint64_t c) {
  if (b == 0 && c == 0) return std::nullopt;
  const std::uint64_t n = b + c;
  const std::uint64_t tail = std::min(b, c);
  long double term = std::exp2l(-static_cast<long double>(n));  // C(n,0)/2^n
  long double sum = term;
  for (std::uint64_t i = 0; i < tail; ++i) {
    term *= static_cast<long double>(n - i) / static_cast<long double>(i + 1);
    sum += term;
  }
  long double p = 2.0L * sum;
  if (p > 1.0L) p = 1.0L;
  return static_cast<double>(p);
}

// One matched community pair's episode outcomes, one boolean per episode.
struct PairOutcomes {
  std::string pair_id;
  std::vector<char> human;  // reddit side
  std::vector<char> agent;  // moltbook side
};

namespace detail {

inline double pooled_rate_diff(std::uint64_t human_succ, std::uint64_t human_n,
                               std::uint64_t agent_succ, std::uint64_t agent_n) {
  double h = human_n ? static_cast<double>(human_succ) / static_cast<double>(human_n) : 0.0;
  double a = agent_n ? static_cast<double>(agent_succ) / static_cast<double>(agent_n) : 0.0;
  return h - a;
}

}  // namespace detail

// Stratified label permutation: platform labels shuffle independently within
// each matched pair; the statistic pools successes per platform across pairs
// before differencing (human minus agent). Pair-level shuffles over a handful
// of pairs cannot reach small p-values, so strata are episode-level.
inline InferenceResult permutation_test_stratified(const std::vector<PairOutcomes>& pairs,
                                                   std::uint64_t n_perm,
                                                   std::uint64_t seed,
                                                   unsigned workers = 0) {
  if (pairs.empty()) throw ConfigError("permutation test needs at least one pair");
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1");
  struct PairCounts {
    std::uint64_t n_human, n_agent, succ_total;
  };
  std::vector<PairCounts> counts;
  std::uint64_t obs_hs = 0, obs_hn = 0, obs_as = 0, obs_an = 0;
  for (const auto& p : pairs) {
    if (p.human.empty() || p.agent.empty()) {
      throw ConfigError("empty stratum in pair " + p.pair_id);
    }
    std::uint64_t hs = 0, as = 0;
    for (char v : p.human) hs += v ? 1 : 0;
    for (char v : p.agent) as += v ? 1 : 0;
    counts.push_back({p.human.size(), p.agent.size(), hs + as});
    obs_hs += hs;
    obs_hn += p.human.size();
    obs_as += as;
    obs_an += p.agent.size();
  }
  const double observed = detail::pooled_rate_diff(obs_hs, obs_hn, obs_as, obs_an);
  const double threshold = std::abs(observed) - kTieEpsilon;

  std::vector<char> extreme(n_perm, 0);
  parallel_for(
      n_perm,
      [&](std::size_t i) {
        Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i) + 1);
        std::uint64_t hs = 0, as = 0;
        for (const auto& pc : counts) {
          // Draw the human-labeled subset without materializing it: urn draw
          // of n_human items from succ_total successes among n_human+n_agent.
          std::uint64_t remaining = pc.n_human + pc.n_agent;
          std::uint64_t succ_left = pc.succ_total;
          std::uint64_t grabbed = 0;
          for (std::uint64_t t = 0; t < pc.n_human; ++t) {
            if (rng.below(remaining) < succ_left) {
              ++grabbed;
              --succ_left;
            }
            --remaining;
          }
          hs += grabbed;
          as += pc.succ_total - grabbed;
        }
        double stat = detail::pooled_rate_diff(hs, obs_hn, as, obs_an);
        extreme[i] = std::abs(stat) >= threshold ? 1 : 0;
      },
      workers);

  std::uint64_t hits = 0;
  for (char e : extreme) hits += e ? 1 : 0;
  InferenceResult res;
  res.statistic = observed;
  res.p_value = (1.0 + static_cast<double>(hits)) / (1.0 + static_cast<double>(n_perm));
  res.ci_low = res.ci_high = observed;
  res.n_resamples = n_perm;
  res.seed = seed;
  return res;
}

// Paired sign-flip test on per-pair differences. Small inputs (n <= 20) get
// the exact 2^n enumeration unless Monte Carlo is forced for comparison runs.
inline InferenceResult sign_flip_paired(const std::vector<double>& diffs,
                                        std::uint64_t n_perm, std::uint64_t seed,
                                        bool force_monte_carlo = false,
                                        unsigned workers = 0) {
  if (diffs.empty()) throw ConfigError("sign-flip test needs at least one difference");
  const std::size_t n = diffs.size();
  double total = 0.0;
  for (double d : diffs) total += d;
  const double observed = total / static_cast<double>(n);
  InferenceResult res;
  res.statistic = observed;
  res.ci_low = res.ci_high = observed;
  res.seed = seed;

  if (n <= 20 && !force_monte_carlo) {
    const std::uint64_t patterns = 1ull << n;
    const double threshold = std::abs(total) - kTieEpsilon * static_cast<double>(n);
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      double flipped = total;
      std::uint64_t m = mask;
      while (m) {
        unsigned bit = static_cast<unsigned>(__builtin_ctzll(m));
        flipped -= 2.0 * diffs[bit];
        m &= m - 1;
      }
      if (std::abs(flipped) >= threshold) ++hits;
    }
    res.p_value = static_cast<double>(hits) / static_cast<double>(patterns);
    res.n_resamples = patterns;
    res.exact = true;
    return res;
  }

  const double threshold = std::abs(total) - kTieEpsilon * static_cast<double>(n);
  std::vector<char> extreme(n_perm, 0);
  parallel_for(
      n_perm,
      [&](std::size_t i) {
        Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i) + 1);
        double flipped = 0.0;
        for (double d : diffs) {
          flipped += (rng.next_u64() & 1ull) ? -d : d;
        }
        extreme[i] = std::abs(flipped) >= threshold ? 1 : 0;
      },
      workers);
  std::uint64_t hits = 0;
  for (char e : extreme) hits += e ? 1 : 0;
  res.p_value = (1.0 + static_cast<double>(hits)) / (1.0 + static_cast<double>(n_perm));
  res.n_resamples = n_perm;
  return res;
}

// Percentile bootstrap interval for the mean.
inline std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                              std::uint64_t n_resamples,
                                              double level, std::uint64_t seed,
                                              unsigned workers = 0) {
  if (values.size() < 2) throw ConfigError("bootstrap needs at least 2 values");
  if (n_resamples < 1) throw ConfigError("n_resamples must be >= 1");
  if (!(level > 0.0) || !(level < 1.0)) throw ConfigError("level must be in (0,1)");
  const std::size_t n = values.size();
  std::vector<double> means(n_resamples, 0.0);
  parallel_for(
      n_resamples,
      [&](std::size_t i) {
        Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i) + 1);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          s += values[rng.below(n)];
        }
        means[i] = s / static_cast<double>(n);
      },
      workers);
  std::sort(means.begin(), means.end());
  double alpha = (1.0 - level) / 2.0;
  return {quantile_type7(means, alpha), quantile_type7(means, 1.0 - alpha)};
}

// One community pair's value for one metric; the unit of the published
// pair tables fed to leave-one-out and heterogeneity summaries.
struct PairRow {
  std::string pair_id;
  std::string metric;
  double human_value = 0.0;
  double agent_value = 0.0;
  std::uint64_t n_human = 0;
  std::uint64_t n_agent = 0;
};

struct PairTable {
  std::vector<PairRow> rows;

  std::vector<std::string> metrics() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
      if (std::find(out.begin(), out.end(), r.metric) == out.end()) out.push_back(r.metric);
    }
    return out;
  }

  std::vector<std::string> pair_ids() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
      if (std::find(out.begin(), out.end(), r.pair_id) == out.end()) out.push_back(r.pair_id);
    }
    return out;
  }

  static PairTable load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open pair table: " + path);
    std::vector<std::string> row;
    if (!csv_read_row(in, row)) throw DataError("empty pair table: " + path);
    int i_pair = -1, i_metric = -1, i_human = -1, i_agent = -1, i_nh = -1, i_na = -1;
    for (std::size_t i = 0; i < row.size(); ++i) {
      int idx = static_cast<int>(i);
      if (row[i] == "pair_id") i_pair = idx;
      else if (row[i] == "metric") i_metric = idx;
      else if (row[i] == "reddit_value") i_human = idx;
      else if (row[i] == "moltbook_value") i_agent = idx;
      else if (row[i] == "n_reddit") i_nh = idx;
      else if (row[i] == "n_moltbook") i_na = idx;
    }
    if (i_pair < 0 || i_metric < 0 || i_human < 0 || i_agent < 0) {
      throw DataError("pair table needs pair_id, metric, reddit_value, moltbook_value");
    }
    PairTable table;
    while (csv_read_row(in, row)) {
      if (row.size() == 1 && row[0].empty()) continue;
      int needed = std::max({i_pair, i_metric, i_human, i_agent, i_nh, i_na});
      if (static_cast<int>(row.size()) <= needed) {
        throw DataError("short row in pair table: " + path);
      }
      PairRow r;
      r.pair_id = row[i_pair];
      r.metric = row[i_metric];
      try {
        r.human_value = std::stod(row[i_human]);
        r.agent_value = std::stod(row[i_agent]);
        if (i_nh >= 0 && !row[i_nh].empty()) r.n_human = std::stoull(row[i_nh]);
        if (i_na >= 0 && !row[i_na].empty()) r.n_agent = std::stoull(row[i_na]);
      } catch (...) {
        throw DataError("non-numeric value in pair table: " + path);
      }
      for (const auto& existing : table.rows) {
        if (existing.pair_id == r.pair_id && existing.metric == r.metric) {
          throw DataError("duplicate (pair_id, metric) in pair table: " + r.pair_id +
                          "/" + r.metric);
        }
      }
      table.rows.push_back(std::move(r));
    }
    if (table.rows.empty()) throw DataError("pair table has no rows: " + path);
    return table;
  }
};

// Mean human-minus-agent gap over the remaining pairs after dropping each
// pair in turn; the final row per metric drops nothing.
struct LeaveOneOutRow {
  std::string metric;
  std::string dropped_pair;  // empty = full sample
  double mean_gap = 0.0;
  std::size_t n_pairs = 0;
};

inline std::vector<LeaveOneOutRow> leave_one_pair_out(const PairTable& table) {
  auto pair_ids = table.pair_ids();
  if (pair_ids.size() < 2) throw ConfigError("leave-one-out needs at least 2 pairs");
  std::vector<LeaveOneOutRow> out;
  for (const auto& metric : table.metrics()) {
    std::vector<std::pair<std::string, double>> gaps;
    for (const auto& r : table.rows) {
      if (r.metric == metric) gaps.emplace_back(r.pair_id, r.human_value - r.agent_value);
    }
    auto mean_without = [&](const std::string& dropped) {
      double s = 0.0;
      std::size_t k = 0;
      for (const auto& [pid, gap] : gaps) {
        if (pid == dropped) continue;
        s += gap;
        ++k;
      }
      if (k == 0) throw ConfigError("metric " + metric + " has no remaining pairs");
      return std::make_pair(s / static_cast<double>(k), k);
    };
    for (const auto& pid : pair_ids) {
      auto [gap, k] = mean_without(pid);
      out.push_back({metric, pid, gap, k});
    }
    auto [gap, k] = mean_without("");
    out.push_back({metric, "", gap, k});
  }
  return out;
}

// Worst-case cross-platform separation per metric: the weakest human
// community against the strongest agent community.
struct HeterogeneityRow {
  std::string metric;
  double human_min = 0.0, human_max = 0.0;
  double agent_min = 0.0, agent_max = 0.0;
  double worst_gap = 0.0;  // human_min - agent_max
};

inline std::vector<HeterogeneityRow> heterogeneity(const PairTable& table) {
  if (table.rows.empty()) throw ConfigError("heterogeneity needs at least one pair");
  std::vector<HeterogeneityRow> out;
  for (const auto& metric : table.metrics()) {
    HeterogeneityRow row;
    row.metric = metric;
    bool first = true;
    for (const auto& r : table.rows) {
      if (r.metric != metric) continue;
      if (first) {
        row.human_min = row.human_max = r.human_value;
        row.agent_min = row.agent_max = r.agent_value;
        first = false;
      } else {
        row.human_min = std::min(row.human_min, r.human_value);
        row.human_max = std::max(row.human_max, r.human_value);
        row.agent_min = std::min(row.agent_min, r.agent_value);
        row.agent_max = std::max(row.agent_max, r.agent_value);
      }
    }
    row.worst_gap = row.human_min - row.agent_max;
    out.push_back(row);
  }
  return out;
}

}  // namespace threadloop
