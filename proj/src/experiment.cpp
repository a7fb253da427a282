#include "psma/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace psma {

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
  case SweepAxis::USERS: return "users";
  case SweepAxis::TOTAL_POWER: return "power";
  case SweepAxis::L_T: return "lt";
  }
  return "users";
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "users") return SweepAxis::USERS;
  if (name == "power") return SweepAxis::TOTAL_POWER;
  if (name == "lt") return SweepAxis::L_T;
  throw ValidationError("axis", "expected users, power or lt, got '" + std::string(name) + "'");
}

ScenarioConfig apply_sweep(const ScenarioConfig& base, SweepAxis axis, Scalar value) {
  ScenarioConfig c = base;
  auto as_count = [&](const char* field) {
    if (value < 1 || value != std::floor(value)) {
      throw ValidationError(field, "sweep value must be a positive integer");
    }
    return static_cast<int>(value);
  };
  switch (axis) {
  case SweepAxis::USERS: c.num_users = as_count("num_users"); break;
  case SweepAxis::L_T: c.L_T = as_count("L_T"); break;
  case SweepAxis::TOTAL_POWER: {
    const Scalar total = std::accumulate(base.p_max.begin(), base.p_max.end(), 0.0);
    if (!(value > 0) || !(total > 0)) throw ValidationError("p_max", "total power must be > 0");
    for (auto& p : c.p_max) p *= value / total;
    break;
  }
  }
  validate(c);
  return c;
}

void validate(const ExperimentSpec& spec) {
  validate(spec.base);
  if (spec.trials < 1) throw ValidationError("trials", "must be >= 1");
  if (spec.values.empty()) throw ValidationError("values", "at least one sweep value required");
  for (std::size_t i = 1; i < spec.values.size(); ++i) {
    if (!(spec.values[i] > spec.values[i - 1])) {
      throw ValidationError("values", "sweep values must be strictly increasing");
    }
  }
  if (spec.schemes.empty()) throw ValidationError("schemes", "at least one scheme required");
  for (Scalar v : spec.values) apply_sweep(spec.base, spec.axis, v);
}

ResultRow run_trial(const ScenarioConfig& config, Scheme scheme, const std::string& axis,
                    Scalar value, std::uint64_t seed) {
  ResultRow row;
  row.scheme = scheme;
  row.axis = axis;
  row.value = value;
  row.seed = seed;
  try {
    ScenarioConfig cfg = config;
    cfg.scheme = scheme;
    cfg.seed = seed;
    const auto topology = build_topology(cfg, seed);
    const auto channel = sample_channels(topology, cfg, seed);
    row.digest = digest(channel);
    const auto structure = build_codebook_structure(cfg);
    const auto result = alternate_solve(cfg, channel, structure);

    row.sum_rate = result.sum_rate;
    row.outer_iters = result.outer_iters;
    row.converged = result.converged;
    row.budget_residual = result.report.budget_residual;
    row.sic_violations = result.report.sic_violations;
    row.lt_ok = result.report.lt_ok;
    row.k_ok = result.report.k_ok;
    row.min_multiplier = result.min_multiplier;
    row.unserved = result.unserved;
    for (std::size_t i = 1; i < result.trace.size(); ++i) {
      if (result.trace[i] < result.trace[i - 1] - 1e-6) row.trace_monotone = false;
    }
  } catch (const std::exception& e) {
    row.error = e.what();
    row.converged = false;
  }
  return row;
}

namespace {

struct Job {
  ScenarioConfig config;
  Scheme scheme;
  Scalar value;
  std::uint64_t seed;
};

std::vector<ResultRow> run_jobs(const std::vector<Job>& jobs, const std::string& axis,
                                unsigned workers) {
  std::vector<ResultRow> rows(jobs.size());
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& j = jobs[i];
      rows[i] = run_trial(j.config, j.scheme, axis, j.value, j.seed);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

bool row_order(const ResultRow& a, const ResultRow& b) {
  if (a.scheme != b.scheme) return a.scheme < b.scheme;
  if (a.value != b.value) return a.value < b.value;
  return a.seed < b.seed;
}

} // namespace

ResultTable run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  std::vector<Job> jobs;
  for (Scalar v : spec.values) {
    const ScenarioConfig cfg = apply_sweep(spec.base, spec.axis, v);
    for (Scheme s : spec.schemes) {
      for (int t = 0; t < spec.trials; ++t) {
        jobs.push_back({cfg, s, v, spec.base.seed + static_cast<std::uint64_t>(t)});
      }
    }
  }
  ResultTable table{run_jobs(jobs, std::string(to_string(spec.axis)), spec.workers)};
  std::sort(table.rows.begin(), table.rows.end(), row_order);
  return table;
}

std::pair<Scalar, Scalar> paired_ratio(const std::vector<Scalar>& num,
                                       const std::vector<Scalar>& den) {
  if (num.size() != den.size() || num.empty()) {
    throw ValidationError("seeds", "paired samples must be non-empty and equally long");
  }
  const Scalar n = static_cast<Scalar>(num.size());
  const Scalar a = std::accumulate(num.begin(), num.end(), 0.0) / n;
  const Scalar b = std::accumulate(den.begin(), den.end(), 0.0) / n;
  if (!(b > 0)) return {std::numeric_limits<Scalar>::quiet_NaN(), 0.0};
  const Scalar r = a / b;
  if (num.size() < 2) return {r, 0.0};
  Scalar ss = 0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    const Scalar d = num[i] - r * den[i];
    ss += d * d;
  }
  return {r, std::sqrt(ss / (n - 1)) / (std::sqrt(n) * b)};
}

Comparison compare_schemes(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                           unsigned workers) {
  validate(config);
  if (seeds.empty()) throw ValidationError("seeds", "at least one seed required");
  const std::vector<Scheme> schemes{Scheme::PSMA, Scheme::SCMA, Scheme::PDNOMA};
  std::vector<Job> jobs;
  for (Scheme s : schemes) {
    for (auto seed : seeds) jobs.push_back({config, s, 0.0, seed});
  }
  Comparison cmp;
  cmp.table.rows = run_jobs(jobs, "none", workers);

  const std::size_t K = seeds.size();
  std::vector<std::vector<Scalar>> rates(schemes.size());
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    SchemeStats st{schemes[s]};
    for (std::size_t k = 0; k < K; ++k) {
      const auto& row = cmp.table.rows[s * K + k];
      rates[s].push_back(row.sum_rate);
      if (row.digest != cmp.table.rows[k].digest) cmp.paired = false;
    }
    st.mean = std::accumulate(rates[s].begin(), rates[s].end(), 0.0) / static_cast<Scalar>(K);
    Scalar ss = 0;
    for (Scalar r : rates[s]) ss += (r - st.mean) * (r - st.mean);
    st.std = K > 1 ? std::sqrt(ss / static_cast<Scalar>(K - 1)) : 0.0;
    cmp.stats.push_back(st);
  }
  std::tie(cmp.ratio_scma, cmp.ratio_scma_se) = paired_ratio(rates[0], rates[1]);
  std::tie(cmp.ratio_pdnoma, cmp.ratio_pdnoma_se) = paired_ratio(rates[0], rates[2]);
  std::sort(cmp.table.rows.begin(), cmp.table.rows.end(), row_order);
  return cmp;
}

} // namespace psma
