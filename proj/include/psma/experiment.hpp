#pragma once

#include "psma/codebook.hpp"
#include "psma/phy.hpp"
#include "psma/power.hpp"
#include "psma/scenario.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace psma {

/// Greedy initial assignment: users take turns, each claiming its best-hhat codebook
/// that still has L_T and K headroom, until no user can claim another. Users of
/// zero-budget cells are skipped. `unserved` counts users left without a codebook.
struct GreedyAssignment {
  BinaryMatrix q;
  int unserved = 0;
};
GreedyAssignment greedy_assignment(const EffectiveGains& gains, const CodebookStructure& structure,
                                   const ScenarioConfig& config);

/// Equal split of each cell's budget over its active entries.
Matrix equal_split(const BinaryMatrix& q, const EffectiveGains& gains,
                   const std::vector<Scalar>& p_max);

struct AlternateResult {
  Allocation alloc;             // PD-NOMA columns are subcarriers
  std::vector<Scalar> trace;    // incumbent sum rate after each outer step
  Scalar sum_rate = 0;
  int outer_iters = 0;
  bool converged = false;
  int unserved = 0;
  Scalar min_multiplier = 0;
  ViolationReport report;       // re-checked on the returned allocation
};

/// Alternates SCALE power solves and codebook poll searches from the greedy start
/// until powers move by at most upsilon * p_max or the outer cap is hit. SCMA runs
/// the same path with L_T forced to 1; PD-NOMA runs it on the subcarrier grid.
AlternateResult alternate_solve(const ScenarioConfig& config, const ChannelRealization& channel,
                                const CodebookStructure& structure);

enum class SweepAxis { USERS, TOTAL_POWER, L_T };
std::string_view to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view name);

/// Scenario at one sweep point. TOTAL_POWER rescales every budget so they sum to `value`.
ScenarioConfig apply_sweep(const ScenarioConfig& base, SweepAxis axis, Scalar value);

struct ExperimentSpec {
  ScenarioConfig base;
  SweepAxis axis = SweepAxis::USERS;
  std::vector<Scalar> values;
  int trials = 1;
  std::vector<Scheme> schemes{Scheme::PSMA, Scheme::SCMA, Scheme::PDNOMA};
  std::filesystem::path out;
  unsigned workers = 0;  // 0 = hardware concurrency
};

void validate(const ExperimentSpec& spec);

struct ResultRow {
  Scheme scheme = Scheme::PSMA;
  std::string axis;
  Scalar value = 0;
  std::uint64_t seed = 0;
  Scalar sum_rate = 0;
  int outer_iters = 0;
  bool converged = false;
  Scalar budget_residual = 0;
  int sic_violations = 0;
  // Re-checked at emission time; not written to the CSV.
  bool lt_ok = true;
  bool k_ok = true;
  bool trace_monotone = true;
  Scalar min_multiplier = 0;
  int unserved = 0;
  std::uint64_t digest = 0;
  std::string error;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

/// Trial t of every sweep point uses seed base.seed + t, shared by all schemes.
ResultRow run_trial(const ScenarioConfig& config, Scheme scheme, const std::string& axis,
                    Scalar value, std::uint64_t seed);
ResultTable run_experiment(const ExperimentSpec& spec);

struct SchemeStats {
  Scheme scheme;
  Scalar mean = 0;
  Scalar std = 0;
};

struct Comparison {
  ResultTable table;
  std::vector<SchemeStats> stats;
  Scalar ratio_scma = 0;     // mean PSMA / mean SCMA
  Scalar ratio_scma_se = 0;
  Scalar ratio_pdnoma = 0;   // mean PSMA / mean PD-NOMA
  Scalar ratio_pdnoma_se = 0;
  bool paired = true;        // every seed saw the same channel under every scheme
};

/// Ratio of paired means with its delta-method standard error.
std::pair<Scalar, Scalar> paired_ratio(const std::vector<Scalar>& num,
                                       const std::vector<Scalar>& den);

Comparison compare_schemes(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                           unsigned workers = 0);

/// Writes results.csv and summary.csv into `dir` (created if missing). Throws IoError.
void emit_results(const ResultTable& table, const std::filesystem::path& dir);
/// Writes comparison.csv next to the tables.
void emit_comparison(const Comparison& cmp, const std::filesystem::path& dir);

std::string results_csv(const ResultTable& table);
std::string summary_csv(const ResultTable& table);
std::string comparison_csv(const Comparison& cmp);

} // namespace psma
