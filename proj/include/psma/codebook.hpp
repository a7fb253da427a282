#pragma once

#include "psma/phy.hpp"
#include "psma/scenario.hpp"

#include <vector>

namespace psma {

/// Relative tolerance used when re-checking a budget or a SIC ordering pair.
inline constexpr Scalar kFeasibilityTol = 1e-9;

struct ViolationReport {
  Vector budget_slack;       // per cell, p_max - sum q p
  Eigen::MatrixXi lt_slack;  // cells x codebooks, L_T - users on the codebook
  Eigen::MatrixXi k_slack;   // cells x subcarriers, K - codebook uses of the subcarrier
  std::vector<SicCheck> sic;
  Scalar budget_residual = -1;  // max over cells of (used - p_max) / p_max
  int sic_violations = 0;
  bool budget_ok = true;
  bool lt_ok = true;
  bool k_ok = true;

  bool feasible() const { return budget_ok && lt_ok && k_ok && sic_violations == 0; }
};

/// Budget, K-reuse, L_T and SIC-order constraints of (q, q .* p). The gains overloads
/// work on any resource axis; for PD-NOMA pass gains and structure built from
/// identity_structure. The channel overloads pick the axis from the scheme.
ViolationReport check_feasible(const BinaryMatrix& q, const Matrix& p, const EffectiveGains& gains,
                               const CodebookStructure& structure, const ScenarioConfig& config);
ViolationReport check_feasible(const Allocation& alloc, const ChannelRealization& channel,
                               const CodebookStructure& structure, const ScenarioConfig& config);

struct AssignmentCandidate {
  BinaryMatrix q;
  Scalar objective = 0;  // sum rate of (q, q .* P), nats
  bool feasible = false;
  ViolationReport violations;
  int polls = 0;         // neighbourhoods evaluated
  int improvements = 0;  // accepted moves
};

/// Discrete poll search for fixed powers P (users x codebooks; entries where q0 = 0
/// are the powers a newly assigned codebook would carry). Neighbourhoods, largest
/// first: pair exchanges, single-entry moves (to another codebook of the same user or
/// to another user on the same codebook), single-bit flips, then drop-and-refill
/// (remove one entry, then two, and add the best single entries greedily). The best
/// improving feasible neighbour is accepted and the poll resets to exchanges; a failed
/// poll moves to the next neighbourhood, and a failed two-entry refill ends the search.
/// Throws ValidationError if q0 is infeasible.
AssignmentCandidate assign_codebooks(const Matrix& P, const BinaryMatrix& q0,
                                     const EffectiveGains& gains,
                                     const CodebookStructure& structure,
                                     const ScenarioConfig& config);
AssignmentCandidate assign_codebooks(const Matrix& P, const BinaryMatrix& q0,
                                     const ChannelRealization& channel,
                                     const CodebookStructure& structure,
                                     const ScenarioConfig& config);

/// Every binary q of the users x codebooks grid, filtered by check_feasible.
/// Throws RefusalError above 10^6 candidates.
AssignmentCandidate exhaustive_assign_oracle(const Matrix& P, const EffectiveGains& gains,
                                             const CodebookStructure& structure,
                                             const ScenarioConfig& config);
AssignmentCandidate exhaustive_assign_oracle(const Matrix& P, const ChannelRealization& channel,
                                             const CodebookStructure& structure,
                                             const ScenarioConfig& config);

} // namespace psma
