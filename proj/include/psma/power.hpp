#pragma once

#include "psma/phy.hpp"
#include "psma/scenario.hpp"

#include <utility>
#include <vector>

namespace psma {

/// Sparse view of one assignment: every active (user, codebook) pair becomes an
/// entry; couplings between entries are the gains through which one entry's power
/// lands in another's denominator.
struct LinkGraph {
  struct Entry {
    Index user;
    Index codebook;
    int cell;
    Scalar signal;  // own-cell codebook gain
    Scalar noise;
  };
  struct Coupling {
    int entry;
    Scalar gain;
  };
  /// One SIC ordering constraint, better cancels worse on the same codebook and cell,
  /// in the normalised linear form
  ///   r(p) = I_w(better)/S(better) - I_w(worse)/S(worse) = constant + sum coef_l p_l <= 0.
  /// Same-cell powers cancel out, so only other-cell entries carry coefficients.
  struct SicPair {
    int better;
    int worse;
    Scalar constant;
    std::vector<Coupling> coef;
  };
  struct PairTerm {
    int pair;
    Scalar coef;
  };

  std::vector<Entry> entries;
  std::vector<std::vector<Coupling>> interferers;  // who lands in entry e's denominator
  std::vector<std::vector<Coupling>> victims;      // whose denominator entry e lands in
  std::vector<SicPair> pairs;
  std::vector<std::vector<PairTerm>> pair_terms;   // per entry, the pairs it appears in
  Eigen::MatrixXi index;                           // users x codebooks, -1 when inactive

  Index size() const { return static_cast<Index>(entries.size()); }
  /// Entry powers gathered from a full users x codebooks matrix.
  Vector gather(const Matrix& p) const;
  /// Scatter entry powers back into a users x codebooks matrix (zeros elsewhere).
  Matrix scatter(const Vector& p, Index users, Index codebooks) const;

  Scalar denominator(const Vector& p, Index e) const;
  Vector sinr(const Vector& p) const;
  Scalar sum_rate(const Vector& p) const;
  /// Exact normalised SIC residual of pair k.
  Scalar sic_residual(const Vector& p, Index k) const;
};

LinkGraph build_link_graph(const BinaryMatrix& q, const EffectiveGains& gains);

/// SCALE lower bound xi ln x + psi <= ln(1 + x), tight at the anchor.
struct ScaleCoeffs {
  Array xi;
  Array psi;
};

/// xi = g/(1+g), psi = ln(1+g) - xi ln g. Throws DomainError on a nonpositive anchor.
ScaleCoeffs scale_coeffs(const Eigen::Ref<const Array>& anchor_sinr);
/// Algorithm start point, xi = 1 and psi = 0.
ScaleCoeffs scale_identity(Index entries);

/// SIC constraints linearised around anchor log-powers.
struct SicLinearization {
  const LinkGraph* graph = nullptr;
  Vector anchor;  // anchor powers, > 0 on every entry that has a coefficient

  /// Exact residuals at powers p.
  Vector exact(const Vector& p) const;
  /// Full first-order expansion in log-power; affine in log(p).
  Vector affine(const Vector& log_p) const;
  /// Convex restriction: positive-coefficient exponentials kept, negative ones
  /// replaced by their tangent at the anchor. Agrees with `exact` at the anchor.
  Vector dc(const Vector& p) const;
};

/// Throws DomainError if an entry that carries a coefficient has a nonpositive anchor power.
SicLinearization linearize_sic_constraint(const LinkGraph& graph, const Vector& anchor_powers);
SicLinearization linearize_sic_constraint(const LinkGraph& graph, const Allocation& anchor);

struct DualState {
  Vector delta;  // per-cell budget multipliers
  Vector beta;   // per SIC pair
  Vector nu1;    // per-cell step
  Vector nu2;    // per-pair step
  int iteration = 0;
};

struct ClosedFormTerms {
  Array A;  // same-cell victims' SCALE coupling
  Array B;  // other-cell victims' SCALE coupling
  Array C;  // SIC multipliers on exact (positive) terms
  Array G;  // SIC multipliers on linearised (negative) terms
};

/// Stationary point of the Lagrangian in each log-power, coupling terms evaluated at
/// `current`:  p = [(xi + G) / (delta_f + A + B + C)]^+.
/// Throws DomainError when a positive numerator meets a zero denominator.
Vector power_closed_form(const ScaleCoeffs& scale, const DualState& dual, const LinkGraph& graph,
                         const SicLinearization& lin, const Vector& current,
                         ClosedFormTerms* terms = nullptr);

/// Lagrangian of the SCALE surrogate in log-power, used for stationarity checks.
Scalar lagrangian(const ScaleCoeffs& scale, const DualState& dual, const LinkGraph& graph,
                  const SicLinearization& lin, const std::vector<Scalar>& p_max,
                  const Vector& log_p);

/// Surrogate objective sum xi ln gamma + psi at powers p (entries with xi = 0 skipped).
Scalar surrogate_objective(const ScaleCoeffs& scale, const LinkGraph& graph, const Vector& p);

/// Projected subgradient update of (delta, beta); advances the iteration counter.
DualState subgradient_step(const DualState& dual, const LinkGraph& graph,
                           const SicLinearization& lin, const Vector& p,
                           const std::vector<Scalar>& p_max);

struct PowerIterTrace {
  std::vector<Scalar> surrogate;
  std::vector<Scalar> sum_rate;
  std::vector<Scalar> budget_residual;  // max over cells of (used - p_max) / p_max
  std::vector<Scalar> sic_residual;     // max exact residual
  std::vector<Scalar> step;             // max |dp| / p_max
};

struct PowerResult {
  Allocation alloc;
  PowerIterTrace trace;
  DualState dual;
  bool converged = false;
  int iterations = 0;
  Scalar min_multiplier = 0;  // smallest delta/beta seen over the run
};

/// Dual loop for fixed SCALE coefficients, DC-linearised around P0.
PowerResult solve_power_inner(const Allocation& start, const EffectiveGains& gains,
                              const ScaleCoeffs& scale, const ScenarioConfig& config);

/// SCALE loop: start at xi = 1, psi = 0, re-anchor at each achieved SINR. The
/// returned allocation never has a lower true sum rate than the (feasible) start.
PowerResult solve_power_scale(const Allocation& start, const EffectiveGains& gains,
                              const ScenarioConfig& config);
PowerResult solve_power_scale(const Allocation& start, const ChannelRealization& channel,
                              const CodebookStructure& structure, const ScenarioConfig& config);

/// Scales each cell onto its budget if exceeded, then shrinks every codebook whose
/// other-cell interference breaks a SIC ordering constraint. Returns the count of
/// pairs that cannot be repaired by scaling (power-independent violations).
int make_feasible(const LinkGraph& graph, const std::vector<Scalar>& p_max, Vector& p);

/// Exhaustive grid over the per-cell budget simplex for at most 3 active powers,
/// honouring the SIC ordering constraints. Throws RefusalError on larger problems.
Allocation brute_force_power_oracle(const BinaryMatrix& q, const ChannelRealization& channel,
                                    const CodebookStructure& structure,
                                    const ScenarioConfig& config, int grid_points,
                                    Scheme scheme = Scheme::PSMA);

} // namespace psma
