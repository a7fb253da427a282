#pragma once

#include "psma/scenario.hpp"
#include "psma/types.hpp"

#include <cstdint>
#include <vector>

namespace psma {

/// Codebook assignment and powers for one scheme. Rows are users; each user is
/// served by exactly one cell, so the cell index is implied by the channel's
/// user_cell map. For PD-NOMA the columns are subcarriers and q is the
/// subcarrier indicator.
struct Allocation {
  BinaryMatrix q;
  Matrix p;
  Scheme scheme = Scheme::PSMA;

  static Allocation empty(Index users, Index resources, Scheme scheme) {
    return {BinaryMatrix::Zero(users, resources), Matrix::Zero(users, resources), scheme};
  }
  bool assigned(Index m, Index c) const { return q(m, c) != 0; }
  /// Power actually radiated, q .* p.
  Matrix radiated() const { return q.cast<Scalar>().cwiseProduct(p); }
};

/// Per-codebook link quantities that depend only on the channel and the codebook
/// structure. Computed once per (channel, structure); every SINR is a cheap
/// combination of these and (q, p).
struct EffectiveGains {
  /// signal[k](m, c) = sum_n rho eta |h^k_{m,n}|^2: codebook-c gain from BS k at user m.
  std::vector<Matrix> signal;
  /// Average own-cell gain over the codebook support; the SIC ordering key.
  Matrix hhat;
  /// Codebook noise, sum_n rho eta |w_{m,n}|^2 (equals sigma^2 for a flat noise floor).
  Matrix noise;
  std::vector<int> user_cell;

  Index num_users() const { return hhat.rows(); }
  Index num_codebooks() const { return hhat.cols(); }
  Index num_bs() const { return static_cast<Index>(signal.size()); }
  int cell(Index m) const { return user_cell[static_cast<std::size_t>(m)]; }
  Scalar own(Index m, Index c) const { return signal[static_cast<std::size_t>(cell(m))](m, c); }
  Scalar from(Index bs, Index m, Index c) const {
    return signal[static_cast<std::size_t>(bs)](m, c);
  }
  /// Strict SIC order on codebook c: i ranks above m if its average gain is larger,
  /// ties going to the larger user index.
  bool ranks_above(Index i, Index m, Index c) const {
    return hhat(i, c) > hhat(m, c) || (hhat(i, c) == hhat(m, c) && i > m);
  }
};

EffectiveGains effective_gains(const ChannelRealization& channel,
                               const CodebookStructure& structure);

Scalar avg_codebook_gain(const ChannelRealization& channel, const CodebookStructure& structure,
                         Index bs, Index m, Index c);

/// SINR of user m on codebook c after cancelling every lower-ranked user.
Scalar sinr_psma(const Allocation& alloc, const EffectiveGains& gains, Index m, Index c);
Scalar sinr_psma(const Allocation& alloc, const ChannelRealization& channel,
                 const CodebookStructure& structure, Index m, Index c);

/// SINR of `decoded`'s signal as seen at `observer`, both on codebook c in the same
/// cell, observer ranked at or above decoded. Throws DomainError otherwise.
Scalar sinr_cross(const Allocation& alloc, const EffectiveGains& gains, Index observer,
                  Index decoded, Index c);
Scalar sinr_cross(const Allocation& alloc, const ChannelRealization& channel,
                  const CodebookStructure& structure, Index observer, Index decoded, Index c);

/// SCMA SINR: intercell reuse is the only interference. Throws ContractError on
/// same-cell reuse of codebook c.
Scalar sinr_scma(const Allocation& alloc, const EffectiveGains& gains, Index m, Index c);
Scalar sinr_scma(const Allocation& alloc, const ChannelRealization& channel,
                 const CodebookStructure& structure, Index m, Index c);

/// PD-NOMA SINR on subcarrier n; alloc columns are subcarriers.
Scalar sinr_pdnoma(const Allocation& alloc, const ChannelRealization& channel, Index m, Index n);

struct CrossSinr {
  int cell;
  Index codebook;
  Index observer;
  Index decoded;
  Scalar gamma;
};

struct SinrReport {
  Matrix gamma;  // users x resources
  Matrix rate;   // ln(1 + gamma), nats per channel use
  Scalar sum_rate = 0;
  std::vector<CrossSinr> cross;
};

SinrReport sum_rate(const Allocation& alloc, const EffectiveGains& gains);
/// Dispatches on alloc.scheme; PD-NOMA evaluates the per-subcarrier formula.
SinrReport sum_rate(const Allocation& alloc, const ChannelRealization& channel,
                    const CodebookStructure& structure);

/// Sum of ln(1+gamma) over every user on codebook c, all cells. Lets local search
/// re-score only the codebooks a move touches.
Scalar codebook_rate(const Allocation& alloc, const EffectiveGains& gains, Index c);

struct SicCheck {
  int cell;
  Index codebook;
  Index better;  // j, the user that cancels
  Index worse;   // m, the user being cancelled
  bool satisfied;
  Scalar slack;  // gamma_m(j) - q_j gamma_m(m)
};

/// One entry per same-cell ordered pair on a codebook where the worse user is assigned.
std::vector<SicCheck> sic_feasible(const Allocation& alloc, const EffectiveGains& gains);
std::vector<SicCheck> sic_feasible(const Allocation& alloc, const ChannelRealization& channel,
                                   const CodebookStructure& structure);
std::vector<SicCheck> sic_feasible(const Allocation& alloc, const EffectiveGains& gains,
                                   Index codebook);

/// Users of cell `bs` on codebook c, worst first (decoding order).
std::vector<Index> detection_order(const Allocation& alloc, const EffectiveGains& gains, int bs,
                                   Index c);
std::vector<Index> detection_order(const Allocation& alloc, const CodebookStructure& structure,
                                   const ChannelRealization& channel, int bs, Index c);

struct ComplexityParams {
  std::uint64_t I_T = 1;      // MPA iterations
  std::uint64_t pi_size = 1;  // codebook alphabet size
  std::uint64_t d = 1;        // nonzeros per factor-graph row
  std::uint64_t G = 1;        // codebooks per user
  std::uint64_t L_T = 1;      // users per codebook
  std::uint64_t G_prime = 1;  // PD-NOMA subcarriers per user
  std::uint64_t L_T_prime = 1;// PD-NOMA users per subcarrier
};

void validate(const ComplexityParams& params);
/// Receiver operation count in the order-of-magnitude model.
std::uint64_t receiver_complexity(const ComplexityParams& params, Scheme scheme);

} // namespace psma
