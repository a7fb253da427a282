#include "psma/power.hpp"

#include <cmath>
#include <limits>

namespace psma {

namespace {

Scalar entry_rate(const Allocation& a, const EffectiveGains& g, const ChannelRealization& channel,
                  Index m, Index c) {
  switch (a.scheme) {
  case Scheme::SCMA: return std::log1p(sinr_scma(a, g, m, c));
  case Scheme::PDNOMA: return std::log1p(sinr_pdnoma(a, channel, m, c));
  case Scheme::PSMA: break;
  }
  return std::log1p(sinr_psma(a, g, m, c));
}

bool sic_ok(const Allocation& a, const EffectiveGains& g) {
  for (const auto& check : sic_feasible(a, g)) {
    if (!check.satisfied) return false;
  }
  return true;
}

} // namespace

Allocation brute_force_power_oracle(const BinaryMatrix& q, const ChannelRealization& channel,
                                    const CodebookStructure& structure,
                                    const ScenarioConfig& config, int grid_points, Scheme scheme) {
  if (grid_points < 2) throw ValidationError("grid_points", "must be >= 2");
  const EffectiveGains gains =
      scheme == Scheme::PDNOMA
          ? effective_gains(channel, identity_structure(static_cast<int>(q.cols())))
          : effective_gains(channel, structure);

  std::vector<std::pair<Index, Index>> vars;
  for (Index c = 0; c < q.cols(); ++c) {
    for (Index m = 0; m < q.rows(); ++m) {
      if (q(m, c)) vars.emplace_back(m, c);
    }
  }
  if (vars.size() > 3) {
    throw RefusalError("brute_force_power_oracle: " + std::to_string(vars.size()) +
                       " power variables, at most 3 supported");
  }

  Allocation best{q, Matrix::Zero(q.rows(), q.cols()), scheme};
  Allocation trial = best;
  Scalar best_rate = -std::numeric_limits<Scalar>::infinity();
  const std::size_t V = vars.size();
  std::vector<int> k(V, 0);
  const int steps = grid_points - 1;

  for (;;) {
    bool within = true;
    std::vector<Scalar> used(config.p_max.size(), 0.0);
    for (std::size_t v = 0; v < V; ++v) {
      const auto [m, c] = vars[v];
      const Scalar cap = config.p_max[static_cast<std::size_t>(channel.cell(m))];
      const Scalar p = cap * k[v] / steps;
      trial.p(m, c) = p;
      used[static_cast<std::size_t>(channel.cell(m))] += p;
    }
    for (std::size_t f = 0; f < used.size(); ++f) {
      if (used[f] > config.p_max[f] * (1 + 1e-12)) within = false;
    }
    if (within) {
      Scalar rate = 0;
      for (const auto& [m, c] : vars) rate += entry_rate(trial, gains, channel, m, c);
      if (rate > best_rate && sic_ok(trial, gains)) {
        best_rate = rate;
        best.p = trial.p;
      }
    }

    std::size_t v = 0;
    while (v < V && ++k[v] > steps) k[v++] = 0;
    if (v == V) break;
  }
  return best;
}

} // namespace psma
