#include "psma/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psma {

GreedyAssignment greedy_assignment(const EffectiveGains& gains, const CodebookStructure& structure,
                                   const ScenarioConfig& config) {
  const Index M = gains.num_users();
  const Index C = gains.num_codebooks();
  const Index F = gains.num_bs();
  GreedyAssignment out{BinaryMatrix::Zero(M, C), 0};
  Eigen::MatrixXi users = Eigen::MatrixXi::Zero(F, C);
  Eigen::MatrixXi reuse = Eigen::MatrixXi::Zero(F, structure.num_subcarriers());

  auto fits = [&](int f, Index c) {
    if (users(f, c) >= config.L_T) return false;
    for (int n : structure.codebook_subcarriers[static_cast<std::size_t>(c)]) {
      if (reuse(f, n) >= config.K) return false;
    }
    return true;
  };

  bool progress = true;
  while (progress) {
    progress = false;
    for (Index m = 0; m < M; ++m) {
      const int f = gains.cell(m);
      if (!(config.p_max[static_cast<std::size_t>(f)] > 0)) continue;
      Index best = -1;
      for (Index c = 0; c < C; ++c) {
        if (out.q(m, c) || !fits(f, c)) continue;
        if (best < 0 || gains.hhat(m, c) > gains.hhat(m, best)) best = c;
      }
      if (best < 0) continue;
      out.q(m, best) = 1;
      users(f, best) += 1;
      for (int n : structure.codebook_subcarriers[static_cast<std::size_t>(best)]) reuse(f, n) += 1;
      progress = true;
    }
  }
  for (Index m = 0; m < M; ++m) {
    if (out.q.row(m).cast<int>().sum() == 0) ++out.unserved;
  }
  return out;
}

Matrix equal_split(const BinaryMatrix& q, const EffectiveGains& gains,
                   const std::vector<Scalar>& p_max) {
  std::vector<int> active(p_max.size(), 0);
  for (Index m = 0; m < q.rows(); ++m) {
    active[static_cast<std::size_t>(gains.cell(m))] += q.row(m).cast<int>().sum();
  }
  Matrix p = Matrix::Zero(q.rows(), q.cols());
  for (Index m = 0; m < q.rows(); ++m) {
    const auto f = static_cast<std::size_t>(gains.cell(m));
    for (Index c = 0; c < q.cols(); ++c) {
      if (q(m, c)) p(m, c) = p_max[f] / active[f];
    }
  }
  return p;
}

namespace {

// Powers an unassigned entry would carry if the poll search switched it on: the
// mean active power of its cell (or an equal share of the budget in an idle cell).
Matrix prospective_powers(const Allocation& a, const EffectiveGains& gains,
                          const std::vector<Scalar>& p_max) {
  const std::size_t F = p_max.size();
  std::vector<Scalar> total(F, 0.0);
  std::vector<int> active(F, 0);
  for (Index m = 0; m < a.q.rows(); ++m) {
    const auto f = static_cast<std::size_t>(gains.cell(m));
    for (Index c = 0; c < a.q.cols(); ++c) {
      if (a.q(m, c)) {
        total[f] += a.p(m, c);
        active[f] += 1;
      }
    }
  }
  Matrix p = a.radiated();
  for (Index m = 0; m < a.q.rows(); ++m) {
    const auto f = static_cast<std::size_t>(gains.cell(m));
    const Scalar fill = active[f] > 0 ? total[f] / active[f]
                                      : p_max[f] / static_cast<Scalar>(a.q.cols());
    for (Index c = 0; c < a.q.cols(); ++c) {
      if (!a.q(m, c)) p(m, c) = fill;
    }
  }
  return p;
}

Scalar max_relative_change(const Allocation& a, const Allocation& b, const EffectiveGains& gains,
                           const std::vector<Scalar>& p_max) {
  const Matrix pa = a.radiated();
  const Matrix pb = b.radiated();
  Scalar step = 0;
  for (Index m = 0; m < pa.rows(); ++m) {
    const Scalar cap = p_max[static_cast<std::size_t>(gains.cell(m))];
    if (!(cap > 0)) continue;
    step = std::max(step, (pa.row(m) - pb.row(m)).cwiseAbs().maxCoeff() / cap);
  }
  return step;
}

} // namespace

AlternateResult alternate_solve(const ScenarioConfig& config, const ChannelRealization& channel,
                                const CodebookStructure& structure) {
  ScenarioConfig cfg = config;
  if (cfg.scheme == Scheme::SCMA) cfg.L_T = 1;
  const CodebookStructure grid =
      cfg.scheme == Scheme::PDNOMA
          ? identity_structure(static_cast<int>(channel.num_subcarriers()))
          : structure;
  const EffectiveGains gains = effective_gains(channel, grid);

  AlternateResult out;
  const auto greedy = greedy_assignment(gains, grid, cfg);
  out.unserved = greedy.unserved;

  Allocation start{greedy.q, equal_split(greedy.q, gains, cfg.p_max), cfg.scheme};
  auto power = solve_power_scale(start, gains, cfg);
  Allocation incumbent = power.alloc;
  incumbent.p = incumbent.radiated();
  Scalar best = sum_rate(incumbent, gains).sum_rate;
  out.trace.push_back(best);
  out.min_multiplier = power.min_multiplier;
  out.outer_iters = 1;

  bool has_power = false;
  for (Scalar cap : cfg.p_max) has_power = has_power || cap > 0;
  if (!has_power || incumbent.q.cast<int>().sum() == 0) out.converged = true;

  for (int t = 2; !out.converged && t <= cfg.max_outer_iters; ++t) {
    const Matrix prospective = prospective_powers(incumbent, gains, cfg.p_max);
    AssignmentCandidate cand;
    try {
      cand = assign_codebooks(prospective, incumbent.q, gains, grid, cfg);
    } catch (const ValidationError&) {
      break;  // solver output failed the re-check; keep the incumbent
    }
    out.outer_iters = t;
    if (cand.q == incumbent.q) {
      out.trace.push_back(best);
      out.converged = true;
      break;
    }
    Allocation next{cand.q, prospective.cwiseProduct(cand.q.cast<Scalar>()), cfg.scheme};
    power = solve_power_scale(next, gains, cfg);
    out.min_multiplier = std::min(out.min_multiplier, power.min_multiplier);
    Allocation solved = power.alloc;
    solved.p = solved.radiated();
    const Scalar rate = sum_rate(solved, gains).sum_rate;
    const Scalar step = max_relative_change(solved, incumbent, gains, cfg.p_max);
    if (rate >= best) {
      best = rate;
      incumbent = solved;
    }
    out.trace.push_back(best);
    if (step <= cfg.upsilon) {
      out.converged = true;
      break;
    }
  }

  out.alloc = incumbent;
  out.sum_rate = best;
  out.report = check_feasible(incumbent.q, incumbent.p, gains, grid, cfg);
  return out;
}

} // namespace psma
