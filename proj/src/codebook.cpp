#include "psma/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psma {

namespace {

struct Counts {
  Vector used;           // per cell
  Eigen::MatrixXi users; // cells x codebooks
  Eigen::MatrixXi reuse; // cells x subcarriers
};

Counts count(const BinaryMatrix& q, const Matrix& p, const EffectiveGains& g,
             const CodebookStructure& s) {
  const Index F = g.num_bs();
  Counts out{Vector::Zero(F), Eigen::MatrixXi::Zero(F, q.cols()),
             Eigen::MatrixXi::Zero(F, s.num_subcarriers())};
  for (Index m = 0; m < q.rows(); ++m) {
    const int f = g.cell(m);
    for (Index c = 0; c < q.cols(); ++c) {
      if (!q(m, c)) continue;
      out.used(f) += p(m, c);
      out.users(f, c) += 1;
      for (int n : s.codebook_subcarriers[static_cast<std::size_t>(c)]) out.reuse(f, n) += 1;
    }
  }
  return out;
}

bool within_budget(Scalar used, Scalar cap) { return used <= cap * (1 + kFeasibilityTol); }

// SIC checks on one codebook with the relative tolerance applied to the signed slack.
int sic_violations(const Allocation& a, const EffectiveGains& g, Index c,
                   std::vector<SicCheck>* out) {
  int bad = 0;
  for (auto check : sic_feasible(a, g, c)) {
    const Scalar own = sinr_psma(a, g, check.worse, c);
    check.satisfied = check.slack >= -kFeasibilityTol * own;
    if (!check.satisfied) ++bad;
    if (out) out->push_back(check);
  }
  return bad;
}

void check_shapes(const BinaryMatrix& q, const Matrix& p, const EffectiveGains& g,
                  const CodebookStructure& s, const ScenarioConfig& config) {
  if (q.rows() != g.num_users() || q.cols() != g.num_codebooks() || p.rows() != q.rows() ||
      p.cols() != q.cols()) {
    throw ValidationError("allocation", "shape does not match users x codebooks");
  }
  if (s.num_codebooks() != q.cols()) {
    throw ValidationError("structure", "codebook count does not match the allocation");
  }
  if (config.p_max.size() != static_cast<std::size_t>(g.num_bs())) {
    throw ValidationError("p_max", "needs one budget per BS");
  }
}

} // namespace

ViolationReport check_feasible(const BinaryMatrix& q, const Matrix& p, const EffectiveGains& gains,
                               const CodebookStructure& structure, const ScenarioConfig& config) {
  check_shapes(q, p, gains, structure, config);
  const Counts n = count(q, p, gains, structure);
  ViolationReport r;
  const Index F = gains.num_bs();
  r.budget_slack.resize(F);
  for (Index f = 0; f < F; ++f) {
    const Scalar cap = config.p_max[static_cast<std::size_t>(f)];
    r.budget_slack(f) = cap - n.used(f);
    const Scalar rel = cap > 0 ? (n.used(f) - cap) / cap : n.used(f);
    r.budget_residual = f == 0 ? rel : std::max(r.budget_residual, rel);
    if (!within_budget(n.used(f), cap)) r.budget_ok = false;
  }
  r.lt_slack = (Eigen::MatrixXi::Constant(F, q.cols(), config.L_T) - n.users);
  r.k_slack = (Eigen::MatrixXi::Constant(F, structure.num_subcarriers(), config.K) - n.reuse);
  r.lt_ok = r.lt_slack.minCoeff() >= 0;
  r.k_ok = r.k_slack.size() == 0 || r.k_slack.minCoeff() >= 0;

  const Allocation a{q, p, Scheme::PSMA};
  for (Index c = 0; c < q.cols(); ++c) r.sic_violations += sic_violations(a, gains, c, &r.sic);
  return r;
}

ViolationReport check_feasible(const Allocation& alloc, const ChannelRealization& channel,
                               const CodebookStructure& structure, const ScenarioConfig& config) {
  if (alloc.scheme == Scheme::PDNOMA) {
    const auto grid = identity_structure(static_cast<int>(channel.num_subcarriers()));
    return check_feasible(alloc.q, alloc.p, effective_gains(channel, grid), grid, config);
  }
  return check_feasible(alloc.q, alloc.p, effective_gains(channel, structure), structure, config);
}

namespace {

struct Flip {
  Index m;
  Index c;
  std::uint8_t to;
};

class PollSearch {
public:
  PollSearch(const Matrix& P, const BinaryMatrix& q0, const EffectiveGains& g,
             const CodebookStructure& s, const ScenarioConfig& config)
      : g_(g), s_(s), config_(config), alloc_{q0, P, Scheme::PSMA}, counts_(count(q0, P, g, s)) {
    rates_.resize(q0.cols());
    for (Index c = 0; c < q0.cols(); ++c) rates_(c) = codebook_rate(alloc_, g_, c);
  }

  Scalar objective() const { return rates_.sum(); }
  const BinaryMatrix& q() const { return alloc_.q; }

  // Rate gain of applying `moves`, or NaN when the result is infeasible.
  Scalar evaluate(const std::vector<Flip>& moves) {
    apply(moves);
    Scalar gain = std::numeric_limits<Scalar>::quiet_NaN();
    if (feasible_after(moves)) {
      gain = 0;
      for_each_codebook(moves, [&](Index c) { gain += codebook_rate(alloc_, g_, c) - rates_(c); });
    }
    revert(moves);
    return gain;
  }

  void accept(const std::vector<Flip>& moves) {
    apply(moves);
    for_each_codebook(moves, [&](Index c) { rates_(c) = codebook_rate(alloc_, g_, c); });
  }

private:
  template <class Fn>
  static void for_each_codebook(const std::vector<Flip>& moves, Fn&& fn) {
    std::vector<Index> seen;
    for (const auto& mv : moves) {
      if (std::find(seen.begin(), seen.end(), mv.c) == seen.end()) {
        seen.push_back(mv.c);
        fn(mv.c);
      }
    }
  }

  void set(Index m, Index c, std::uint8_t to) {
    if (alloc_.q(m, c) == to) return;
    const int f = g_.cell(m);
    const int sign = to ? 1 : -1;
    alloc_.q(m, c) = to;
    counts_.used(f) += sign * alloc_.p(m, c);
    counts_.users(f, c) += sign;
    for (int n : s_.codebook_subcarriers[static_cast<std::size_t>(c)]) counts_.reuse(f, n) += sign;
  }

  void apply(const std::vector<Flip>& moves) {
    previous_.clear();
    for (const auto& mv : moves) previous_.push_back({mv.m, mv.c, alloc_.q(mv.m, mv.c)});
    for (const auto& mv : moves) set(mv.m, mv.c, mv.to);
  }

  void revert(const std::vector<Flip>& moves) {
    for (std::size_t i = moves.size(); i-- > 0;) set(previous_[i].m, previous_[i].c, previous_[i].to);
  }

  bool feasible_after(const std::vector<Flip>& moves) const {
    for (const auto& mv : moves) {
      const int f = g_.cell(mv.m);
      if (!within_budget(counts_.used(f), config_.p_max[static_cast<std::size_t>(f)])) return false;
      if (counts_.users(f, mv.c) > config_.L_T) return false;
      for (int n : s_.codebook_subcarriers[static_cast<std::size_t>(mv.c)]) {
        if (counts_.reuse(f, n) > config_.K) return false;
      }
    }
    bool ok = true;
    for_each_codebook(moves, [&](Index c) {
      if (ok && sic_violations(alloc_, g_, c, nullptr) > 0) ok = false;
    });
    return ok;
  }

  const EffectiveGains& g_;
  const CodebookStructure& s_;
  const ScenarioConfig& config_;
  Allocation alloc_;
  Counts counts_;
  Vector rates_;
  std::vector<Flip> previous_;
};

enum class Poll { Exchange, Move, Flip, Repair, RepairPair };

std::vector<std::vector<Flip>> neighbourhood(Poll level, const BinaryMatrix& q) {
  const Index M = q.rows();
  const Index C = q.cols();
  std::vector<std::vector<Flip>> out;
  switch (level) {
  case Poll::Exchange:
    for (Index m = 0; m < M; ++m) {
      for (Index j = m + 1; j < M; ++j) {
        for (Index c = 0; c < C; ++c) {
          if (!q(m, c) || q(j, c)) continue;
          for (Index d = 0; d < C; ++d) {
            if (d == c || !q(j, d) || q(m, d)) continue;
            out.push_back({{m, c, 0}, {m, d, 1}, {j, d, 0}, {j, c, 1}});
          }
        }
      }
    }
    break;
  case Poll::Move:
    for (Index m = 0; m < M; ++m) {
      for (Index c = 0; c < C; ++c) {
        if (!q(m, c)) continue;
        for (Index d = 0; d < C; ++d) {
          if (!q(m, d)) out.push_back({{m, c, 0}, {m, d, 1}});
        }
        for (Index j = 0; j < M; ++j) {
          if (!q(j, c)) out.push_back({{m, c, 0}, {j, c, 1}});
        }
      }
    }
    break;
  case Poll::Flip:
    for (Index m = 0; m < M; ++m) {
      for (Index c = 0; c < C; ++c) out.push_back({{m, c, static_cast<std::uint8_t>(!q(m, c))}});
    }
    break;
  case Poll::Repair:
  case Poll::RepairPair:
    break;
  }
  return out;
}

// Drops `width` active entries at a time and refills greedily with the best single
// additions. Reaches assignments that need removals and several additions at once.
std::vector<Flip> repair_poll(PollSearch& search, Scalar threshold, int width) {
  const BinaryMatrix q = search.q();
  std::vector<Flip> on;
  for (Index m = 0; m < q.rows(); ++m) {
    for (Index c = 0; c < q.cols(); ++c) {
      if (q(m, c)) on.push_back({m, c, 0});
    }
  }
  std::vector<std::vector<Flip>> drops;
  for (std::size_t a = 0; a < on.size(); ++a) {
    if (width == 1) drops.push_back({on[a]});
    for (std::size_t b = a + 1; width == 2 && b < on.size(); ++b) drops.push_back({on[a], on[b]});
  }

  Scalar best_gain = threshold;
  std::vector<Flip> best;
  for (const auto& drop : drops) {
    std::vector<Flip> moves = drop;
    Scalar gain = search.evaluate(moves);
    if (std::isnan(gain)) continue;
    for (;;) {
      Scalar step = threshold;
      Flip add{0, 0, 1};
      for (Index j = 0; j < q.rows(); ++j) {
        for (Index d = 0; d < q.cols(); ++d) {
          if (q(j, d) || std::any_of(moves.begin(), moves.end(), [&](const Flip& f) {
                return f.m == j && f.c == d;
              })) {
            continue;
          }
          moves.push_back({j, d, 1});
          const Scalar g = search.evaluate(moves);
          moves.pop_back();
          if (g - gain > step) {
            step = g - gain;
            add = {j, d, 1};
          }
        }
      }
      if (step <= threshold) break;
      moves.push_back(add);
      gain += step;
    }
    if (moves.size() > drop.size() && gain > best_gain) {
      best_gain = gain;
      best = moves;
    }
  }
  return best;
}

AssignmentCandidate finish(const BinaryMatrix& q, const Matrix& P, const EffectiveGains& gains,
                           const CodebookStructure& structure, const ScenarioConfig& config) {
  AssignmentCandidate out;
  out.q = q;
  out.violations = check_feasible(q, P, gains, structure, config);
  out.feasible = out.violations.feasible();
  out.objective = sum_rate(Allocation{q, P, Scheme::PSMA}, gains).sum_rate;
  return out;
}

} // namespace

AssignmentCandidate assign_codebooks(const Matrix& P, const BinaryMatrix& q0,
                                     const EffectiveGains& gains,
                                     const CodebookStructure& structure,
                                     const ScenarioConfig& config) {
  if (!check_feasible(q0, P, gains, structure, config).feasible()) {
    throw ValidationError("q0", "initial assignment is infeasible");
  }
  PollSearch search(P, q0, gains, structure, config);
  int polls = 0;
  int improvements = 0;
  Poll level = Poll::Exchange;
  for (;;) {
    ++polls;
    const Scalar threshold = 1e-12 * std::max(1.0, std::abs(search.objective()));
    Scalar best_gain = threshold;
    std::vector<Flip> best;
    if (level == Poll::Repair || level == Poll::RepairPair) {
      best = repair_poll(search, threshold, level == Poll::Repair ? 1 : 2);
    } else {
      for (const auto& moves : neighbourhood(level, search.q())) {
        const Scalar gain = search.evaluate(moves);
        if (gain > best_gain) {
          best_gain = gain;
          best = moves;
        }
      }
    }
    if (!best.empty()) {
      search.accept(best);
      ++improvements;
      level = Poll::Exchange;
      continue;
    }
    if (level == Poll::RepairPair) break;
    level = static_cast<Poll>(static_cast<int>(level) + 1);
  }
  auto out = finish(search.q(), P, gains, structure, config);
  out.polls = polls;
  out.improvements = improvements;
  return out;
}

AssignmentCandidate assign_codebooks(const Matrix& P, const BinaryMatrix& q0,
                                     const ChannelRealization& channel,
                                     const CodebookStructure& structure,
                                     const ScenarioConfig& config) {
  if (config.scheme == Scheme::PDNOMA) {
    const auto grid = identity_structure(static_cast<int>(channel.num_subcarriers()));
    return assign_codebooks(P, q0, effective_gains(channel, grid), grid, config);
  }
  return assign_codebooks(P, q0, effective_gains(channel, structure), structure, config);
}

AssignmentCandidate exhaustive_assign_oracle(const Matrix& P, const EffectiveGains& gains,
                                             const CodebookStructure& structure,
                                             const ScenarioConfig& config) {
  const Index M = gains.num_users();
  const Index C = gains.num_codebooks();
  const Index bits = M * C;
  if (bits >= 20) {
    throw RefusalError("exhaustive_assign_oracle: 2^" + std::to_string(bits) +
                       " candidates exceed the 10^6 cap");
  }
  BinaryMatrix q = BinaryMatrix::Zero(M, C);
  BinaryMatrix best_q = q;
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  const std::uint64_t total = std::uint64_t{1} << bits;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (Index b = 0; b < bits; ++b) q(b % M, b / M) = (mask >> b) & 1U;
    if (!check_feasible(q, P, gains, structure, config).feasible()) continue;
    const Scalar value = sum_rate(Allocation{q, P, Scheme::PSMA}, gains).sum_rate;
    if (value > best) {
      best = value;
      best_q = q;
    }
  }
  return finish(best_q, P, gains, structure, config);
}

AssignmentCandidate exhaustive_assign_oracle(const Matrix& P, const ChannelRealization& channel,
                                             const CodebookStructure& structure,
                                             const ScenarioConfig& config) {
  if (config.scheme == Scheme::PDNOMA) {
    const auto grid = identity_structure(static_cast<int>(channel.num_subcarriers()));
    return exhaustive_assign_oracle(P, effective_gains(channel, grid), grid, config);
  }
  return exhaustive_assign_oracle(P, effective_gains(channel, structure), structure, config);
}

} // namespace psma
