#include "psma/power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psma {

ScaleCoeffs scale_coeffs(const Eigen::Ref<const Array>& anchor) {
  if (!((anchor > 0).all() && anchor.isFinite().all())) {
    throw DomainError("scale_coeffs: anchor SINR must be finite and > 0 on active entries");
  }
  ScaleCoeffs s;
  s.xi = anchor / (1.0 + anchor);
  s.psi = anchor.log1p() - s.xi * anchor.log();
  return s;
}

ScaleCoeffs scale_identity(Index entries) {
  return {Array::Ones(entries), Array::Zero(entries)};
}

namespace {

Scalar cell_budget(const std::vector<Scalar>& p_max, int cell) {
  return p_max[static_cast<std::size_t>(cell)];
}

Vector used_power(const LinkGraph& g, const Vector& p, std::size_t cells) {
  Vector used = Vector::Zero(static_cast<Index>(cells));
  for (Index e = 0; e < g.size(); ++e) used(g.entries[static_cast<std::size_t>(e)].cell) += p(e);
  return used;
}

Scalar budget_residual(const LinkGraph& g, const Vector& p, const std::vector<Scalar>& p_max) {
  const Vector used = used_power(g, p, p_max.size());
  Scalar worst = -1.0;
  for (std::size_t f = 0; f < p_max.size(); ++f) {
    if (p_max[f] > 0) worst = std::max(worst, (used(static_cast<Index>(f)) - p_max[f]) / p_max[f]);
  }
  return worst;
}

Scalar max_sic_residual(const LinkGraph& g, const Vector& p) {
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < static_cast<Index>(g.pairs.size()); ++k) {
    worst = std::max(worst, g.sic_residual(p, k));
  }
  return g.pairs.empty() ? 0.0 : worst;
}

Scalar relative_step(const LinkGraph& g, const Vector& a, const Vector& b,
                     const std::vector<Scalar>& p_max) {
  Scalar step = 0;
  for (Index e = 0; e < g.size(); ++e) {
    step = std::max(step, std::abs(a(e) - b(e)) /
                              cell_budget(p_max, g.entries[static_cast<std::size_t>(e)].cell));
  }
  return step;
}

} // namespace

Vector power_closed_form(const ScaleCoeffs& scale, const DualState& dual, const LinkGraph& graph,
                         const SicLinearization& lin, const Vector& current,
                         ClosedFormTerms* terms) {
  const Index E = graph.size();
  Vector denom(E);
  for (Index v = 0; v < E; ++v) denom(v) = graph.denominator(current, v);

  Array A = Array::Zero(E), B = Array::Zero(E), C = Array::Zero(E), G = Array::Zero(E);
  for (Index l = 0; l < E; ++l) {
    const auto& el = graph.entries[static_cast<std::size_t>(l)];
    for (const auto& [v, gain] : graph.victims[static_cast<std::size_t>(l)]) {
      const Scalar coupling = scale.xi(v) * gain / denom(v);
      if (graph.entries[static_cast<std::size_t>(v)].cell == el.cell) {
        A(l) += coupling;
      } else {
        B(l) += coupling;
      }
    }
    for (const auto& [k, coef] : graph.pair_terms[static_cast<std::size_t>(l)]) {
      const Scalar beta = dual.beta(k);
      if (coef >= 0) {
        C(l) += beta * coef;
      } else {
        G(l) -= beta * coef * lin.anchor(l);
      }
    }
  }

  Vector p(E);
  for (Index l = 0; l < E; ++l) {
    const Scalar num = scale.xi(l) + G(l);
    const Scalar den = dual.delta(graph.entries[static_cast<std::size_t>(l)].cell) + A(l) + B(l) + C(l);
    if (den <= 0) {
      if (num > 0) {
        throw DomainError("power_closed_form: zero denominator, update is unbounded; check the "
                          "budget multiplier and step sizes");
      }
      p(l) = 0;
      continue;
    }
    p(l) = std::max(num / den, 0.0);
  }
  if (terms) *terms = {A, B, C, G};
  return p;
}

Scalar surrogate_objective(const ScaleCoeffs& scale, const LinkGraph& graph, const Vector& p) {
  const Vector gamma = graph.sinr(p);
  Scalar obj = 0;
  for (Index e = 0; e < graph.size(); ++e) {
    if (scale.xi(e) == 0) {
      obj += scale.psi(e);
      continue;
    }
    obj += scale.xi(e) * std::log(gamma(e)) + scale.psi(e);
  }
  return obj;
}

Scalar lagrangian(const ScaleCoeffs& scale, const DualState& dual, const LinkGraph& graph,
                  const SicLinearization& lin, const std::vector<Scalar>& p_max,
                  const Vector& log_p) {
  const Vector p = log_p.array().exp().matrix();
  Scalar value = surrogate_objective(scale, graph, p);
  const Vector used = used_power(graph, p, p_max.size());
  for (std::size_t f = 0; f < p_max.size(); ++f) {
    value += dual.delta(static_cast<Index>(f)) * (p_max[f] - used(static_cast<Index>(f)));
  }
  if (!graph.pairs.empty()) value -= dual.beta.dot(lin.dc(p));
  return value;
}

DualState subgradient_step(const DualState& dual, const LinkGraph& graph,
                           const SicLinearization& lin, const Vector& p,
                           const std::vector<Scalar>& p_max) {
  DualState next = dual;
  const Vector used = used_power(graph, p, p_max.size());
  for (Index f = 0; f < next.delta.size(); ++f) {
    const Scalar slack = p_max[static_cast<std::size_t>(f)] - used(f);
    next.delta(f) = std::max(dual.delta(f) - dual.nu1(f) * slack, 0.0);
  }
  if (!graph.pairs.empty()) {
    const Vector r = lin.dc(p);
    next.beta = (dual.beta.array() + dual.nu2.array() * r.array()).max(0.0).matrix();
  }
  ++next.iteration;
  return next;
}

int make_feasible(const LinkGraph& graph, const std::vector<Scalar>& p_max, Vector& p) {
  const Vector used = used_power(graph, p, p_max.size());
  for (Index e = 0; e < graph.size(); ++e) {
    const int f = graph.entries[static_cast<std::size_t>(e)].cell;
    const Scalar cap = cell_budget(p_max, f);
    if (used(f) > cap) p(e) = used(f) > 0 ? p(e) * (cap / used(f)) : 0.0;
  }

  // A SIC residual is affine in the other-cell powers on its codebook with an
  // intercept <= 0 whenever ordering by average gain is consistent with the
  // noise-normalised gains; shrinking the codebook uniformly always repairs it.
  int unrepairable = 0;
  const Index C = graph.index.cols();
  std::vector<Scalar> shrink(static_cast<std::size_t>(C), 1.0);
  for (Index k = 0; k < static_cast<Index>(graph.pairs.size()); ++k) {
    const auto& pair = graph.pairs[static_cast<std::size_t>(k)];
    Scalar x = 0;
    Scalar magnitude = std::abs(pair.constant);
    for (const auto& [l, coef] : pair.coef) {
      x += coef * p(l);
      magnitude += std::abs(coef * p(l));
    }
    if (pair.constant + x <= 1e-12 * magnitude) continue;
    if (pair.constant >= 0) {
      ++unrepairable;
      continue;
    }
    const Index c = graph.entries[static_cast<std::size_t>(pair.worse)].codebook;
    auto& t = shrink[static_cast<std::size_t>(c)];
    t = std::min(t, (-pair.constant / x) * (1.0 - 1e-9));
  }
  for (Index e = 0; e < graph.size(); ++e) {
    p(e) *= shrink[static_cast<std::size_t>(graph.entries[static_cast<std::size_t>(e)].codebook)];
  }
  return unrepairable;
}

namespace {

struct InnerOutcome {
  Vector p;
  PowerIterTrace trace;
  DualState dual;
  bool converged = false;
  int iterations = 0;
  Scalar min_multiplier = std::numeric_limits<Scalar>::infinity();
};

InnerOutcome inner_loop(const LinkGraph& graph, const ScaleCoeffs& scale, const Vector& anchor,
                        const ScenarioConfig& config) {
  const auto& p_max = config.p_max;
  const std::size_t F = p_max.size();
  const auto lin = linearize_sic_constraint(graph, anchor);

  DualState dual;
  dual.delta = Vector::Zero(static_cast<Index>(F));
  for (Index e = 0; e < graph.size(); ++e) {
    dual.delta(graph.entries[static_cast<std::size_t>(e)].cell) += scale.xi(e);
  }
  Vector delta_ref(static_cast<Index>(F));
  for (std::size_t f = 0; f < F; ++f) {
    const Index fi = static_cast<Index>(f);
    // Budget-binding guess: with no coupling, sum_l xi_l / delta = p_max.
    dual.delta(fi) = p_max[f] > 0 ? std::max(dual.delta(fi), 1e-6) / p_max[f] : 0.0;
    delta_ref(fi) = p_max[f] > 0 ? dual.delta(fi) / p_max[f] : 0.0;
  }
  dual.beta = Vector::Zero(static_cast<Index>(graph.pairs.size()));
  dual.nu1 = Vector::Zero(static_cast<Index>(F));
  dual.nu2 = Vector::Zero(static_cast<Index>(graph.pairs.size()));

  InnerOutcome out;
  Vector p = anchor;
  Vector best;
  Scalar best_rate = -std::numeric_limits<Scalar>::infinity();
  Vector projected;
  for (int u = 1; u <= config.max_dual_iters; ++u) {
    const Vector next = power_closed_form(scale, dual, graph, lin, p);

    // Diminishing steps nu0 / sqrt(u), scaled so a unit relative budget slack moves
    // delta by nu0 of its reference value.
    const Scalar decay = 1.0 / std::sqrt(static_cast<Scalar>(u));
    dual.nu1 = (config.nu1 * decay) * delta_ref;
    for (std::size_t k = 0; k < graph.pairs.size(); ++k) {
      const int f = graph.entries[static_cast<std::size_t>(graph.pairs[k].worse)].cell;
      dual.nu2(static_cast<Index>(k)) = config.nu2 * decay * delta_ref(f);
    }
    dual = subgradient_step(dual, graph, lin, next, p_max);
    out.min_multiplier = std::min(out.min_multiplier, dual.delta.minCoeff());
    if (dual.beta.size() > 0) out.min_multiplier = std::min(out.min_multiplier, dual.beta.minCoeff());

    const Scalar step = relative_step(graph, next, p, p_max);
    p = next;
    projected = p;
    make_feasible(graph, p_max, projected);
    const Scalar rate = graph.sum_rate(projected);

    out.trace.surrogate.push_back(surrogate_objective(scale, graph, p));
    out.trace.sum_rate.push_back(rate);
    out.trace.budget_residual.push_back(budget_residual(graph, p, p_max));
    out.trace.sic_residual.push_back(max_sic_residual(graph, p));
    out.trace.step.push_back(step);
    out.iterations = u;
    if (rate > best_rate) {
      best_rate = rate;
      best = projected;
    }
    if (u >= 2 && step <= config.epsilon) {
      out.converged = true;
      break;
    }
  }
  out.p = out.converged ? projected : best;
  out.dual = dual;
  return out;
}

// Entries in zero-budget cells radiate nothing and are kept out of the solve.
BinaryMatrix solvable_mask(const BinaryMatrix& q, const EffectiveGains& gains,
                           const std::vector<Scalar>& p_max) {
  BinaryMatrix out = q;
  for (Index m = 0; m < q.rows(); ++m) {
    if (!(p_max[static_cast<std::size_t>(gains.cell(m))] > 0)) out.row(m).setZero();
  }
  return out;
}

Vector positive_start(const LinkGraph& graph, const Matrix& p_full,
                      const std::vector<Scalar>& p_max) {
  Vector p = graph.gather(p_full);
  std::vector<int> count(p_max.size(), 0);
  for (const auto& e : graph.entries) ++count[static_cast<std::size_t>(e.cell)];
  for (Index e = 0; e < graph.size(); ++e) {
    const int f = graph.entries[static_cast<std::size_t>(e)].cell;
    const Scalar floor = 1e-6 * cell_budget(p_max, f) / count[static_cast<std::size_t>(f)];
    if (!(p(e) > floor)) p(e) = floor;
  }
  make_feasible(graph, p_max, p);
  return p;
}

void check_shapes(const Allocation& start, const EffectiveGains& gains,
                  const ScenarioConfig& config) {
  if (start.q.rows() != gains.num_users() || start.q.cols() != gains.num_codebooks() ||
      start.p.rows() != start.q.rows() || start.p.cols() != start.q.cols()) {
    throw ValidationError("allocation", "shape does not match users x codebooks");
  }
  if (config.p_max.size() != static_cast<std::size_t>(gains.num_bs())) {
    throw ValidationError("p_max", "needs one budget per BS");
  }
}

} // namespace

PowerResult solve_power_inner(const Allocation& start, const EffectiveGains& gains,
                              const ScaleCoeffs& scale, const ScenarioConfig& config) {
  check_shapes(start, gains, config);
  const LinkGraph graph = build_link_graph(solvable_mask(start.q, gains, config.p_max), gains);
  if (scale.xi.size() != graph.size()) {
    throw ValidationError("scale", "needs one coefficient per active entry");
  }
  PowerResult res;
  res.alloc = start;
  res.alloc.p.setZero();
  if (graph.size() == 0) {
    res.converged = true;
    return res;
  }
  auto inner = inner_loop(graph, scale, positive_start(graph, start.p, config.p_max), config);
  res.alloc.p = graph.scatter(inner.p, start.q.rows(), start.q.cols());
  res.trace = std::move(inner.trace);
  res.dual = std::move(inner.dual);
  res.converged = inner.converged;
  res.iterations = inner.iterations;
  res.min_multiplier = inner.min_multiplier;
  return res;
}

PowerResult solve_power_scale(const Allocation& start, const EffectiveGains& gains,
                              const ScenarioConfig& config) {
  check_shapes(start, gains, config);
  const auto& p_max = config.p_max;
  const LinkGraph graph = build_link_graph(solvable_mask(start.q, gains, p_max), gains);

  PowerResult res;
  res.alloc = start;
  res.alloc.p.setZero();
  if (graph.size() == 0) {
    res.converged = true;
    return res;
  }

  Vector incumbent = positive_start(graph, start.p, p_max);
  Scalar incumbent_rate = graph.sum_rate(incumbent);
  Vector anchor = incumbent;
  ScaleCoeffs scale = scale_identity(graph.size());
  res.min_multiplier = std::numeric_limits<Scalar>::infinity();

  for (int z = 1; z <= config.max_scale_iters; ++z) {
    auto inner = inner_loop(graph, scale, anchor, config);
    const Scalar rate = graph.sum_rate(inner.p);
    if (rate > incumbent_rate) {
      incumbent_rate = rate;
      incumbent = inner.p;
    }
    const Scalar step = relative_step(graph, inner.p, anchor, p_max);
    res.trace.surrogate.push_back(surrogate_objective(scale, graph, inner.p));
    res.trace.sum_rate.push_back(incumbent_rate);
    res.trace.budget_residual.push_back(budget_residual(graph, incumbent, p_max));
    res.trace.sic_residual.push_back(max_sic_residual(graph, incumbent));
    res.trace.step.push_back(step);
    res.iterations = z;
    res.dual = inner.dual;
    res.min_multiplier = std::min(res.min_multiplier, inner.min_multiplier);

    // The identity bound of the first pass is not anchored at any SINR, so a zero
    // step there says nothing about the SCALE fixed point.
    if (z > 1 && step <= config.epsilon) {
      res.converged = true;
      break;
    }

    // Re-anchor the bound at the achieved SINRs; silent entries drop out.
    const Array gamma = graph.sinr(inner.p).array();
    scale.xi = Array::Zero(graph.size());
    scale.psi = Array::Zero(graph.size());
    for (Index e = 0; e < graph.size(); ++e) {
      if (gamma(e) > 0 && std::isfinite(gamma(e))) {
        const auto one = scale_coeffs(gamma.segment(e, 1));
        scale.xi(e) = one.xi(0);
        scale.psi(e) = one.psi(0);
      }
    }
    anchor = inner.p;
    for (Index e = 0; e < graph.size(); ++e) {
      const Scalar floor = 1e-15 * cell_budget(p_max, graph.entries[static_cast<std::size_t>(e)].cell);
      anchor(e) = std::max(anchor(e), floor);
    }
  }

  res.alloc.p = graph.scatter(incumbent, start.q.rows(), start.q.cols());
  return res;
}

PowerResult solve_power_scale(const Allocation& start, const ChannelRealization& channel,
                              const CodebookStructure& structure, const ScenarioConfig& config) {
  if (start.scheme == Scheme::PDNOMA) {
    return solve_power_scale(
        start, effective_gains(channel, identity_structure(static_cast<int>(start.q.cols()))),
        config);
  }
  return solve_power_scale(start, effective_gains(channel, structure), config);
}

} // namespace psma
