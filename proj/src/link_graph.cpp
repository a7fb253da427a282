#include "psma/power.hpp"

#include <cmath>

namespace psma {

LinkGraph build_link_graph(const BinaryMatrix& q, const EffectiveGains& gains) {
  const Index M = q.rows();
  const Index C = q.cols();
  LinkGraph g;
  g.index = Eigen::MatrixXi::Constant(M, C, -1);
  for (Index c = 0; c < C; ++c) {
    for (Index m = 0; m < M; ++m) {
      if (!q(m, c)) continue;
      g.index(m, c) = static_cast<int>(g.entries.size());
      g.entries.push_back({m, c, gains.cell(m), gains.own(m, c), gains.noise(m, c)});
    }
  }

  const std::size_t E = g.entries.size();
  g.interferers.assign(E, {});
  g.victims.assign(E, {});
  g.pair_terms.assign(E, {});
  for (std::size_t e = 0; e < E; ++e) {
    const auto& v = g.entries[e];
    for (std::size_t i = 0; i < E; ++i) {
      const auto& s = g.entries[i];
      if (i == e || s.codebook != v.codebook) continue;
      Scalar gain = 0;
      if (s.cell == v.cell) {
        if (!gains.ranks_above(s.user, v.user, v.codebook)) continue;
        gain = v.signal;
      } else {
        gain = gains.from(s.cell, v.user, v.codebook);
      }
      g.interferers[e].push_back({static_cast<int>(i), gain});
      g.victims[i].push_back({static_cast<int>(e), gain});
    }
  }

  for (std::size_t w = 0; w < E; ++w) {
    for (std::size_t b = 0; b < E; ++b) {
      const auto& ew = g.entries[w];
      const auto& eb = g.entries[b];
      if (b == w || eb.codebook != ew.codebook || eb.cell != ew.cell ||
          !gains.ranks_above(eb.user, ew.user, ew.codebook)) {
        continue;
      }
      LinkGraph::SicPair pair{static_cast<int>(b), static_cast<int>(w),
                              eb.noise / eb.signal - ew.noise / ew.signal, {}};
      for (std::size_t l = 0; l < E; ++l) {
        const auto& el = g.entries[l];
        if (el.codebook != ew.codebook || el.cell == ew.cell) continue;
        const Scalar coef = gains.from(el.cell, eb.user, ew.codebook) / eb.signal -
                            gains.from(el.cell, ew.user, ew.codebook) / ew.signal;
        pair.coef.push_back({static_cast<int>(l), coef});
      }
      const int k = static_cast<int>(g.pairs.size());
      for (const auto& t : pair.coef) g.pair_terms[static_cast<std::size_t>(t.entry)].push_back({k, t.gain});
      g.pairs.push_back(std::move(pair));
    }
  }
  return g;
}

Vector LinkGraph::gather(const Matrix& p) const {
  Vector out(size());
  for (Index e = 0; e < size(); ++e) {
    const auto& en = entries[static_cast<std::size_t>(e)];
    out(e) = p(en.user, en.codebook);
  }
  return out;
}

Matrix LinkGraph::scatter(const Vector& p, Index users, Index codebooks) const {
  Matrix out = Matrix::Zero(users, codebooks);
  for (Index e = 0; e < size(); ++e) {
    const auto& en = entries[static_cast<std::size_t>(e)];
    out(en.user, en.codebook) = p(e);
  }
  return out;
}

Scalar LinkGraph::denominator(const Vector& p, Index e) const {
  Scalar d = entries[static_cast<std::size_t>(e)].noise;
  for (const auto& [i, gain] : interferers[static_cast<std::size_t>(e)]) d += p(i) * gain;
  return d;
}

Vector LinkGraph::sinr(const Vector& p) const {
  Vector gamma(size());
  for (Index e = 0; e < size(); ++e) {
    gamma(e) = p(e) * entries[static_cast<std::size_t>(e)].signal / denominator(p, e);
  }
  return gamma;
}

Scalar LinkGraph::sum_rate(const Vector& p) const { return sinr(p).array().log1p().sum(); }

Scalar LinkGraph::sic_residual(const Vector& p, Index k) const {
  const auto& pair = pairs[static_cast<std::size_t>(k)];
  Scalar r = pair.constant;
  for (const auto& [l, coef] : pair.coef) r += coef * p(l);
  return r;
}

Vector SicLinearization::exact(const Vector& p) const {
  Vector r(static_cast<Index>(graph->pairs.size()));
  for (Index k = 0; k < r.size(); ++k) r(k) = graph->sic_residual(p, k);
  return r;
}

Vector SicLinearization::affine(const Vector& log_p) const {
  Vector r = exact(anchor);
  for (Index k = 0; k < r.size(); ++k) {
    for (const auto& [l, coef] : graph->pairs[static_cast<std::size_t>(k)].coef) {
      r(k) += coef * anchor(l) * (log_p(l) - std::log(anchor(l)));
    }
  }
  return r;
}

Vector SicLinearization::dc(const Vector& p) const {
  Vector r(static_cast<Index>(graph->pairs.size()));
  for (Index k = 0; k < r.size(); ++k) {
    const auto& pair = graph->pairs[static_cast<std::size_t>(k)];
    Scalar v = pair.constant;
    for (const auto& [l, coef] : pair.coef) {
      if (coef >= 0) {
        v += coef * p(l);
      } else if (p(l) > 0) {
        // Tangent of the concave term -|coef| exp(x) at the anchor log-power.
        v += coef * anchor(l) * (1.0 + std::log(p(l) / anchor(l)));
      }
    }
    r(k) = v;
  }
  return r;
}

SicLinearization linearize_sic_constraint(const LinkGraph& graph, const Vector& anchor_powers) {
  for (const auto& pair : graph.pairs) {
    for (const auto& [l, coef] : pair.coef) {
      if (!(anchor_powers(l) > 0)) {
        throw DomainError("linearize_sic_constraint: anchor power must be > 0 on entry " +
                          std::to_string(l));
      }
    }
  }
  return {&graph, anchor_powers};
}

SicLinearization linearize_sic_constraint(const LinkGraph& graph, const Allocation& anchor) {
  return linearize_sic_constraint(graph, graph.gather(anchor.p));
}

} // namespace psma
