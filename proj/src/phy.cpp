#include "psma/phy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psma {

EffectiveGains effective_gains(const ChannelRealization& channel,
                               const CodebookStructure& structure) {
  if (channel.num_subcarriers() != structure.num_subcarriers()) {
    throw ValidationError("structure", "subcarrier count differs from the channel");
  }
  const Matrix w = structure.weights();
  const Eigen::RowVectorXd support = structure.rho.colwise().sum();

  EffectiveGains g;
  g.user_cell = channel.user_cell;
  g.signal.reserve(channel.gain.size());
  for (const auto& gain : channel.gain) g.signal.push_back(gain * w);
  g.noise = channel.noise * w;
  g.hhat.resize(channel.num_users(), structure.num_codebooks());
  for (Index m = 0; m < channel.num_users(); ++m) {
    const Matrix& own = channel.gain[static_cast<std::size_t>(channel.cell(m))];
    g.hhat.row(m) = (own.row(m) * structure.rho).cwiseQuotient(support);
  }
  return g;
}

Scalar avg_codebook_gain(const ChannelRealization& channel, const CodebookStructure& structure,
                         Index bs, Index m, Index c) {
  const auto& rho = structure.rho.col(c);
  return channel.gain[static_cast<std::size_t>(bs)].row(m).dot(rho) / rho.sum();
}

namespace {

Scalar intercell(const Allocation& a, const EffectiveGains& g, Index observer, Index c) {
  const int f = g.cell(observer);
  Scalar sum = 0;
  for (Index i = 0; i < a.q.rows(); ++i) {
    if (a.q(i, c) && g.cell(i) != f) sum += a.p(i, c) * g.from(g.cell(i), observer, c);
  }
  return sum;
}

// Power of same-cell users on c ranked above `decoded`, excluding decoded itself.
Scalar stronger_power(const Allocation& a, const EffectiveGains& g, Index decoded, Index c) {
  const int f = g.cell(decoded);
  Scalar sum = 0;
  for (Index i = 0; i < a.q.rows(); ++i) {
    if (i != decoded && a.q(i, c) && g.cell(i) == f && g.ranks_above(i, decoded, c)) {
      sum += a.p(i, c);
    }
  }
  return sum;
}

Scalar cross_unchecked(const Allocation& a, const EffectiveGains& g, Index observer,
                       Index decoded, Index c) {
  if (!a.q(decoded, c)) return 0;
  const Scalar s = g.own(observer, c);
  const Scalar num = a.p(decoded, c) * s;
  if (num == 0) return 0;
  return num / (stronger_power(a, g, decoded, c) * s + intercell(a, g, observer, c) +
                g.noise(observer, c));
}

} // namespace

Scalar sinr_psma(const Allocation& alloc, const EffectiveGains& gains, Index m, Index c) {
  return cross_unchecked(alloc, gains, m, m, c);
}

Scalar sinr_psma(const Allocation& alloc, const ChannelRealization& channel,
                 const CodebookStructure& structure, Index m, Index c) {
  return sinr_psma(alloc, effective_gains(channel, structure), m, c);
}

Scalar sinr_cross(const Allocation& alloc, const EffectiveGains& gains, Index observer,
                  Index decoded, Index c) {
  if (!alloc.q(observer, c) || !alloc.q(decoded, c)) {
    throw DomainError("sinr_cross: both users must be assigned codebook " + std::to_string(c));
  }
  if (gains.cell(observer) != gains.cell(decoded)) {
    throw DomainError("sinr_cross: users are served by different cells");
  }
  if (observer != decoded && !gains.ranks_above(observer, decoded, c)) {
    throw DomainError("sinr_cross: observer must rank above the decoded user");
  }
  return cross_unchecked(alloc, gains, observer, decoded, c);
}

Scalar sinr_cross(const Allocation& alloc, const ChannelRealization& channel,
                  const CodebookStructure& structure, Index observer, Index decoded, Index c) {
  return sinr_cross(alloc, effective_gains(channel, structure), observer, decoded, c);
}

Scalar sinr_scma(const Allocation& alloc, const EffectiveGains& gains, Index m, Index c) {
  const int f = gains.cell(m);
  for (Index i = 0; i < alloc.q.rows(); ++i) {
    if (i != m && alloc.q(i, c) && alloc.q(m, c) && gains.cell(i) == f) {
      throw ContractError("sinr_scma: codebook " + std::to_string(c) + " reused inside cell " +
                          std::to_string(f));
    }
  }
  if (!alloc.q(m, c)) return 0;
  const Scalar num = alloc.p(m, c) * gains.own(m, c);
  if (num == 0) return 0;
  return num / (intercell(alloc, gains, m, c) + gains.noise(m, c));
}

Scalar sinr_scma(const Allocation& alloc, const ChannelRealization& channel,
                 const CodebookStructure& structure, Index m, Index c) {
  return sinr_scma(alloc, effective_gains(channel, structure), m, c);
}

Scalar sinr_pdnoma(const Allocation& alloc, const ChannelRealization& channel, Index m, Index n) {
  if (!alloc.q(m, n)) return 0;
  const int f = channel.cell(m);
  const Matrix& own = channel.gain[static_cast<std::size_t>(f)];
  const Scalar g = own(m, n);
  const Scalar num = g * alloc.p(m, n);
  if (num == 0) return 0;
  Scalar intra = 0;
  Scalar inter = 0;
  for (Index j = 0; j < alloc.q.rows(); ++j) {
    if (j == m || !alloc.q(j, n)) continue;
    const int k = channel.cell(j);
    if (k == f) {
      const bool stronger = own(j, n) > g || (own(j, n) == g && j > m);
      if (stronger) intra += g * alloc.p(j, n);
    } else {
      inter += channel.gain[static_cast<std::size_t>(k)](m, n) * alloc.p(j, n);
    }
  }
  return num / (intra + inter + channel.noise(m, n));
}

Scalar codebook_rate(const Allocation& alloc, const EffectiveGains& gains, Index c) {
  Scalar r = 0;
  for (Index m = 0; m < alloc.q.rows(); ++m) {
    if (alloc.q(m, c)) r += std::log1p(sinr_psma(alloc, gains, m, c));
  }
  return r;
}

namespace {

void fill_cross(const Allocation& a, const EffectiveGains& g, SinrReport& report) {
  for (Index c = 0; c < a.q.cols(); ++c) {
    for (Index d = 0; d < a.q.rows(); ++d) {
      if (!a.q(d, c)) continue;
      for (Index o = 0; o < a.q.rows(); ++o) {
        if (o == d || !a.q(o, c) || g.cell(o) != g.cell(d) || !g.ranks_above(o, d, c)) continue;
        report.cross.push_back({g.cell(o), c, o, d, cross_unchecked(a, g, o, d, c)});
      }
    }
  }
}

} // namespace

SinrReport sum_rate(const Allocation& alloc, const EffectiveGains& gains) {
  const Index M = alloc.q.rows();
  const Index C = alloc.q.cols();
  SinrReport r;
  r.gamma = Matrix::Zero(M, C);
  for (Index m = 0; m < M; ++m) {
    for (Index c = 0; c < C; ++c) {
      if (!alloc.q(m, c)) continue;
      r.gamma(m, c) = alloc.scheme == Scheme::SCMA ? sinr_scma(alloc, gains, m, c)
                                                   : sinr_psma(alloc, gains, m, c);
    }
  }
  r.rate = r.gamma.array().log1p().matrix();
  r.sum_rate = r.rate.sum();
  fill_cross(alloc, gains, r);
  return r;
}

SinrReport sum_rate(const Allocation& alloc, const ChannelRealization& channel,
                    const CodebookStructure& structure) {
  if (alloc.scheme != Scheme::PDNOMA) return sum_rate(alloc, effective_gains(channel, structure));

  const Index M = alloc.q.rows();
  const Index N = alloc.q.cols();
  SinrReport r;
  r.gamma = Matrix::Zero(M, N);
  for (Index m = 0; m < M; ++m) {
    for (Index n = 0; n < N; ++n) r.gamma(m, n) = sinr_pdnoma(alloc, channel, m, n);
  }
  r.rate = r.gamma.array().log1p().matrix();
  r.sum_rate = r.rate.sum();
  fill_cross(alloc, effective_gains(channel, identity_structure(static_cast<int>(N))), r);
  return r;
}

std::vector<SicCheck> sic_feasible(const Allocation& alloc, const EffectiveGains& gains,
                                   Index c) {
  std::vector<SicCheck> out;
  for (Index m = 0; m < alloc.q.rows(); ++m) {
    if (!alloc.q(m, c)) continue;
    const Scalar own = cross_unchecked(alloc, gains, m, m, c);
    for (Index j = 0; j < alloc.q.rows(); ++j) {
      if (j == m || gains.cell(j) != gains.cell(m) || !gains.ranks_above(j, m, c)) continue;
      const Scalar at_better = cross_unchecked(alloc, gains, j, m, c);
      const Scalar slack = at_better - (alloc.q(j, c) ? own : 0.0);
      out.push_back({gains.cell(m), c, j, m, slack >= 0, slack});
    }
  }
  return out;
}

std::vector<SicCheck> sic_feasible(const Allocation& alloc, const EffectiveGains& gains) {
  std::vector<SicCheck> out;
  for (Index c = 0; c < alloc.q.cols(); ++c) {
    auto part = sic_feasible(alloc, gains, c);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<SicCheck> sic_feasible(const Allocation& alloc, const ChannelRealization& channel,
                                   const CodebookStructure& structure) {
  if (alloc.scheme == Scheme::PDNOMA) {
    return sic_feasible(
        alloc, effective_gains(channel, identity_structure(static_cast<int>(alloc.q.cols()))));
  }
  return sic_feasible(alloc, effective_gains(channel, structure));
}

std::vector<Index> detection_order(const Allocation& alloc, const EffectiveGains& gains, int bs,
                                   Index c) {
  std::vector<Index> users;
  for (Index m = 0; m < alloc.q.rows(); ++m) {
    if (alloc.q(m, c) && gains.cell(m) == bs) users.push_back(m);
  }
  std::sort(users.begin(), users.end(),
            [&](Index a, Index b) { return gains.ranks_above(b, a, c); });
  return users;
}

std::vector<Index> detection_order(const Allocation& alloc, const CodebookStructure& structure,
                                   const ChannelRealization& channel, int bs, Index c) {
  return detection_order(alloc, effective_gains(channel, structure), bs, c);
}

} // namespace psma
