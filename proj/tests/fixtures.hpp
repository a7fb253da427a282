#pragma once

#include "psma/experiment.hpp"

#include <cmath>
#include <random>

namespace fx {

using namespace psma;

inline ScenarioConfig small_config(int F, int M, int N, int C, int U, int L_T, int K) {
  ScenarioConfig c;
  c.num_bs = F;
  c.num_users = M;
  c.num_subcarriers = N;
  c.num_codebooks = C;
  c.codebook_size = U;
  c.L_T = L_T;
  c.K = K;
  c.p_max.assign(static_cast<std::size_t>(F), 1.0);
  if (F > 0) c.p_max[0] = 10.0;
  return c;
}

/// Channel with log-uniform gains over four decades and unit noise.
inline ChannelRealization random_channel(std::mt19937_64& rng, int F, int M, int N,
                                         Scalar noise = 1.0) {
  std::uniform_real_distribution<Scalar> u(-2.0, 2.0);
  ChannelRealization ch;
  ch.noise = Matrix::Constant(M, N, noise);
  for (int m = 0; m < M; ++m) ch.user_cell.push_back(m % F);
  for (int f = 0; f < F; ++f) {
    Matrix g(M, N);
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) g(m, n) = std::pow(10.0, u(rng));
    }
    ch.gain.push_back(g);
  }
  return ch;
}

/// Average own-cell gain over the codebook support, by plain loops.
inline Scalar hhat(const ChannelRealization& ch, const CodebookStructure& s, Index m, Index c) {
  Scalar sum = 0, count = 0;
  for (Index n = 0; n < s.rho.rows(); ++n) {
    if (s.rho(n, c) == 1.0) {
      sum += ch.gain[static_cast<std::size_t>(ch.user_cell[static_cast<std::size_t>(m)])](m, n);
      count += 1;
    }
  }
  return sum / count;
}

inline bool above(const ChannelRealization& ch, const CodebookStructure& s, Index i, Index m,
                  Index c) {
  const Scalar a = hhat(ch, s, i, c), b = hhat(ch, s, m, c);
  return a > b || (a == b && i > m);
}

/// Codebook-c received power from BS `bs` at user m per watt, by plain loops.
inline Scalar link(const ChannelRealization& ch, const CodebookStructure& s, Index bs, Index m,
                   Index c) {
  Scalar sum = 0;
  for (Index n = 0; n < s.rho.rows(); ++n) {
    sum += s.rho(n, c) * s.eta(n, c) * ch.gain[static_cast<std::size_t>(bs)](m, n);
  }
  return sum;
}

/// SINR of `decoded` observed at `observer` on codebook c, term by term.
inline Scalar direct_cross(const Allocation& a, const ChannelRealization& ch,
                           const CodebookStructure& s, Index observer, Index decoded, Index c) {
  if (!a.q(decoded, c)) return 0;
  const int f = ch.user_cell[static_cast<std::size_t>(observer)];
  const Scalar num = a.p(decoded, c) * link(ch, s, f, observer, c);
  if (num == 0) return 0;
  Scalar den = 0;
  for (Index n = 0; n < s.rho.rows(); ++n) den += s.rho(n, c) * s.eta(n, c) * ch.noise(observer, n);
  for (Index i = 0; i < a.q.rows(); ++i) {
    if (i == decoded || !a.q(i, c)) continue;
    const int k = ch.user_cell[static_cast<std::size_t>(i)];
    if (k == f) {
      if (above(ch, s, i, decoded, c)) den += a.p(i, c) * link(ch, s, f, observer, c);
    } else {
      den += a.p(i, c) * link(ch, s, k, observer, c);
    }
  }
  return num / den;
}

inline Scalar direct_sum_rate(const Allocation& a, const ChannelRealization& ch,
                              const CodebookStructure& s) {
  Scalar r = 0;
  for (Index m = 0; m < a.q.rows(); ++m) {
    for (Index c = 0; c < a.q.cols(); ++c) r += std::log1p(direct_cross(a, ch, s, m, m, c));
  }
  return r;
}

inline Allocation random_allocation(std::mt19937_64& rng, Index M, Index C, Scheme scheme,
                                    Scalar density = 0.5) {
  std::bernoulli_distribution on(density);
  std::uniform_real_distribution<Scalar> p(0.01, 1.0);
  Allocation a = Allocation::empty(M, C, scheme);
  for (Index m = 0; m < M; ++m) {
    for (Index c = 0; c < C; ++c) {
      if (on(rng)) {
        a.q(m, c) = 1;
        a.p(m, c) = p(rng);
      }
    }
  }
  return a;
}

} // namespace fx
