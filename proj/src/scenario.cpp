#include "psma/scenario.hpp"

#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

namespace psma {

std::string_view to_string(Scheme s) {
  switch (s) {
  case Scheme::PSMA: return "psma";
  case Scheme::SCMA: return "scma";
  case Scheme::PDNOMA: return "pdnoma";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "psma" || name == "PSMA") return Scheme::PSMA;
  if (name == "scma" || name == "SCMA") return Scheme::SCMA;
  if (name == "pdnoma" || name == "PDNOMA") return Scheme::PDNOMA;
  throw ValidationError("scheme", "unknown scheme '" + std::string(name) + "'");
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ValidationError(field, what);
  };
  require(c.num_bs >= 1, "num_bs", "must be >= 1");
  require(c.num_users >= 1, "num_users", "must be >= 1");
  require(c.num_subcarriers >= 1, "num_subcarriers", "must be >= 1");
  require(c.codebook_size >= 1, "codebook_size", "must be >= 1");
  require(c.codebook_size <= c.num_subcarriers, "codebook_size",
          "must not exceed num_subcarriers");
  require(c.num_codebooks >= 1, "num_codebooks", "must be >= 1");
  require(static_cast<std::uint64_t>(c.num_codebooks) <=
              binomial(c.num_subcarriers, c.codebook_size),
          "num_codebooks", "exceeds C(N,U) distinct codebooks");
  require(c.macro_radius > 0, "macro_radius", "must be > 0");
  require(c.small_radius > 0, "small_radius", "must be > 0");
  require(c.min_distance > 0, "min_distance", "must be > 0");
  require(c.min_distance < c.small_radius && c.min_distance < c.macro_radius, "min_distance",
          "must be smaller than every cell radius");
  require(std::isfinite(c.path_loss_exponent), "path_loss_exponent", "must be finite");
  require(c.p_max.size() == static_cast<std::size_t>(c.num_bs), "p_max",
          "needs exactly one budget per BS");
  for (Scalar p : c.p_max) require(std::isfinite(p) && p >= 0, "p_max", "must be >= 0");
  require(c.noise_power > 0, "noise_power", "must be > 0");
  require(c.L_T >= 1, "L_T", "must be >= 1");
  require(c.K >= 1, "K", "must be >= 1");
  require(c.epsilon > 0, "epsilon", "must be > 0");
  require(c.upsilon > 0, "upsilon", "must be > 0");
  require(c.nu1 > 0, "nu1", "must be > 0");
  require(c.nu2 > 0, "nu2", "must be > 0");
  require(c.max_dual_iters >= 1, "max_dual_iters", "must be >= 1");
  require(c.max_scale_iters >= 1, "max_scale_iters", "must be >= 1");
  require(c.max_outer_iters >= 1, "max_outer_iters", "must be >= 1");
}

Matrix distances(const Matrix2X& bs, const Matrix2X& users) {
  Matrix d(bs.cols(), users.cols());
  for (Index f = 0; f < bs.cols(); ++f) {
    d.row(f) = (users.colwise() - bs.col(f)).colwise().norm();
  }
  return d;
}

namespace {

Eigen::Vector2d drop_in_annulus(detail::Rng& rng, Scalar inner, Scalar outer) {
  // Uniform over the annulus area.
  const Scalar r = std::sqrt(inner * inner + rng.uniform() * (outer * outer - inner * inner));
  const Scalar theta = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace

Topology build_topology(const ScenarioConfig& config, std::uint64_t seed) {
  validate(config);
  detail::Rng rng(seed, detail::Stream::Topology);
  const int F = config.num_bs;
  const int M = config.num_users;

  Topology t;
  t.bs_positions = Matrix2X::Zero(2, F);
  const Scalar small_range = std::max(config.macro_radius - config.small_radius, 0.0);
  for (int f = 1; f < F; ++f) {
    t.bs_positions.col(f) = drop_in_annulus(rng, 0.0, small_range);
  }

  t.user_positions.resize(2, M);
  t.user_cell.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const int f = m % F;
    const Scalar radius = f == 0 ? config.macro_radius : config.small_radius;
    t.user_cell[static_cast<std::size_t>(m)] = f;
    t.user_positions.col(m) =
        t.bs_positions.col(f) + drop_in_annulus(rng, config.min_distance, radius);
  }
  t.distance = distances(t.bs_positions, t.user_positions);
  return t;
}

ChannelRealization sample_channels(const Topology& topology, const ScenarioConfig& config,
                                   std::uint64_t seed) {
  const Index F = topology.num_bs();
  const Index M = topology.num_users();
  const Index N = config.num_subcarriers;
  if (topology.distance.rows() != F || topology.distance.cols() != M) {
    throw ValidationError("topology", "distance matrix shape does not match positions");
  }
  if ((topology.distance.array() <= 0).any()) {
    throw DomainError("sample_channels: zero BS-user distance makes path loss singular");
  }

  detail::Rng rng(seed, detail::Stream::Fading);
  ChannelRealization ch;
  ch.user_cell = topology.user_cell;
  ch.noise = Matrix::Constant(M, N, config.noise_power);
  ch.gain.reserve(static_cast<std::size_t>(F));
  for (Index f = 0; f < F; ++f) {
    Matrix g(M, N);
    for (Index m = 0; m < M; ++m) {
      const Scalar path = std::pow(topology.distance(f, m), 2.0 * config.path_loss_exponent);
      for (Index n = 0; n < N; ++n) g(m, n) = rng.exponential() * path;
    }
    if ((g.array() <= 0).any()) {
      throw DomainError("sample_channels: path loss underflowed to a zero gain");
    }
    ch.gain.push_back(std::move(g));
  }
  return ch;
}

std::uint64_t digest(const ChannelRealization& channel) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const Matrix& m) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(m.size()) * sizeof(Scalar); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& g : channel.gain) mix(g);
  mix(channel.noise);
  return h;
}

void check_structure(const CodebookStructure& s) {
  const Index N = s.rho.rows();
  const Index C = s.rho.cols();
  if (s.eta.rows() != N || s.eta.cols() != C) {
    throw ValidationError("eta", "shape must match rho");
  }
  for (Index c = 0; c < C; ++c) {
    Scalar eta_sum = 0;
    for (Index n = 0; n < N; ++n) {
      const Scalar r = s.rho(n, c);
      if (r != 0.0 && r != 1.0) throw ValidationError("rho", "entries must be 0 or 1");
      if (s.eta(n, c) < 0 || s.eta(n, c) > 1) throw ValidationError("eta", "must lie in [0,1]");
      if (r == 0.0 && s.eta(n, c) != 0.0) {
        throw ValidationError("eta", "nonzero outside the codebook support");
      }
      eta_sum += s.eta(n, c);
    }
    if (s.rho.col(c).sum() < 1) throw ValidationError("rho", "empty codebook");
    if (std::abs(eta_sum - 1.0) > 1e-9) {
      throw ValidationError("eta", "power fractions of a codebook must sum to 1");
    }
  }
}

namespace {

std::vector<std::vector<int>> all_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

} // namespace

CodebookStructure build_codebook_structure(const ScenarioConfig& config, EtaPolicy policy,
                                           const std::optional<Matrix>& custom_eta) {
  const int N = config.num_subcarriers;
  const int U = config.codebook_size;
  const int C = config.num_codebooks;
  if (U < 1 || U > N) throw ValidationError("codebook_size", "must lie in [1, N]");
  if (C < 1 || static_cast<std::uint64_t>(C) > binomial(N, U)) {
    throw RefusalError("build_codebook_structure: C exceeds C(N,U), no such set of codebooks");
  }

  // Greedy: the candidate whose members are least loaded wins; lexicographic order breaks ties.
  const auto candidates = all_subsets(N, U);
  std::vector<bool> used(candidates.size(), false);
  std::vector<int> load(static_cast<std::size_t>(N), 0);
  CodebookStructure s;
  s.rho = Matrix::Zero(N, C);
  s.eta = Matrix::Zero(N, C);
  for (int c = 0; c < C; ++c) {
    std::size_t best = candidates.size();
    std::pair<int, int> best_key{std::numeric_limits<int>::max(), 0};
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      int peak = 0;
      int total = 0;
      for (int n : candidates[i]) {
        peak = std::max(peak, load[static_cast<std::size_t>(n)] + 1);
        total += load[static_cast<std::size_t>(n)];
      }
      const std::pair<int, int> key{peak, total};
      if (key < best_key) {
        best_key = key;
        best = i;
      }
    }
    used[best] = true;
    s.codebook_subcarriers.push_back(candidates[best]);
    for (int n : candidates[best]) {
      ++load[static_cast<std::size_t>(n)];
      s.rho(n, c) = 1.0;
      s.eta(n, c) = 1.0 / U;
    }
  }

  if (policy == EtaPolicy::CUSTOM) {
    if (!custom_eta) throw ValidationError("eta", "CUSTOM policy needs an eta matrix");
    s.eta = *custom_eta;
  }
  check_structure(s);
  return s;
}

CodebookStructure identity_structure(int num_subcarriers) {
  CodebookStructure s;
  s.rho = Matrix::Identity(num_subcarriers, num_subcarriers);
  s.eta = s.rho;
  for (int n = 0; n < num_subcarriers; ++n) s.codebook_subcarriers.push_back({n});
  return s;
}

} // namespace psma
