#pragma once

#include "psma/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace psma {

/// Network-level parameters of one scenario. Field names double as the JSON keys
/// of the scenario file.
struct ScenarioConfig {
  int num_bs = 1;           // F, BS 0 is the macro cell
  int num_users = 1;        // M
  int num_subcarriers = 1;  // N
  int num_codebooks = 1;    // C
  int codebook_size = 1;    // U, nonzero subcarriers per codebook
  Scalar macro_radius = 1000.0;
  Scalar small_radius = 20.0;
  Scalar min_distance = 1.0;
  Scalar path_loss_exponent = -2.0;
  std::vector<Scalar> p_max;  // watts, one per BS
  Scalar noise_power = 1e-13; // watts
  int L_T = 1;                // users per codebook per cell
  int K = 1;                  // subcarrier reuse per cell
  Scheme scheme = Scheme::PSMA;
  std::uint64_t seed = 1;

  Scalar epsilon = 1e-4; // inner / SCALE power tolerance, relative to p_max
  Scalar upsilon = 1e-3; // alternation tolerance, relative to p_max
  Scalar nu1 = 0.1;      // budget multiplier base step
  Scalar nu2 = 0.1;      // SIC multiplier base step
  int max_dual_iters = 500;
  int max_scale_iters = 30;
  int max_outer_iters = 20;
};

/// Throws ValidationError naming the first field that breaks an invariant.
void validate(const ScenarioConfig& config);

std::uint64_t binomial(int n, int k);

struct Topology {
  Matrix2X bs_positions;    // 2 x F
  Matrix2X user_positions;  // 2 x M
  std::vector<int> user_cell;
  Matrix distance;          // F x M, meters

  Index num_bs() const { return bs_positions.cols(); }
  Index num_users() const { return user_positions.cols(); }
};

/// BS 0 sits at the origin; small BSs are dropped uniformly inside the macro disc.
/// User m is served by cell m mod F and dropped uniformly inside that cell.
Topology build_topology(const ScenarioConfig& config, std::uint64_t seed);

/// Recomputes the distance matrix from positions.
Matrix distances(const Matrix2X& bs, const Matrix2X& users);

struct ChannelRealization {
  std::vector<Matrix> gain;  // per BS f: M x N power gains |h^f_{m,n}|^2
  Matrix noise;              // M x N noise powers
  std::vector<int> user_cell;

  Index num_bs() const { return static_cast<Index>(gain.size()); }
  Index num_users() const { return noise.rows(); }
  Index num_subcarriers() const { return noise.cols(); }
  int cell(Index m) const { return user_cell[static_cast<std::size_t>(m)]; }
};

ChannelRealization sample_channels(const Topology& topology, const ScenarioConfig& config,
                                   std::uint64_t seed);

/// FNV-1a over the raw gain bytes; used to prove schemes ran on the same draw.
std::uint64_t digest(const ChannelRealization& channel);

struct CodebookStructure {
  Matrix rho;  // N x C, 0/1
  Matrix eta;  // N x C, power fraction on support
  std::vector<std::vector<int>> codebook_subcarriers;

  Index num_subcarriers() const { return rho.rows(); }
  Index num_codebooks() const { return rho.cols(); }
  /// rho .* eta, the per-subcarrier weights applied to a codebook's power.
  Matrix weights() const { return rho.cwiseProduct(eta); }
};

enum class EtaPolicy { UNIFORM_ETA, CUSTOM };

/// Picks C distinct U-subsets, least-loaded first with lexicographic tie-break.
/// CUSTOM requires `custom_eta` (N x C); it must respect the support and sum to 1 per codebook.
CodebookStructure build_codebook_structure(const ScenarioConfig& config,
                                           EtaPolicy policy = EtaPolicy::UNIFORM_ETA,
                                           const std::optional<Matrix>& custom_eta = std::nullopt);

/// One single-subcarrier codebook per subcarrier; the PD-NOMA resource grid.
CodebookStructure identity_structure(int num_subcarriers);

/// Throws ValidationError if rho/eta break the codebook invariants.
void check_structure(const CodebookStructure& structure);

ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(std::string_view json_text);
std::string to_json(const ScenarioConfig& config);

} // namespace psma
