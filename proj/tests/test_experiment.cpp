#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace psma;

namespace {

ScenarioConfig hetnet() {
  auto c = fx::small_config(3, 12, 8, 28, 2, 3, 6);
  c.p_max = {30, 2, 2};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

} // namespace

TEST_CASE("greedy start saturates L_T and K") {
  auto c = hetnet();
  const auto topo = build_topology(c, 3);
  const auto ch = sample_channels(topo, c, 3);
  const auto s = build_codebook_structure(c);
  const auto g = effective_gains(ch, s);
  const auto q0 = greedy_assignment(g, s, c);
  CHECK(q0.unserved == 0);
  const auto r = check_feasible(q0.q, equal_split(q0.q, g, c.p_max), g, s, c);
  CHECK(r.lt_ok);
  CHECK(r.k_ok);
  CHECK(r.budget_ok);
  // Every cell has some subcarrier at the reuse cap.
  for (int f = 0; f < 3; ++f) CHECK(r.k_slack.row(f).minCoeff() == 0);
}

TEST_CASE("alternation: one user, one codebook matches the power oracle") {
  auto c = fx::small_config(1, 1, 2, 1, 2, 1, 1);
  c.p_max = {3.0};
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t) {
    const auto ch = fx::random_channel(rng, 1, 1, 2, 0.5);
    const auto s = build_codebook_structure(c);
    const auto r = alternate_solve(c, ch, s);
    const auto best = brute_force_power_oracle(r.alloc.q, ch, s, c, 200);
    const Scalar oracle = sum_rate(best, ch, s).sum_rate;
    CHECK(r.sum_rate >= 0.98 * oracle);
    CHECK(r.alloc.q(0, 0) == 1);
  }
}

TEST_CASE("alternation: zero budget") {
  auto c = hetnet();
  c.p_max = {0, 0, 0};
  const auto topo = build_topology(c, 1);
  const auto ch = sample_channels(topo, c, 1);
  const auto r = alternate_solve(c, ch, build_codebook_structure(c));
  CHECK(r.sum_rate == 0);
  CHECK(r.converged);
  CHECK(r.outer_iters == 1);
}

TEST_CASE("alternation: monotone trace and clean reports on the HetNet") {
  auto c = hetnet();
  const auto s = build_codebook_structure(c);
  for (Scheme scheme : {Scheme::PSMA, Scheme::SCMA, Scheme::PDNOMA}) {
    c.scheme = scheme;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto topo = build_topology(c, seed);
      const auto ch = sample_channels(topo, c, seed);
      const auto r = alternate_solve(c, ch, s);
      for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-6);
      CHECK(r.report.feasible());
      CHECK(r.report.budget_residual <= 1e-6);
      CHECK(r.min_multiplier >= 0);
      CHECK(r.sum_rate == doctest::Approx(sum_rate(r.alloc, ch, s).sum_rate).epsilon(1e-12));
    }
  }
}

TEST_CASE("experiments") {
  ExperimentSpec spec;
  spec.base = fx::small_config(2, 4, 4, 6, 2, 2, 3);
  spec.base.max_outer_iters = 3;
  spec.axis = SweepAxis::L_T;
  spec.values = {1};
  spec.trials = 1;
  spec.schemes = {Scheme::PSMA};
  spec.workers = 1;

  SUBCASE("one value, one trial, one scheme is one row") {
    const auto t = run_experiment(spec);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].error.empty());
    const auto dir = scratch("psma_emit_one");
    emit_results(t, dir);
    const auto text = slurp(dir / "results.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.rfind("scheme,sweep_axis,sweep_value,seed,sum_rate_nats,outer_iters,converged,"
                     "budget_residual,sic_violations\n", 0) == 0);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("emission is byte-stable and the summary mean is the row mean") {
    spec.values = {1, 2};
    spec.trials = 3;
    spec.schemes = {Scheme::PSMA, Scheme::SCMA};
    spec.workers = 2;
    const auto a = run_experiment(spec);
    spec.workers = 1;
    const auto b = run_experiment(spec);
    CHECK(a.rows.size() == 12);
    CHECK(results_csv(a) == results_csv(b));
    const auto dir = scratch("psma_emit_twice");
    emit_results(a, dir);
    const auto first = slurp(dir / "results.csv") + slurp(dir / "summary.csv");
    emit_results(a, dir);
    CHECK(slurp(dir / "results.csv") + slurp(dir / "summary.csv") == first);
    std::filesystem::remove_all(dir);

    Scalar sum = 0;
    for (const auto& r : a.rows) {
      if (r.scheme == Scheme::PSMA && r.value == 2) sum += r.sum_rate;
    }
    char want[64];
    std::snprintf(want, sizeof want, "psma,lt,2,3,%.9f,", sum / 3);
    CHECK(summary_csv(a).find(want) != std::string::npos);
  }
  SUBCASE("bad specs") {
    spec.values = {2, 1};
    CHECK_THROWS_AS(run_experiment(spec), ValidationError);
    spec.values = {1};
    spec.trials = 0;
    CHECK_THROWS_AS(run_experiment(spec), ValidationError);
  }
  SUBCASE("unwritable path") {
    const auto t = run_experiment(spec);
    CHECK_THROWS_AS(emit_results(t, "/proc/psma_cannot_write_here"), IoError);
  }
}

TEST_CASE("sweep axes") {
  const auto base = hetnet();
  CHECK(apply_sweep(base, SweepAxis::USERS, 6).num_users == 6);
  CHECK(apply_sweep(base, SweepAxis::L_T, 2).L_T == 2);
  const auto p = apply_sweep(base, SweepAxis::TOTAL_POWER, 68);
  CHECK(p.p_max[0] == doctest::Approx(60));
  CHECK(p.p_max[1] == doctest::Approx(4));
  CHECK_THROWS_AS(apply_sweep(base, SweepAxis::L_T, 1.5), ValidationError);
  CHECK(parse_axis("power") == SweepAxis::TOTAL_POWER);
  CHECK_THROWS_AS(parse_axis("bogus"), ValidationError);
}

TEST_CASE("paired comparison") {
  const std::vector<Scalar> x{3.0, 4.0, 5.5};
  const auto [r, se] = paired_ratio(x, x);
  CHECK(r == 1.0);
  CHECK(se == 0.0);

  auto c = fx::small_config(2, 4, 4, 6, 2, 2, 3);
  c.max_outer_iters = 3;
  const auto cmp = compare_schemes(c, {1, 2, 3}, 1);
  CHECK(cmp.paired);
  CHECK(cmp.table.rows.size() == 9);
  CHECK(cmp.stats.size() == 3);
  CHECK(cmp.ratio_scma > 0);
}
