#include "../fixtures.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace psma;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScenarioConfig hetnet() { return load_scenario(fs::path(PSMA_SOURCE_DIR) / "scenarios/default.json"); }

// Ordered SIC pairs in one cell: the stronger user decodes the weaker user's codebook
// at least as well as the weaker user itself does.
Outcome sic_order_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  long pairs = 0, violations = 0, oracle_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int M = 6, C = 6;
    auto cfg = fx::small_config(1, M, 8, C, 2, 3, 6);
    const auto s = build_codebook_structure(cfg);
    const auto ch = fx::random_channel(rng, 1, M, 8, 0.1);
    Allocation a = Allocation::empty(M, C, Scheme::PSMA);
    std::uniform_real_distribution<Scalar> pw(0.01, 1.0);
    std::uniform_int_distribution<int> how_many(2, 3);
    for (Index c = 0; c < C; ++c) {
      std::vector<Index> users(M);
      for (Index m = 0; m < M; ++m) users[static_cast<std::size_t>(m)] = m;
      std::shuffle(users.begin(), users.end(), rng);
      const int k = how_many(rng);
      for (int i = 0; i < k; ++i) {
        a.q(users[static_cast<std::size_t>(i)], c) = 1;
        a.p(users[static_cast<std::size_t>(i)], c) = pw(rng);
      }
    }
    for (Index c = 0; c < C; ++c) {
      for (Index m = 0; m < M; ++m) {
        for (Index w = 0; w < M; ++w) {
          if (m == w || !a.q(m, c) || !a.q(w, c)) continue;
          if (fx::hhat(ch, s, m, c) < fx::hhat(ch, s, w, c)) continue;
          ++pairs;
          const Scalar at_strong = sinr_cross(a, ch, s, m, w, c);
          const Scalar own = sinr_psma(a, ch, s, w, c);
          const Scalar want_strong = fx::direct_cross(a, ch, s, m, w, c);
          const Scalar want_own = fx::direct_cross(a, ch, s, w, w, c);
          if (std::abs(at_strong - want_strong) > 1e-12 * want_strong ||
              std::abs(own - want_own) > 1e-12 * want_own) {
            ++oracle_mismatch;
          }
          // Equal only up to roundoff when the two average gains coincide.
          if (at_strong < own * (1 - 1e-12)) ++violations;
        }
      }
    }
  }
  const double dt = seconds_since(t0);
  return {violations == 0 && oracle_mismatch == 0 && dt < 60,
          fmt("pairs=%ld violations=%ld oracle_mismatch=%ld runtime=%.1fs", pairs, violations,
              oracle_mismatch, dt)};
}

Outcome scale_bound_suite() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<Scalar> e(-3.0, 3.0);
  const Index n = 100000;
  Array anchor(n), x(n);
  for (Index i = 0; i < n; ++i) {
    anchor(i) = std::pow(10.0, e(rng));
    x(i) = std::pow(10.0, e(rng));
  }
  const auto k = scale_coeffs(anchor);
  long violations = 0;
  Scalar worst = -1e300, worst_tight = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar gap = k.xi(i) * std::log(x(i)) + k.psi(i) - std::log1p(x(i));
    worst = std::max(worst, gap);
    if (gap > 1e-12) ++violations;
    const Scalar tight = k.xi(i) * std::log(anchor(i)) + k.psi(i) - std::log1p(anchor(i));
    worst_tight = std::max(worst_tight, std::abs(tight));
  }
  return {violations == 0 && worst_tight <= 1e-9,
          fmt("violations=%ld max_gap=%.3e max_anchor_error=%.3e", violations, worst, worst_tight)};
}

// Fixed point of the closed-form update, then a central-difference gradient of the
// Lagrangian in log-power at that point.
Outcome stationarity_suite() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  int bad = 0, unconverged = 0;
  Scalar worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int F = 2 + trial % 2, per = 2, C = 2 + trial % 3, M = F * per;
    auto cfg = fx::small_config(F, M, 8, C, 2, per, 8 * C);
    for (auto& p : cfg.p_max) p = 0.5 + 4 * unit(rng);
    const auto s = build_codebook_structure(cfg);
    const auto ch = fx::random_channel(rng, F, M, 8, 0.01);
    const auto g = effective_gains(ch, s);
    Allocation a = Allocation::empty(M, C, Scheme::PSMA);
    for (Index m = 0; m < M; ++m) {
      for (Index c = 0; c < C; ++c) {
        a.q(m, c) = unit(rng) < 0.8;
        a.p(m, c) = 0.05 + unit(rng);
      }
    }
    const auto graph = build_link_graph(a.q, g);
    if (graph.size() == 0) continue;
    const auto lin = linearize_sic_constraint(graph, a);
    Array anchor_sinr(graph.size());
    for (Index e = 0; e < graph.size(); ++e) anchor_sinr(e) = std::pow(10.0, -1 + 2 * unit(rng));
    const auto scale = scale_coeffs(anchor_sinr);
    DualState dual;
    dual.delta = Vector::NullaryExpr(F, [&] { return 0.2 + unit(rng); });
    dual.beta = Vector::NullaryExpr(static_cast<Index>(graph.pairs.size()),
                                    [&] { return 0.5 * unit(rng); });

    Vector p = lin.anchor;
    bool converged = false;
    for (int it = 0; it < 20000 && !converged; ++it) {
      const Vector next = power_closed_form(scale, dual, graph, lin, p);
      const Vector damped = (0.5 * (p.array().log() + next.array().log())).exp().matrix();
      converged = ((damped - p).array().abs() / p.array()).maxCoeff() < 1e-15;
      p = damped;
    }
    if (!converged) ++unconverged;
    ClosedFormTerms terms;
    power_closed_form(scale, dual, graph, lin, p, &terms);

    const Vector log_p = p.array().log().matrix();
    const Scalar h = 1e-5;
    for (Index e = 0; e < graph.size(); ++e) {
      Vector up = log_p, down = log_p;
      up(e) += h;
      down(e) -= h;
      const Scalar grad = (lagrangian(scale, dual, graph, lin, cfg.p_max, up) -
                           lagrangian(scale, dual, graph, lin, cfg.p_max, down)) / (2 * h);
      const Scalar rel = std::abs(grad) / (scale.xi(e) + terms.G(e));
      worst = std::max(worst, rel);
      if (rel > 1e-4) ++bad;
    }
  }
  return {bad == 0 && unconverged == 0,
          fmt("entries_over_tolerance=%d unconverged_fixed_points=%d max_relative_gradient=%.3e",
              bad, unconverged, worst)};
}

Outcome power_oracle_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  int pass = 0;
  Scalar worst = 1e300;
  for (int seed = 0; seed < 50; ++seed) {
    const int vars = 1 + seed % 3;
    const bool stacked = (seed / 3) % 2 == 0;  // all entries on one codebook, else spread
    const int M = stacked ? vars : std::max(1, vars - 1);
    auto cfg = fx::small_config(1, M, 8, 2, 2, 3, 8);
    cfg.p_max = {1.0 + 9.0 * unit(rng)};
    const auto s = build_codebook_structure(cfg);
    const auto ch = fx::random_channel(rng, 1, M, 8, 0.1);
    Allocation start = Allocation::empty(M, 2, Scheme::PSMA);
    if (stacked) {
      for (int m = 0; m < vars; ++m) start.q(m, 0) = 1;
    } else {
      for (int m = 0; m < M; ++m) start.q(m, 0) = 1;
      start.q(0, 1) = 1;
    }
    start.p = start.q.cast<Scalar>() * (cfg.p_max[0] / vars);
    const auto solved = solve_power_scale(start, ch, s, cfg);
    const Scalar rate = sum_rate(solved.alloc, ch, s).sum_rate;
    const auto best = brute_force_power_oracle(start.q, ch, s, cfg, 200);
    const Scalar oracle = sum_rate(best, ch, s).sum_rate;
    const Scalar ratio = oracle > 0 ? rate / oracle : 1.0;
    worst = std::min(worst, ratio);
    pass += ratio >= 0.98;
  }
  const double dt = seconds_since(t0);
  return {pass == 50 && dt < 300,
          fmt("within_2pct=%d/50 worst_ratio=%.5f runtime=%.1fs", pass, worst, dt)};
}

Outcome assignment_suite() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  std::uniform_int_distribution<int> users(2, 4), books(2, 4), lt(1, 2), k(1, 3);
  int near = 0, infeasible = 0, above_oracle = 0;
  Scalar worst = 1e300;
  for (int seed = 0; seed < 100; ++seed) {
    const int F = 1 + seed % 2, M = users(rng), C = books(rng);
    auto cfg = fx::small_config(F, M, 4, C, 2, lt(rng), k(rng));
    for (auto& p : cfg.p_max) p = 0.5 + 1.5 * unit(rng);
    const auto s = build_codebook_structure(cfg);
    const auto ch = fx::random_channel(rng, F, M, 4, 0.1);
    const auto g = effective_gains(ch, s);
    Matrix P(M, C);
    for (Index m = 0; m < M; ++m) {
      for (Index c = 0; c < C; ++c) P(m, c) = 0.1 + 0.9 * unit(rng);
    }
    const auto found = assign_codebooks(P, BinaryMatrix::Zero(M, C), g, s, cfg);
    const auto best = exhaustive_assign_oracle(P, g, s, cfg);
    infeasible += !found.feasible;
    above_oracle += found.objective > best.objective + 1e-12;
    const Scalar ratio = best.objective > 0 ? found.objective / best.objective : 1.0;
    worst = std::min(worst, ratio);
    near += ratio >= 0.95;
  }
  return {near >= 90 && infeasible == 0 && above_oracle == 0,
          fmt("at_95pct=%d/100 worst_ratio=%.4f infeasible=%d", near, worst, infeasible)};
}

Outcome complexity_table() {
  const ComplexityParams a{3, 8, 3, 4, 3, 1, 1};
  const ComplexityParams b{4, 10, 4, 5, 4, 1, 1};
  const auto sa = receiver_complexity(a, Scheme::SCMA), pa = receiver_complexity(a, Scheme::PSMA);
  const auto sb = receiver_complexity(b, Scheme::SCMA), pb = receiver_complexity(b, Scheme::PSMA);
  const bool ok = sa == 1536 && pa == 18432 && pa == 12 * sa && sb == 40000 && pb == 800000 &&
                  pb == 20 * sb;
  ComplexityParams na = a, nb = b;
  na.G_prime = a.G, na.L_T_prime = a.L_T;
  nb.G_prime = b.G, nb.L_T_prime = b.L_T;
  return {ok, fmt("scma=%llu,%llu psma=%llu,%llu pdnoma_formula=%llu,%llu",
                  static_cast<unsigned long long>(sa), static_cast<unsigned long long>(sb),
                  static_cast<unsigned long long>(pa), static_cast<unsigned long long>(pb),
                  static_cast<unsigned long long>(receiver_complexity(na, Scheme::PDNOMA)),
                  static_cast<unsigned long long>(receiver_complexity(nb, Scheme::PDNOMA)))};
}

Scalar mean_of(const ResultTable& t, Scheme scheme, Scalar value) {
  Scalar sum = 0;
  int n = 0;
  for (const auto& r : t.rows) {
    if (r.scheme == scheme && r.value == value) {
      sum += r.sum_rate;
      ++n;
    }
  }
  return n ? sum / n : 0;
}

ResultTable lt_sweep(std::vector<Scalar> values, std::vector<Scheme> schemes) {
  ExperimentSpec spec;
  spec.base = hetnet();
  spec.axis = SweepAxis::L_T;
  spec.values = std::move(values);
  spec.trials = 50;
  spec.schemes = std::move(schemes);
  return run_experiment(spec);
}

Outcome reduction_suite(ResultTable& emitted) {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  long entries = 0, mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int F = 2 + trial % 2, M = 3 * F, C = 6;
    auto cfg = fx::small_config(F, M, 8, C, 2, 1, 6);
    const auto s = build_codebook_structure(cfg);
    const auto ch = fx::random_channel(rng, F, M, 8, 0.05);
    Allocation a = Allocation::empty(M, C, Scheme::PSMA);
    for (int f = 0; f < F; ++f) {
      for (Index c = 0; c < C; ++c) {
        if (unit(rng) < 0.2) continue;
        const Index m = f + F * static_cast<Index>(unit(rng) * 3);
        a.q(m, c) = 1;
        a.p(m, c) = 0.01 + unit(rng);
      }
    }
    for (Index m = 0; m < M; ++m) {
      for (Index c = 0; c < C; ++c) {
        ++entries;
        const Scalar x = sinr_psma(a, ch, s, m, c), y = sinr_scma(a, ch, s, m, c);
        if (std::abs(x - y) > 1e-12 * std::max<Scalar>(1, std::abs(y))) ++mismatches;
      }
    }
  }
  const auto t = lt_sweep({1}, {Scheme::PSMA, Scheme::SCMA});
  emitted.rows.insert(emitted.rows.end(), t.rows.begin(), t.rows.end());
  const Scalar psma = mean_of(t, Scheme::PSMA, 1), scma = mean_of(t, Scheme::SCMA, 1);
  const Scalar gap = std::abs(psma / scma - 1);
  return {mismatches == 0 && gap <= 0.05,
          fmt("entries=%ld mismatches=%ld psma_lt1=%.3f scma=%.3f gap=%.2f%%", entries, mismatches,
              psma, scma, 100 * gap)};
}

Outcome trend_suite(ResultTable& emitted) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto t = lt_sweep({1, 2, 3}, {Scheme::PSMA, Scheme::SCMA, Scheme::PDNOMA});
  emitted.rows.insert(emitted.rows.end(), t.rows.begin(), t.rows.end());
  const Scalar p1 = mean_of(t, Scheme::PSMA, 1), p2 = mean_of(t, Scheme::PSMA, 2),
               p3 = mean_of(t, Scheme::PSMA, 3);
  const Scalar scma = mean_of(t, Scheme::SCMA, 3), pd = mean_of(t, Scheme::PDNOMA, 3);
  const double dt = seconds_since(t0);
  const bool ok = p3 >= 1.2 * scma && p3 >= 1.2 * pd && p1 <= p2 && p2 <= p3 && p3 >= 1.2 * p1 &&
                  dt < 1800;
  return {ok, fmt("psma[lt=1,2,3]=%.2f,%.2f,%.2f scma=%.2f pdnoma=%.2f psma/scma=%.3f "
                  "psma/pdnoma=%.3f lt_gain=%.1f%% runtime=%.1fs",
                  p1, p2, p3, scma, pd, p3 / scma, p3 / pd, 100 * (p3 / p1 - 1), dt)};
}

Outcome hygiene_suite(const ResultTable& emitted) {
  int bad = 0;
  std::string first;
  for (const auto& r : emitted.rows) {
    const bool ok = r.error.empty() && r.budget_residual <= 1e-6 && r.lt_ok && r.k_ok &&
                    r.min_multiplier >= 0 && r.trace_monotone;
    if (!ok) {
      if (first.empty()) {
        first = fmt(" first=%s/%g/seed%llu", std::string(to_string(r.scheme)).c_str(), r.value,
                    static_cast<unsigned long long>(r.seed));
      }
      ++bad;
    }
  }
  return {bad == 0 && !emitted.rows.empty(),
          fmt("runs=%zu failing=%d", emitted.rows.size(), bad) + first};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_suite() {
  const fs::path work = fs::temp_directory_path() / "psma_acceptance_determinism";
  fs::remove_all(work);
  const std::string cli = PSMA_CLI;
  const std::string scenario = (fs::path(PSMA_SOURCE_DIR) / "tests/data/tiny.json").string();
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate --scenario " + scenario + " --seed 2 --scheme psma --out {}/out"},
      {"sweep", "sweep --scenario " + scenario + " --axis users --values 2,4 --trials 3 --out {}/out"},
      {"compare", "compare --scenario " + scenario + " --seeds 1..4 --out {}/out"},
      {"complexity", "complexity --it 3 --pi 8 --d 3 --g 4 --lt 3"}};
  int differing = 0, failed = 0, files = 0;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = work / name / std::to_string(run);
      fs::create_directories(dir);
      std::string line = args;
      if (const auto at = line.find("{}"); at != std::string::npos) line.replace(at, 2, dir.string());
      const std::string cmd = cli + " " + line + " > " + (dir / "stdout.txt").string() + " 2>&1";
      if (std::system(cmd.c_str()) != 0) ++failed;
      outputs[run] = slurp(dir / "stdout.txt");
      for (const char* f : {"results.csv", "summary.csv", "comparison.csv"}) {
        if (fs::exists(dir / "out" / f)) outputs[run] += slurp(dir / "out" / f), files += run == 0;
      }
    }
    differing += outputs[0] != outputs[1];
  }
  fs::remove_all(work);
  return {differing == 0 && failed == 0,
          fmt("commands=4 csv_files=%d differing=%d failed_runs=%d", files, differing, failed)};
}

} // namespace

int main() {
  ResultTable emitted;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"SIC decoding order", sic_order_suite},
      {"SCALE lower bound", scale_bound_suite},
      {"closed-form stationarity", stationarity_suite},
      {"power oracle equivalence", power_oracle_suite},
      {"assignment oracle", assignment_suite},
      {"receiver complexity table", complexity_table},
      {"L_T=1 reduction to SCMA", [&] { return reduction_suite(emitted); }},
      {"HetNet trend", [&] { return trend_suite(emitted); }},
      {"solver hygiene", [&] { return hygiene_suite(emitted); }},
      {"CLI determinism", determinism_suite}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2zu %-28s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
