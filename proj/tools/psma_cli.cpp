// Command-line driver: single simulations, sweeps, scheme comparisons and the
// receiver-complexity table.
#include "psma/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

using namespace psma;

namespace {

enum Exit { kOk = 0, kValidation = 1, kIo = 2 };

std::vector<Scalar> parse_values(const std::string& text) {
  std::vector<Scalar> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("values", "not a number: '" + item + "'");
    }
  }
  return out;
}

std::uint64_t parse_seed(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("seeds", "not a seed: '" + s + "'");
  }
}

// "3..7" is the inclusive range, "1,4,9" an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = parse_seed(text.substr(0, dots));
    const auto hi = parse_seed(text.substr(dots + 2));
    if (hi < lo) throw ValidationError("seeds", "empty range " + text);
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_seed(item));
  return out;
}

void print_trace(const AlternateResult& r, std::ostream& os) {
  os << "outer_iter,sum_rate_nats\n";
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.9f\n", i + 1, r.trace[i]);
    os << buf;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"PSMA / SCMA / PD-NOMA HetNet sum-rate simulator"};
  app.require_subcommand(1);

  std::string scenario_path, scheme_name = "psma", out_dir, trace_path;
  std::uint64_t seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Solve one channel draw for one scheme");
  simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  simulate->add_option("--seed", seed, "Channel seed");
  simulate->add_option("--scheme", scheme_name, "psma|scma|pdnoma");
  simulate->add_option("--out", out_dir, "Directory for results.csv and summary.csv");
  simulate->add_option("--trace", trace_path, "CSV file for the alternation trace");

  std::string axis_name, values_text;
  int trials = 1;
  unsigned workers = 0;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over users, power or L_T");
  sweep->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  sweep->add_option("--axis", axis_name, "users|power|lt")->required();
  sweep->add_option("--values", values_text, "Comma-separated increasing sweep values")->required();
  sweep->add_option("--trials", trials, "Trials per sweep value");
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--workers", workers, "Worker threads (0 = all cores)");

  std::string seeds_text;
  auto* compare = app.add_subcommand("compare", "Paired comparison of the three schemes");
  compare->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  compare->add_option("--seeds", seeds_text, "Seed range a..b or list a,b,c")->required();
  compare->add_option("--out", out_dir, "Output directory")->required();
  compare->add_option("--workers", workers, "Worker threads (0 = all cores)");

  ComplexityParams cp;
  auto* complexity = app.add_subcommand("complexity", "Receiver operation counts");
  complexity->add_option("--it", cp.I_T, "MPA iterations")->required();
  complexity->add_option("--pi", cp.pi_size, "Codebook alphabet size")->required();
  complexity->add_option("--d", cp.d, "Nonzeros per factor-graph row")->required();
  complexity->add_option("--g", cp.G, "Codebooks per user")->required();
  complexity->add_option("--lt", cp.L_T, "Users per codebook")->required();
  complexity->add_option("--g-prime", cp.G_prime, "PD-NOMA subcarriers per user");
  complexity->add_option("--lt-prime", cp.L_T_prime, "PD-NOMA users per subcarrier");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*simulate) {
      auto config = load_scenario(scenario_path);
      config.scheme = parse_scheme(scheme_name);
      config.seed = seed;
      const auto row = run_trial(config, config.scheme, "none", 0.0, seed);
      if (!row.error.empty()) throw ValidationError("simulate", row.error);
      std::printf("scheme=%s seed=%llu sum_rate_nats=%.9f outer_iters=%d converged=%d "
                  "budget_residual=%.6e sic_violations=%d unserved=%d\n",
                  std::string(to_string(row.scheme)).c_str(),
                  static_cast<unsigned long long>(row.seed), row.sum_rate, row.outer_iters,
                  row.converged ? 1 : 0, row.budget_residual, row.sic_violations, row.unserved);
      if (!out_dir.empty()) emit_results(ResultTable{{row}}, out_dir);
      if (!trace_path.empty()) {
        const auto topology = build_topology(config, seed);
        const auto channel = sample_channels(topology, config, seed);
        const auto result =
            alternate_solve(config, channel, build_codebook_structure(config));
        std::ostringstream os;
        print_trace(result, os);
        std::FILE* f = std::fopen(trace_path.c_str(), "wb");
        if (!f) throw IoError("cannot open " + trace_path + " for writing");
        const std::string text = os.str();
        const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
        if (std::fclose(f) != 0 || !ok) throw IoError("failed writing " + trace_path);
      }
    } else if (*sweep) {
      ExperimentSpec spec;
      spec.base = load_scenario(scenario_path);
      spec.axis = parse_axis(axis_name);
      spec.values = parse_values(values_text);
      spec.trials = trials;
      spec.out = out_dir;
      spec.workers = workers;
      const auto table = run_experiment(spec);
      emit_results(table, spec.out);
      std::cout << summary_csv(table);
    } else if (*compare) {
      const auto config = load_scenario(scenario_path);
      const auto cmp = compare_schemes(config, parse_seeds(seeds_text), workers);
      emit_results(cmp.table, out_dir);
      emit_comparison(cmp, out_dir);
      std::cout << comparison_csv(cmp);
    } else if (*complexity) {
      for (Scheme s : {Scheme::SCMA, Scheme::PSMA, Scheme::PDNOMA}) {
        std::cout << to_string(s) << ',' << receiver_complexity(cp, s) << '\n';
      }
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}
