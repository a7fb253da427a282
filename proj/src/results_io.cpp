#include "psma/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace psma {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string number(double v) { return fmt("%.10g", v); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

} // namespace

std::string results_csv(const ResultTable& table) {
  std::string s =
      "scheme,sweep_axis,sweep_value,seed,sum_rate_nats,outer_iters,converged,budget_residual,"
      "sic_violations\n";
  for (const auto& r : table.rows) {
    s += std::string(to_string(r.scheme)) + ',' + r.axis + ',' + number(r.value) + ',' +
         std::to_string(r.seed) + ',' + fmt("%.9f", r.sum_rate) + ',' +
         std::to_string(r.outer_iters) + ',' + (r.converged ? "1" : "0") + ',' +
         fmt("%.6e", r.budget_residual) + ',' + std::to_string(r.sic_violations) + '\n';
  }
  return s;
}

std::string summary_csv(const ResultTable& table) {
  struct Acc {
    std::string axis;
    std::vector<Scalar> x;
  };
  std::map<std::pair<Scheme, Scalar>, Acc> groups;
  for (const auto& r : table.rows) {
    auto& g = groups[{r.scheme, r.value}];
    g.axis = r.axis;
    g.x.push_back(r.sum_rate);
  }
  std::string s = "scheme,sweep_axis,sweep_value,trials,mean_sum_rate_nats,std_sum_rate_nats\n";
  for (const auto& [key, g] : groups) {
    Scalar mean = 0;
    for (Scalar v : g.x) mean += v;
    mean /= static_cast<Scalar>(g.x.size());
    Scalar ss = 0;
    for (Scalar v : g.x) ss += (v - mean) * (v - mean);
    const Scalar sd = g.x.size() > 1 ? std::sqrt(ss / static_cast<Scalar>(g.x.size() - 1)) : 0.0;
    s += std::string(to_string(key.first)) + ',' + g.axis + ',' + number(key.second) + ',' +
         std::to_string(g.x.size()) + ',' + fmt("%.9f", mean) + ',' + fmt("%.9f", sd) + '\n';
  }
  return s;
}

std::string comparison_csv(const Comparison& cmp) {
  std::string s = "metric,value,std_error\n";
  for (const auto& st : cmp.stats) {
    s += "mean_" + std::string(to_string(st.scheme)) + ',' + fmt("%.9f", st.mean) + ',' +
         fmt("%.9f", st.std) + '\n';
  }
  s += "ratio_psma_scma," + fmt("%.9f", cmp.ratio_scma) + ',' + fmt("%.9f", cmp.ratio_scma_se) + '\n';
  s += "ratio_psma_pdnoma," + fmt("%.9f", cmp.ratio_pdnoma) + ',' +
       fmt("%.9f", cmp.ratio_pdnoma_se) + '\n';
  s += std::string("paired_channels,") + (cmp.paired ? "1" : "0") + ",0\n";
  return s;
}

void emit_results(const ResultTable& table, const std::filesystem::path& dir) {
  if (table.rows.empty()) throw ValidationError("table", "no rows to emit");
  ensure_dir(dir);
  write_file(dir / "results.csv", results_csv(table));
  write_file(dir / "summary.csv", summary_csv(table));
}

void emit_comparison(const Comparison& cmp, const std::filesystem::path& dir) {
  ensure_dir(dir);
  write_file(dir / "comparison.csv", comparison_csv(cmp));
}

} // namespace psma
