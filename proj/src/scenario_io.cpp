#include "psma/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace psma {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "num_bs",       "num_users",      "num_subcarriers", "num_codebooks",
      "codebook_size", "macro_radius",  "small_radius",    "min_distance",
      "path_loss_exponent", "p_max",    "noise_power",     "L_T",
      "K",            "scheme",         "seed",            "epsilon",
      "upsilon",      "nu1",            "nu2",             "max_dual_iters",
      "max_scale_iters", "max_outer_iters"};
  return keys;
}

const char* mandatory_keys[] = {"num_bs",        "num_users", "num_subcarriers", "num_codebooks",
                                "codebook_size", "p_max",     "L_T",             "K"};

template <typename T>
void read(const json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ValidationError(key, "expected an integer");
    } else {
      if (!it->is_number()) throw ValidationError(key, "expected a number");
    }
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(key, e.what());
  }
}

} // namespace

ScenarioConfig parse_scenario(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("<document>", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("<document>", "expected a JSON object");

  for (const auto& [key, value] : doc.items()) {
    if (!known_keys().contains(key)) throw ValidationError(key, "unknown key");
  }
  for (const char* key : mandatory_keys) {
    if (!doc.contains(key)) throw ValidationError(key, "missing mandatory field");
  }

  ScenarioConfig c;
  read(doc, "num_bs", c.num_bs);
  read(doc, "num_users", c.num_users);
  read(doc, "num_subcarriers", c.num_subcarriers);
  read(doc, "num_codebooks", c.num_codebooks);
  read(doc, "codebook_size", c.codebook_size);
  read(doc, "macro_radius", c.macro_radius);
  read(doc, "small_radius", c.small_radius);
  read(doc, "min_distance", c.min_distance);
  read(doc, "path_loss_exponent", c.path_loss_exponent);
  read(doc, "noise_power", c.noise_power);
  read(doc, "L_T", c.L_T);
  read(doc, "K", c.K);
  read(doc, "seed", c.seed);
  read(doc, "epsilon", c.epsilon);
  read(doc, "upsilon", c.upsilon);
  read(doc, "nu1", c.nu1);
  read(doc, "nu2", c.nu2);
  read(doc, "max_dual_iters", c.max_dual_iters);
  read(doc, "max_scale_iters", c.max_scale_iters);
  read(doc, "max_outer_iters", c.max_outer_iters);

  const json& pm = doc.at("p_max");
  if (pm.is_number()) {
    // A scalar budget applies to every BS.
    c.p_max.assign(static_cast<std::size_t>(std::max(c.num_bs, 0)), pm.get<Scalar>());
  } else if (pm.is_array()) {
    for (const auto& v : pm) {
      if (!v.is_number()) throw ValidationError("p_max", "expected numbers");
      c.p_max.push_back(v.get<Scalar>());
    }
  } else {
    throw ValidationError("p_max", "expected a number or an array of numbers");
  }

  if (auto it = doc.find("scheme"); it != doc.end()) {
    if (!it->is_string()) throw ValidationError("scheme", "expected a string");
    c.scheme = parse_scheme(it->get<std::string>());
  }

  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string to_json(const ScenarioConfig& c) {
  json doc{{"num_bs", c.num_bs},
           {"num_users", c.num_users},
           {"num_subcarriers", c.num_subcarriers},
           {"num_codebooks", c.num_codebooks},
           {"codebook_size", c.codebook_size},
           {"macro_radius", c.macro_radius},
           {"small_radius", c.small_radius},
           {"min_distance", c.min_distance},
           {"path_loss_exponent", c.path_loss_exponent},
           {"p_max", c.p_max},
           {"noise_power", c.noise_power},
           {"L_T", c.L_T},
           {"K", c.K},
           {"scheme", std::string(to_string(c.scheme))},
           {"seed", c.seed},
           {"epsilon", c.epsilon},
           {"upsilon", c.upsilon},
           {"nu1", c.nu1},
           {"nu2", c.nu2},
           {"max_dual_iters", c.max_dual_iters},
           {"max_scale_iters", c.max_scale_iters},
           {"max_outer_iters", c.max_outer_iters}};
  return doc.dump(2);
}

} // namespace psma
