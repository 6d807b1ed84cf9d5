#include "guitod/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "guitod/error.hpp"

namespace guitod {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) throw ValidationError(std::string("config key '") + key + "' must be a number");
  } else {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      throw ValidationError(std::string("config key '") + key + "' must be a non-negative integer");
    }
  }
  out = it->get<T>();
}

}  // namespace

PolicyConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known = {
      "hash_dim", "hash_seed", "H", "max_dialogue_tokens", "max_span", "d", "M",
      "step_size", "momentum", "epochs", "batch_size", "seed", "init_scale", "grad_clip"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ValidationError("unknown config key '" + k + "'");
  }
  PolicyConfig c;
  read(j, "hash_dim", c.hash_dim);
  read(j, "hash_seed", c.hash_seed);
  read(j, "H", c.history);
  read(j, "max_dialogue_tokens", c.max_dialogue_tokens);
  read(j, "max_span", c.max_span);
  read(j, "d", c.d);
  read(j, "M", c.trunk_layers);
  read(j, "step_size", c.step_size);
  read(j, "momentum", c.momentum);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  read(j, "init_scale", c.init_scale);
  read(j, "grad_clip", c.grad_clip);
  validate_config(c);
  return c;
}

json config_to_json(const PolicyConfig& c) {
  return {{"hash_dim", c.hash_dim},
          {"hash_seed", c.hash_seed},
          {"H", c.history},
          {"max_dialogue_tokens", c.max_dialogue_tokens},
          {"max_span", c.max_span},
          {"d", c.d},
          {"M", c.trunk_layers},
          {"step_size", c.step_size},
          {"momentum", c.momentum},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"init_scale", c.init_scale},
          {"grad_clip", c.grad_clip}};
}

PolicyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid config JSON in " + path.string() + ": " + e.what(), e.byte);
  }
  return config_from_json(j);
}

void validate_config(const PolicyConfig& c) {
  if (c.hash_dim == 0) throw ValidationError("hash_dim must be positive");
  if (c.history == 0) throw ValidationError("H must be at least 1");
  if (c.max_dialogue_tokens == 0) throw ValidationError("max_dialogue_tokens must be positive");
  if (c.d == 0) throw ValidationError("d must be positive");
  if (c.trunk_layers == 0) throw ValidationError("M must be at least 1");
  if (c.batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(c.step_size > 0.0)) throw ValidationError("step_size must be positive");
  if (c.momentum < 0.0 || c.momentum >= 1.0) throw ValidationError("momentum must lie in [0, 1)");
  if (c.grad_clip < 0.0) throw ValidationError("grad_clip must be non-negative");
}

}  // namespace guitod
