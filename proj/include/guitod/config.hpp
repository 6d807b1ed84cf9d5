#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include <nlohmann/json_fwd.hpp>

namespace guitod {

/// Everything that determines featurization, the model shape and training.
/// Serialized as a flat JSON object; missing keys keep their defaults.
struct PolicyConfig {
  // Featurization.
  std::size_t hash_dim = 64;
  std::uint64_t hash_seed = 17;
  /// H: most recent actions and screens fed to the model.
  std::size_t history = 4;
  std::size_t max_dialogue_tokens = 256;
  /// Upper bound on e - s for decoded input spans.
  std::size_t max_span = 10;

  // Model.
  std::size_t d = 32;
  /// Affine + tanh layers in the shared trunk.
  std::size_t trunk_layers = 1;

  // Training.
  double step_size = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 300;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  double init_scale = 1.0;
  /// Global gradient-norm clip per step; 0 disables.
  double grad_clip = 5.0;

  bool operator==(const PolicyConfig&) const = default;
};

/// Throws ValidationError on unknown keys, wrong types or out-of-range values.
PolicyConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PolicyConfig& c);
PolicyConfig load_config(const std::filesystem::path& path);
void validate_config(const PolicyConfig& c);

}  // namespace guitod
