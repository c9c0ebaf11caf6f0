#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "soda/information.hpp"
#include "soda/localizer.hpp"

namespace soda::cli {

/// Every tunable of the pipeline. Precedence: built-in defaults, then the
/// --config file, then explicit flags.
struct Config {
  int arity = 5;
  std::size_t persons = 0;  // 0: take the person count from the data
  std::optional<double> gamma1;  // fitted when absent
  std::optional<double> gamma2;
  bool interaction = true;
  std::size_t gibbs_burnin = 500;
  std::size_t gibbs_samples = 1000;
  std::uint32_t p = 16;
  int order_k = 1;
  std::size_t window = 7;
  std::size_t stride = 1;
  double fdr = 0.1;
  std::string fdr_method = "by";
  std::size_t null_reps = 200;
  std::string null_mode = "pooled";
  std::size_t top_n = 10;
  std::string lambda = "closed";  // closed | cv | none
  std::size_t k_neighbors = 1;
  double split_ratio = 0.5;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig on any out-of-range value.
  void validate() const;

  info::LambdaPolicy lambda_policy() const;
  loc::FdrMethod method() const;
  loc::NullMode null_model() const;
  loc::SurfaceSpec surface_spec() const;

  nlohmann::ordered_json to_json() const;
};

/// Overlays the keys of a flat JSON object onto `base`. Unknown keys and
/// ill-typed values throw InvalidConfig.
Config apply_json(Config base, const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path, Config base = {});

}  // namespace soda::cli
