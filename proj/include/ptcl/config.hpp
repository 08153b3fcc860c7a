#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptcl/datasets.hpp"
#include "ptcl/encoders.hpp"
#include "ptcl/evaluation.hpp"
#include "ptcl/sampler.hpp"
#include "ptcl/training.hpp"

namespace ptcl {

using Json = nlohmann::ordered_json;

/// Carries every problem found in a config, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class DatasetKind { generic, jodie, synthetic };

struct DatasetSource {
  DatasetKind kind = DatasetKind::synthetic;
  /// Directory (generic) or CSV file (jodie).
  std::string path;
  DriftConfig synthetic;
  /// Forget dynamic labels after loading.
  bool drop_dynamic_labels = false;
};

struct RunConfig {
  DatasetSource dataset;
  SplitOptions split;
  EncoderConfig encoder;
  MethodSpec method;
  SamplerOptions sampler;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs/default";
};

/// Validates a config document. Unknown keys are errors.
RunConfig parse_run_config(const Json& doc);
/// Fully resolved document (defaults filled in) that parses back to the same config.
Json to_json(const RunConfig& config);
Json to_json(const DriftConfig& config);

Json load_json_file(const std::filesystem::path& path);
/// Applies "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& doc, const std::string& assignment);

LabeledDataset load_dataset(const DatasetSource& source);

/// Named synthetic presets accepted by the CLI ("drift-default", "drift-static").
DriftConfig drift_preset(const std::string& name);

/// Flat checkpoint keyed by hierarchical parameter names with shapes.
void save_checkpoint(const std::filesystem::path& path, const nn::ParameterSet& params, const Json& metadata);
/// Restores values by name; every parameter of the set must be present with
/// its shape. Returns the stored metadata.
Json load_checkpoint(const std::filesystem::path& path, const nn::ParameterSet& params);

std::string to_string(SplitMode mode);
std::string to_string(SamplerBackend backend);

}  // namespace ptcl
