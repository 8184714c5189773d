#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "skp/kb_ingest.hpp"
#include "skp/losses.hpp"
#include "skp/tokenizer.hpp"

namespace skp::cli {

namespace fs = std::filesystem;

struct IndexConfig {
  std::string type = "exact";  // "exact" or "ivf"
  std::size_t clusters = 16;
  std::size_t nprobe = 4;
};

struct LossConfig {
  InfoNceVariant variant = InfoNceVariant::paper;
  NegativeSource negatives = NegativeSource::positives;
  std::optional<double> tau;  // no default; the KCD loss stage is skipped without it
  double alpha = kDefaultAlpha;
};

/// Settings shared by every subcommand. A JSON config file fills these;
/// command-line flags override individual fields.
struct PipelineConfig {
  std::optional<fs::path> dump;
  std::optional<fs::path> name_map;
  std::optional<fs::path> cvt_list;
  std::optional<fs::path> vocab;
  std::optional<fs::path> questions;    // gold JSONL {question_id, question, answers}
  std::optional<fs::path> predictions;  // JSONL {question_id, answer}
  std::optional<fs::path> output_dir;

  std::size_t budget = 100;
  TokenizerMode tokenizer = TokenizerMode::whitespace;
  MalformedPolicy on_malformed = MalformedPolicy::skip;

  std::uint64_t seed = 0;
  double drop_fraction = 0.0;
  std::size_t batch_size = 8;
  std::optional<std::size_t> sample_count;  // all passages when unset
  std::size_t embed_dim = 64;
  std::size_t k = 100;
  IndexConfig index;
  LossConfig loss;

  std::optional<std::size_t> threads;
};

// Relative paths resolve against base_dir. Unknown keys are a ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

// Checks numeric ranges and that every configured input path exists.
void validate_config(const PipelineConfig& config);

// Resolved settings for the manifest. Paths are reduced to file names;
// the worker count and output directory are left out because they do not
// affect any artifact.
nlohmann::ordered_json config_snapshot(const PipelineConfig& config);

// Precedence: explicit value, then SKP_THREADS, then config, then hardware.
std::size_t resolve_threads(std::optional<std::size_t> flag, const PipelineConfig& config);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

/// Per-run audit record: config snapshot, seeds, and SHA-256 digests of
/// inputs and outputs. Outputs are keyed by file name so two runs into
/// different directories produce identical manifests.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void set_config(nlohmann::ordered_json snapshot) { config_ = std::move(snapshot); }
  void set_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void set_counts(const std::string& name, nlohmann::ordered_json value) { counts_[name] = std::move(value); }
  void add_input(const std::string& role, const fs::path& path);
  void add_output(const fs::path& path);

  nlohmann::ordered_json to_json() const;
  void write(const fs::path& path) const;

 private:
  std::string command_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, nlohmann::ordered_json> counts_;
  std::map<std::string, nlohmann::ordered_json> inputs_;
  std::map<std::string, std::string> outputs_;
};

// X/name.ext -> X/name.manifest.json
fs::path manifest_path_for(const fs::path& output);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand. Returns 0 on success, 1 on data or
/// runtime errors, 2 on usage errors.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skp::cli
