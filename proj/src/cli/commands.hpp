#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "skp/cli.hpp"

namespace skp::cli {

// Stage seeds are derived from the configured master seed, so a stage run
// alone and the same stage inside `pipeline` draw identically.
enum class Stage : std::uint64_t { ablate = 1, examples = 2, batches = 3, embed = 4, index = 5 };
std::uint64_t stage_seed(const PipelineConfig& config, Stage stage);

struct Context {
  PipelineConfig config;
  std::size_t threads = 1;
  std::ostream* log = nullptr;  // warnings and summaries
};

struct LinearizeArgs {
  fs::path out;
};
struct AblateArgs {
  fs::path out;
};
struct GenPretrainArgs {
  fs::path corpus;
  fs::path out_dir;
};
struct LossArgs {
  fs::path originals;
  fs::path positives;
  std::optional<fs::path> mlm_probs;
  fs::path out;
};
struct MaskArgs {
  fs::path layout;
  fs::path out;
  std::string format = "descriptor";  // or "dense"
  bool same_type_visible = false;
};
struct EmbedArgs {
  fs::path in;
  fs::path out;
  std::string field;  // empty: "text" when present, else "question"
};
struct BuildIndexArgs {
  fs::path corpus_emb;
  fs::path out;
};
struct SearchArgs {
  fs::path corpus_emb;
  fs::path queries_emb;
  std::optional<fs::path> index;
  std::optional<fs::path> query_ids;
  std::size_t nprobe = 0;  // 0: config value
  fs::path out;
};
struct EvalArgs {
  fs::path results;
  fs::path corpus;
  std::vector<std::size_t> cutoffs;
  fs::path out;
};
struct PipelineArgs {
  fs::path out_dir;
};

void run_linearize(const Context& ctx, const LinearizeArgs& args);
void run_ablate(const Context& ctx, const AblateArgs& args);
void run_gen_pretrain(const Context& ctx, const GenPretrainArgs& args);
void run_loss(const Context& ctx, const LossArgs& args);
void run_mask(const Context& ctx, const MaskArgs& args);
void run_embed_stub(const Context& ctx, const EmbedArgs& args);
void run_build_index(const Context& ctx, const BuildIndexArgs& args);
void run_search(const Context& ctx, const SearchArgs& args);
void run_eval(const Context& ctx, const EvalArgs& args);
void run_pipeline(const Context& ctx, const PipelineArgs& args);

}  // namespace skp::cli
