#include <cstdlib>
#include <fstream>
#include <set>

#include "skp/cli.hpp"
#include "skp/error.hpp"
#include "skp/parallel.hpp"

namespace skp::cli {

namespace {

const std::set<std::string> kTopKeys = {
    "dump", "name_map", "cvt_list", "vocab", "questions", "predictions", "output_dir", "budget", "tokenizer",
    "on_malformed", "seed", "drop_fraction", "batch_size", "sample_count", "embed_dim", "k", "index", "loss",
    "threads"};
const std::set<std::string> kIndexKeys = {"type", "clusters", "nprobe"};
const std::set<std::string> kLossKeys = {"variant", "negatives", "tau", "alpha"};

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v;
  take(j, key, v);
  dst = std::move(v);
}

void take_path(const nlohmann::json& j, const char* key, const fs::path& base, std::optional<fs::path>& dst) {
  std::optional<std::string> s;
  take(j, key, s);
  if (!s) return;
  fs::path p(*s);
  dst = p.is_absolute() ? p : base / p;
}

MalformedPolicy parse_policy(const std::string& s) {
  if (s == "skip") return MalformedPolicy::skip;
  if (s == "abort") return MalformedPolicy::abort;
  throw ConfigError("on_malformed must be 'skip' or 'abort', got '" + s + "'");
}

NegativeSource parse_negatives(const std::string& s) {
  if (s == "positives") return NegativeSource::positives;
  if (s == "originals") return NegativeSource::originals;
  throw ConfigError("loss.negatives must be 'positives' or 'originals', got '" + s + "'");
}

std::string_view to_string(MalformedPolicy p) { return p == MalformedPolicy::skip ? "skip" : "abort"; }
std::string_view to_string(NegativeSource n) { return n == NegativeSource::positives ? "positives" : "originals"; }

void require_file(const std::optional<fs::path>& p, const char* what) {
  if (p && !fs::is_regular_file(*p)) throw ConfigError(std::string(what) + " not found: " + p->string());
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  check_keys(j, kTopKeys, "config");
  PipelineConfig c;
  take_path(j, "dump", base_dir, c.dump);
  take_path(j, "name_map", base_dir, c.name_map);
  take_path(j, "cvt_list", base_dir, c.cvt_list);
  take_path(j, "vocab", base_dir, c.vocab);
  take_path(j, "questions", base_dir, c.questions);
  take_path(j, "predictions", base_dir, c.predictions);
  take_path(j, "output_dir", base_dir, c.output_dir);
  take(j, "budget", c.budget);
  if (std::optional<std::string> mode; take(j, "tokenizer", mode), mode) {
    try {
      c.tokenizer = parse_tokenizer_mode(*mode);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  if (std::optional<std::string> p; take(j, "on_malformed", p), p) c.on_malformed = parse_policy(*p);
  take(j, "seed", c.seed);
  take(j, "drop_fraction", c.drop_fraction);
  take(j, "batch_size", c.batch_size);
  take(j, "sample_count", c.sample_count);
  take(j, "embed_dim", c.embed_dim);
  take(j, "k", c.k);
  take(j, "threads", c.threads);
  if (j.contains("index")) {
    const auto& ix = j.at("index");
    check_keys(ix, kIndexKeys, "index");
    take(ix, "type", c.index.type);
    take(ix, "clusters", c.index.clusters);
    take(ix, "nprobe", c.index.nprobe);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    check_keys(l, kLossKeys, "loss");
    if (std::optional<std::string> v; take(l, "variant", v), v) {
      try {
        c.loss.variant = parse_infonce_variant(*v);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
    if (std::optional<std::string> n; take(l, "negatives", n), n) c.loss.negatives = parse_negatives(*n);
    take(l, "tau", c.loss.tau);
    take(l, "alpha", c.loss.alpha);
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

void validate_config(const PipelineConfig& c) {
  require_file(c.dump, "dump");
  require_file(c.name_map, "name map");
  require_file(c.cvt_list, "CVT list");
  require_file(c.vocab, "vocab");
  require_file(c.questions, "questions file");
  require_file(c.predictions, "predictions file");
  if (c.budget < 1) throw ArgumentError("budget must be at least 1");
  if (c.tokenizer == TokenizerMode::wordpiece && !c.vocab)
    throw ConfigError("wordpiece tokenizer needs a vocab file");
  if (!(c.drop_fraction >= 0.0 && c.drop_fraction <= 1.0)) throw ArgumentError("drop_fraction must lie in [0, 1]");
  if (c.batch_size < 2) throw ArgumentError("batch_size must be at least 2");
  if (c.embed_dim < 2) throw ArgumentError("embed_dim must be at least 2");
  if (c.k < 1) throw ArgumentError("k must be at least 1");
  if (c.index.type != "exact" && c.index.type != "ivf")
    throw ArgumentError("index.type must be 'exact' or 'ivf', got '" + c.index.type + "'");
  if (c.index.clusters < 1 || c.index.nprobe < 1 || c.index.nprobe > c.index.clusters)
    throw ArgumentError("index needs 1 <= nprobe <= clusters");
  if (c.loss.tau && !(*c.loss.tau > 0.0)) throw ArgumentError("loss.tau must be positive");
  if (!(c.loss.alpha >= 0.0 && c.loss.alpha <= 1.0)) throw ArgumentError("loss.alpha must lie in [0, 1]");
}

nlohmann::ordered_json config_snapshot(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  auto name = [](const std::optional<fs::path>& p) -> nlohmann::ordered_json {
    return p ? nlohmann::ordered_json(p->filename().string()) : nlohmann::ordered_json(nullptr);
  };
  j["dump"] = name(c.dump);
  j["name_map"] = name(c.name_map);
  j["cvt_list"] = name(c.cvt_list);
  j["vocab"] = name(c.vocab);
  j["questions"] = name(c.questions);
  j["predictions"] = name(c.predictions);
  j["budget"] = c.budget;
  j["tokenizer"] = to_string(c.tokenizer);
  j["on_malformed"] = to_string(c.on_malformed);
  j["seed"] = c.seed;
  j["drop_fraction"] = c.drop_fraction;
  j["batch_size"] = c.batch_size;
  j["sample_count"] = c.sample_count ? nlohmann::ordered_json(*c.sample_count) : nlohmann::ordered_json("all");
  j["embed_dim"] = c.embed_dim;
  j["k"] = c.k;
  j["index"] = {{"type", c.index.type}, {"clusters", c.index.clusters}, {"nprobe", c.index.nprobe}};
  j["loss"] = {{"variant", skp::to_string(c.loss.variant)},
               {"negatives", to_string(c.loss.negatives)},
               {"tau", c.loss.tau ? nlohmann::ordered_json(*c.loss.tau) : nlohmann::ordered_json(nullptr)},
               {"alpha", c.loss.alpha}};
  return j;
}

std::size_t resolve_threads(std::optional<std::size_t> flag, const PipelineConfig& config) {
  if (flag && *flag > 0) return *flag;
  if (const char* env = std::getenv("SKP_THREADS"); env) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  if (config.threads && *config.threads > 0) return *config.threads;
  return default_threads();
}

}  // namespace skp::cli
