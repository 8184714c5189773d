#include "commands.hpp"

#include <fstream>

#include "skp/corpus_io.hpp"
#include "skp/dense_retrieval.hpp"
#include "skp/error.hpp"
#include "skp/eval_metrics.hpp"
#include "skp/iam_mask.hpp"
#include "skp/linearizer.hpp"
#include "skp/losses.hpp"
#include "skp/parallel.hpp"
#include "skp/pretrain_datagen.hpp"
#include "skp/rng.hpp"

namespace skp::cli {

std::uint64_t stage_seed(const PipelineConfig& config, Stage stage) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(stage));
}

namespace {

using json = nlohmann::ordered_json;

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  fn(out);
  out.close();
  if (!out) throw Error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

const fs::path& require(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw ArgumentError(std::string("missing ") + what);
  return *p;
}

fs::path stats_path_for(fs::path corpus) {
  corpus.replace_extension();
  return corpus.string() + ".stats.json";
}

void warn(const Context& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << "skp: warning: " << msg << '\n';
}

void note(const Context& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << "skp: " << msg << '\n';
}

Manifest start_manifest(const Context& ctx, const std::string& command) {
  Manifest m(command);
  m.set_config(config_snapshot(ctx.config));
  m.set_seed("master", ctx.config.seed);
  return m;
}

void add_kb_inputs(Manifest& m, const PipelineConfig& c) {
  if (c.dump) m.add_input("dump", *c.dump);
  if (c.name_map) m.add_input("name_map", *c.name_map);
  if (c.cvt_list) m.add_input("cvt_list", *c.cvt_list);
  if (c.vocab) m.add_input("vocab", *c.vocab);
}

json parse_counts(const ParseStats& s) {
  return {{"lines", s.lines}, {"triples", s.triples}, {"malformed", s.malformed}};
}

std::vector<Triple> read_dump(const Context& ctx, Manifest& m) {
  ParseStats stats;
  auto triples = read_ntriples_file(require(ctx.config.dump, "input dump (--in or config 'dump')"),
                                    ctx.config.on_malformed, &stats);
  if (stats.malformed > 0) {
    warn(ctx, "skipped " + std::to_string(stats.malformed) + " malformed line(s)");
    for (const auto& e : stats.errors) warn(ctx, e.what());
  }
  m.set_counts("parse", parse_counts(stats));
  return triples;
}

LinearizeResult linearize_triples(const Context& ctx, std::span<const Triple> triples) {
  const PipelineConfig& c = ctx.config;
  NameMap names;
  if (c.name_map) names = load_name_map(*c.name_map);
  LinearizeConfig lc;
  lc.budget = c.budget;
  lc.tokenizer = Tokenizer::make(c.tokenizer, c.vocab);
  lc.names = c.name_map ? &names : nullptr;
  if (c.cvt_list) lc.cvt_list = load_cvt_list(*c.cvt_list);
  LinearizeResult result = linearize_kb(triples, lc);
  for (const auto& node : result.stats.degenerate_cvts)
    warn(ctx, "degenerate CVT " + node + " treated as an ordinary entity");
  return result;
}

void write_corpus(const fs::path& out, const LinearizeResult& result, Manifest& m) {
  write_file(out, [&](std::ostream& o) { write_passages(o, result.passages); });
  const fs::path stats = stats_path_for(out);
  write_json(stats, stats_to_json(result.stats));
  m.add_output(out);
  m.add_output(stats);
  m.set_counts("linearize", {{"triples_in", result.stats.triples_in},
                             {"passages_out", result.stats.passages_out},
                             {"reduction_ratio", result.stats.reduction_ratio()}});
}

struct PretrainOutput {
  BatchPlan plan;
  std::vector<std::vector<KCDPair>> kcd;  // per batch
};

PretrainOutput generate_pretrain(const Context& ctx, std::span<const Passage> corpus, const fs::path& out_dir,
                                 Manifest& m) {
  const PipelineConfig& c = ctx.config;
  const Tokenizer tokenizer = Tokenizer::make(c.tokenizer, c.vocab);
  const std::uint64_t batch_seed = stage_seed(c, Stage::batches);
  const std::uint64_t example_base = stage_seed(c, Stage::examples);
  m.set_seed("batches", batch_seed);
  m.set_seed("examples", example_base);

  PretrainOutput out;
  out.plan = plan_batches(corpus.size(), c.batch_size, batch_seed, c.sample_count.value_or(corpus.size()));
  std::vector<std::pair<std::size_t, std::size_t>> slots;  // (batch, corpus index)
  for (std::size_t b = 0; b < out.plan.batches.size(); ++b)
    for (std::size_t i : out.plan.batches[b]) slots.emplace_back(b, i);

  std::vector<std::string> km_lines(slots.size()), kcd_lines(slots.size());
  std::vector<KCDPair> pairs(slots.size());
  parallel_for(slots.size(), ctx.threads, [&](std::size_t s) {
    const auto [batch, index] = slots[s];
    const Passage& p = corpus[index];
    const std::uint64_t seed = example_seed(example_base, p.id);
    km_lines[s] = km_to_json(make_km_example(p, seed, tokenizer), batch).dump();
    pairs[s] = make_kcd_pair(p, seed, tokenizer);
    kcd_lines[s] = kcd_to_json(pairs[s], batch).dump();
  });

  auto write_lines = [](const std::vector<std::string>& lines) {
    return [&lines](std::ostream& o) {
      for (const auto& l : lines) o << l << '\n';
    };
  };
  write_file(out_dir / "km.jsonl", write_lines(km_lines));
  write_file(out_dir / "kcd.jsonl", write_lines(kcd_lines));

  json batches = json::array();
  for (const auto& b : out.plan.batches) {
    json ids = json::array();
    for (std::size_t i : b) ids.push_back(corpus[i].id);
    batches.push_back(std::move(ids));
  }
  write_json(out_dir / "batches.json", {{"batch_size", c.batch_size},
                                        {"sampled", out.plan.sampled},
                                        {"dropped", out.plan.dropped},
                                        {"batch_count", out.plan.batches.size()},
                                        {"batches", std::move(batches)}});
  for (const char* name : {"km.jsonl", "kcd.jsonl", "batches.json"}) m.add_output(out_dir / name);
  m.set_counts("pretrain", {{"examples", slots.size()}, {"batches", out.plan.batches.size()},
                            {"dropped", out.plan.dropped}});

  out.kcd.resize(out.plan.batches.size());
  for (std::size_t s = 0; s < slots.size(); ++s) out.kcd[slots[s].first].push_back(std::move(pairs[s]));
  return out;
}

std::vector<std::string> passage_texts(std::span<const Passage> corpus) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& p : corpus) texts.push_back(p.text);
  return texts;
}

std::vector<std::string> question_texts(std::span<const QARecord> gold) {
  std::vector<std::string> texts;
  for (const auto& q : gold) {
    if (q.question.empty()) throw DataError("question " + q.question_id + " has no question text to embed");
    texts.push_back(q.question);
  }
  return texts;
}

std::vector<RetrievalResult> retrieve(const Context& ctx, const EmbeddingMatrixF& corpus,
                                      const EmbeddingMatrixF& queries, const std::optional<IvfIndex>& index,
                                      std::size_t nprobe) {
  if (index) return index->search(queries, ctx.config.k, nprobe, ctx.threads);
  return search_exact(corpus, queries, ctx.config.k, ctx.threads);
}

void name_queries(std::vector<RetrievalResult>& results, std::span<const QARecord> gold) {
  if (results.size() != gold.size())
    throw DataError(std::to_string(results.size()) + " query embeddings but " + std::to_string(gold.size()) +
                    " questions");
  for (std::size_t i = 0; i < results.size(); ++i) results[i].query_id = gold[i].question_id;
}

json kcd_loss_json(const Context& ctx, const std::vector<std::vector<KCDPair>>& batches, std::uint64_t embed_seed) {
  const LossConfig& lc = ctx.config.loss;
  json per_batch = json::array();
  double sum = 0.0;
  for (const auto& batch : batches) {
    std::vector<std::string> originals, positives;
    for (const auto& p : batch) {
      originals.push_back(p.original_text);
      positives.push_back(p.positive_text);
    }
    const Eigen::MatrixXd o = stub_embed(originals, ctx.config.embed_dim, embed_seed, ctx.threads).cast<double>();
    const Eigen::MatrixXd q = stub_embed(positives, ctx.config.embed_dim, embed_seed, ctx.threads).cast<double>();
    const double l = infonce_loss(o, q, *lc.tau, lc.variant, lc.negatives);
    per_batch.push_back(l);
    sum += l;
  }
  return {{"embedder", "stub"},
          {"variant", to_string(lc.variant)},
          {"tau", *lc.tau},
          {"batches", batches.size()},
          {"l_c_mean", batches.empty() ? 0.0 : sum / static_cast<double>(batches.size())},
          {"l_c_per_batch", std::move(per_batch)}};
}

std::vector<std::size_t> cutoffs_up_to(std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t c : kReportCutoffs)
    if (c < k) out.push_back(c);
  out.push_back(k);
  return out;
}

std::vector<std::string> read_jsonl_field(const fs::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string key = !field.empty() ? field : (j.contains("text") ? "text" : "question");
      out.push_back(j.at(key).get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace

void run_linearize(const Context& ctx, const LinearizeArgs& args) {
  Manifest m = start_manifest(ctx, "linearize");
  add_kb_inputs(m, ctx.config);
  const auto triples = read_dump(ctx, m);
  const LinearizeResult result = linearize_triples(ctx, triples);
  write_corpus(args.out, result, m);
  m.write(manifest_path_for(args.out));
  note(ctx, std::to_string(result.stats.triples_in) + " triples -> " + std::to_string(result.stats.passages_out) +
                " passages");
}

void run_ablate(const Context& ctx, const AblateArgs& args) {
  Manifest m = start_manifest(ctx, "ablate");
  if (ctx.config.dump) m.add_input("dump", *ctx.config.dump);
  const auto triples = read_dump(ctx, m);
  const std::uint64_t seed = stage_seed(ctx.config, Stage::ablate);
  m.set_seed("ablate", seed);
  const auto kept = ablate_kb(triples, ctx.config.drop_fraction, seed);
  write_file(args.out, [&](std::ostream& o) { write_ntriples(o, kept); });
  m.add_output(args.out);
  m.set_counts("ablate", {{"triples_in", triples.size()}, {"kept", kept.size()}});
  m.write(manifest_path_for(args.out));
}

void run_gen_pretrain(const Context& ctx, const GenPretrainArgs& args) {
  Manifest m = start_manifest(ctx, "gen-pretrain");
  m.add_input("corpus", args.corpus);
  if (ctx.config.vocab) m.add_input("vocab", *ctx.config.vocab);
  const auto corpus = read_passages_file(args.corpus);
  generate_pretrain(ctx, corpus, args.out_dir, m);
  m.write(args.out_dir / "manifest.json");
}

void run_loss(const Context& ctx, const LossArgs& args) {
  const LossConfig& lc = ctx.config.loss;
  if (!lc.tau) throw ArgumentError("loss needs a temperature (--tau or config loss.tau)");
  Manifest m = start_manifest(ctx, "loss");
  m.add_input("originals", args.originals);
  m.add_input("positives", args.positives);
  const Eigen::MatrixXd o = load_embeddings(args.originals).cast<double>();
  const Eigen::MatrixXd p = load_embeddings(args.positives).cast<double>();
  const double l_c = infonce_loss(o, p, *lc.tau, lc.variant, lc.negatives);
  json j;
  j["n"] = o.rows();
  j["variant"] = to_string(lc.variant);
  j["tau"] = *lc.tau;
  j["l_c"] = l_c;
  if (args.mlm_probs) {
    m.add_input("mlm_probs", *args.mlm_probs);
    std::ifstream in(*args.mlm_probs);
    if (!in) throw ConfigError("cannot read " + args.mlm_probs->string());
    std::vector<double> probs;
    try {
      probs = nlohmann::json::parse(in).get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(args.mlm_probs->string() + ": expected a JSON array of probabilities (" + e.what() + ")");
    }
    const double l_mlm = mlm_loss(Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size())));
    const auto report = joint_loss(l_mlm, l_c, lc.alpha);
    j["l_mlm"] = report.l_mlm;
    j["alpha"] = report.alpha;
    j["l_joint"] = report.l_joint;
  }
  write_json(args.out, j);
  m.add_output(args.out);
  m.write(manifest_path_for(args.out));
}

void run_mask(const Context& ctx, const MaskArgs& args) {
  Manifest m = start_manifest(ctx, "mask");
  m.add_input("layout", args.layout);
  std::ifstream in(args.layout);
  if (!in) throw ConfigError("cannot read " + args.layout.string());
  nlohmann::json layout_json;
  try {
    layout_json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(args.layout.string() + ": " + e.what());
  }
  const AttentionMask mask = build_mask(layout_from_json(layout_json), {args.same_type_visible});
  if (args.format == "dense")
    write_file(args.out, [&](std::ostream& o) { o << mask.dense_text(); });
  else if (args.format == "descriptor")
    write_json(args.out, mask.descriptor());
  else
    throw ArgumentError("--format must be 'dense' or 'descriptor'");
  m.add_output(args.out);
  m.set_counts("mask", {{"n", mask.size()}, {"zeros", mask.zero_count()}});
  m.write(manifest_path_for(args.out));
}

void run_embed_stub(const Context& ctx, const EmbedArgs& args) {
  Manifest m = start_manifest(ctx, "embed-stub");
  m.add_input("texts", args.in);
  const std::uint64_t seed = stage_seed(ctx.config, Stage::embed);
  m.set_seed("embed", seed);
  const auto texts = read_jsonl_field(args.in, args.field);
  if (texts.empty()) throw DataError(args.in.string() + " has no records");
  const EmbeddingMatrixF e = stub_embed(texts, ctx.config.embed_dim, seed, ctx.threads);
  if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
  save_embeddings(e, args.out);
  m.add_output(args.out);
  m.write(manifest_path_for(args.out));
}

void run_build_index(const Context& ctx, const BuildIndexArgs& args) {
  Manifest m = start_manifest(ctx, "build-index");
  m.add_input("corpus_embeddings", args.corpus_emb);
  const std::uint64_t seed = stage_seed(ctx.config, Stage::index);
  m.set_seed("index", seed);
  const auto corpus = load_embeddings(args.corpus_emb);
  const IvfIndex index = IvfIndex::build(corpus, ctx.config.index.clusters, seed, ctx.threads);
  if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
  index.save(args.out);
  m.add_output(args.out);
  m.write(manifest_path_for(args.out));
}

void run_search(const Context& ctx, const SearchArgs& args) {
  Manifest m = start_manifest(ctx, "search");
  m.add_input("corpus_embeddings", args.corpus_emb);
  m.add_input("query_embeddings", args.queries_emb);
  auto corpus = load_embeddings(args.corpus_emb);
  const auto queries = load_embeddings(args.queries_emb);
  std::optional<IvfIndex> index;
  if (args.index) {
    m.add_input("index", *args.index);
    index = IvfIndex::load(*args.index, corpus);
  }
  auto results = retrieve(ctx, corpus, queries, index, args.nprobe ? args.nprobe : ctx.config.index.nprobe);
  if (args.query_ids) {
    m.add_input("query_ids", *args.query_ids);
    name_queries(results, read_gold_file(*args.query_ids));
  }
  write_file(args.out, [&](std::ostream& o) { write_results(o, results); });
  m.add_output(args.out);
  m.write(manifest_path_for(args.out));
}

void run_eval(const Context& ctx, const EvalArgs& args) {
  const PipelineConfig& c = ctx.config;
  Manifest m = start_manifest(ctx, "eval");
  m.add_input("results", args.results);
  m.add_input("corpus", args.corpus);
  const fs::path& gold_path = require(c.questions, "gold questions (--gold or config 'questions')");
  m.add_input("gold", gold_path);
  std::ifstream rin(args.results);
  if (!rin) throw ConfigError("cannot read " + args.results.string());
  const auto results = read_results(rin);
  const auto corpus = read_passages_file(args.corpus);
  const auto gold = read_gold_file(gold_path);
  std::optional<Predictions> preds;
  if (c.predictions) {
    m.add_input("predictions", *c.predictions);
    preds = read_predictions_file(*c.predictions);
  }
  const std::vector<std::size_t> cutoffs =
      args.cutoffs.empty() ? std::vector<std::size_t>(std::begin(kReportCutoffs), std::end(kReportCutoffs))
                           : args.cutoffs;
  const MetricReport report = evaluate(results, corpus, gold, cutoffs, preds ? &*preds : nullptr);
  if (report.missing_predictions > 0)
    warn(ctx, std::to_string(report.missing_predictions) + " question(s) have no prediction; counted as misses");
  write_json(args.out, report_to_json(report));
  m.add_output(args.out);
  m.write(manifest_path_for(args.out));
}

void run_pipeline(const Context& ctx, const PipelineArgs& args) {
  const PipelineConfig& c = ctx.config;
  const fs::path& dir = args.out_dir;
  fs::create_directories(dir);
  Manifest m = start_manifest(ctx, "pipeline");
  add_kb_inputs(m, c);
  if (c.questions) m.add_input("questions", *c.questions);
  if (c.predictions) m.add_input("predictions", *c.predictions);

  auto triples = read_dump(ctx, m);
  if (c.drop_fraction > 0.0) {
    const std::uint64_t seed = stage_seed(c, Stage::ablate);
    m.set_seed("ablate", seed);
    const std::size_t before = triples.size();
    triples = ablate_kb(triples, c.drop_fraction, seed);
    m.set_counts("ablate", {{"triples_in", before}, {"kept", triples.size()}});
  }
  const LinearizeResult lin = linearize_triples(ctx, triples);
  write_corpus(dir / "corpus.jsonl", lin, m);
  const std::vector<Passage>& corpus = lin.passages;
  if (corpus.empty()) throw DataError("linearization produced no passages");

  const PretrainOutput pre = generate_pretrain(ctx, corpus, dir, m);

  const std::uint64_t embed_seed = stage_seed(c, Stage::embed);
  m.set_seed("embed", embed_seed);
  const EmbeddingMatrixF corpus_emb = stub_embed(passage_texts(corpus), c.embed_dim, embed_seed, ctx.threads);
  save_embeddings(corpus_emb, dir / "corpus.skpe");
  m.add_output(dir / "corpus.skpe");

  if (c.loss.tau) {
    write_json(dir / "kcd_loss.json", kcd_loss_json(ctx, pre.kcd, embed_seed));
    m.add_output(dir / "kcd_loss.json");
  } else {
    warn(ctx, "no loss.tau configured; KCD loss stage skipped");
  }

  if (c.questions) {
    const auto gold = read_gold_file(*c.questions);
    const EmbeddingMatrixF question_emb = stub_embed(question_texts(gold), c.embed_dim, embed_seed, ctx.threads);
    save_embeddings(question_emb, dir / "questions.skpe");
    m.add_output(dir / "questions.skpe");

    std::optional<IvfIndex> index;
    if (c.index.type == "ivf") {
      const std::uint64_t seed = stage_seed(c, Stage::index);
      m.set_seed("index", seed);
      index = IvfIndex::build(corpus_emb, c.index.clusters, seed, ctx.threads);
      index->save(dir / "index.skpi");
      m.add_output(dir / "index.skpi");
    }
    auto results = retrieve(ctx, corpus_emb, question_emb, index, c.index.nprobe);
    name_queries(results, gold);
    write_file(dir / "results.jsonl", [&](std::ostream& o) { write_results(o, results); });
    m.add_output(dir / "results.jsonl");

    std::optional<Predictions> preds;
    if (c.predictions) preds = read_predictions_file(*c.predictions);
    const MetricReport report = evaluate(results, corpus, gold, cutoffs_up_to(c.k), preds ? &*preds : nullptr);
    write_json(dir / "metrics.json", report_to_json(report));
    m.add_output(dir / "metrics.json");
  } else {
    warn(ctx, "no questions configured; retrieval and evaluation skipped");
  }
  m.write(dir / "manifest.json");
  note(ctx, "pipeline wrote " + dir.string());
}

}  // namespace skp::cli
