#include <CLI11.hpp>

#include "commands.hpp"
#include "skp/error.hpp"

namespace skp::cli {

namespace {

// Flag values that override the JSON config when given.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::size_t> threads;
  std::optional<std::string> dump, names, cvt_list, vocab, questions, predictions;
  std::optional<std::size_t> budget;
  std::optional<std::string> tokenizer, on_malformed;
  std::optional<std::uint64_t> seed;
  std::optional<double> drop_fraction;
  std::optional<std::size_t> batch_size, sample_count, embed_dim, k;
  std::optional<std::string> index_type;
  std::optional<std::size_t> clusters, nprobe;
  std::optional<std::string> variant, negatives;
  std::optional<double> tau, alpha;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  app->add_option("--threads", o.threads, "Worker threads (default: SKP_THREADS, then config, then all cores)");
}

void add_seed(CLI::App* app, Overrides& o) {
  app->add_option("--seed", o.seed, "Master seed; stage seeds are derived from it (default 0)");
}

void add_tokenizer(CLI::App* app, Overrides& o) {
  app->add_option("--tokenizer", o.tokenizer, "Budget/masking tokenizer: whitespace (default) or wordpiece");
  app->add_option("--vocab", o.vocab, "WordPiece vocab file, one token per line");
}

void add_kb(CLI::App* app, Overrides& o) {
  app->add_option("--names", o.names, "TSV id<TAB>name map used for surface forms");
  app->add_option("--cvt-list", o.cvt_list, "CVT node ids, one per line (replaces the structural heuristic)");
  app->add_option("--budget", o.budget, "Passage token budget (default 100)");
  app->add_option("--on-malformed", o.on_malformed, "Malformed N-Triples lines: skip (default) or abort");
  add_tokenizer(app, o);
}

void add_loss(CLI::App* app, Overrides& o) {
  app->add_option("--tau", o.tau, "InfoNCE temperature (required for the loss)");
  app->add_option("--variant", o.variant, "InfoNCE denominator: paper (negatives only, default) or standard");
  app->add_option("--negatives", o.negatives, "In-batch negatives: positives (default) or originals");
}

template <typename T, typename U>
void set_if(const std::optional<T>& v, U& dst) {
  if (v) dst = *v;
}

PipelineConfig build_config(const Overrides& o) {
  PipelineConfig c = o.config ? load_config(*o.config) : PipelineConfig{};
  auto path = [](const std::optional<std::string>& s, std::optional<fs::path>& dst) {
    if (s) dst = fs::path(*s);
  };
  path(o.dump, c.dump);
  path(o.names, c.name_map);
  path(o.cvt_list, c.cvt_list);
  path(o.vocab, c.vocab);
  path(o.questions, c.questions);
  path(o.predictions, c.predictions);
  set_if(o.budget, c.budget);
  if (o.tokenizer) c.tokenizer = parse_tokenizer_mode(*o.tokenizer);
  if (o.on_malformed) {
    if (*o.on_malformed == "skip")
      c.on_malformed = MalformedPolicy::skip;
    else if (*o.on_malformed == "abort")
      c.on_malformed = MalformedPolicy::abort;
    else
      throw ArgumentError("--on-malformed must be 'skip' or 'abort'");
  }
  set_if(o.seed, c.seed);
  set_if(o.drop_fraction, c.drop_fraction);
  set_if(o.batch_size, c.batch_size);
  if (o.sample_count) c.sample_count = *o.sample_count;
  set_if(o.embed_dim, c.embed_dim);
  set_if(o.k, c.k);
  set_if(o.index_type, c.index.type);
  set_if(o.clusters, c.index.clusters);
  set_if(o.nprobe, c.index.nprobe);
  if (o.variant) c.loss.variant = parse_infonce_variant(*o.variant);
  if (o.negatives) {
    if (*o.negatives == "positives")
      c.loss.negatives = NegativeSource::positives;
    else if (*o.negatives == "originals")
      c.loss.negatives = NegativeSource::originals;
    else
      throw ArgumentError("--negatives must be 'positives' or 'originals'");
  }
  if (o.tau) c.loss.tau = *o.tau;
  set_if(o.alpha, c.loss.alpha);
  set_if(o.threads, c.threads);
  validate_config(c);
  return c;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"skp: knowledge-base linearization and KBQA data preparation", "skp"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Overrides o;
  std::string format = "descriptor";
  bool same_type_visible = false;
  std::string out_path, out_dir, in_path, corpus, originals, positives, layout, field;
  std::optional<std::string> mlm_probs, index_path, query_ids;
  std::vector<std::size_t> cutoffs;
  std::function<void(const Context&)> action;

  auto* lin = app.add_subcommand("linearize", "Parse an N-Triples dump and write the passage corpus + stats");
  add_common(lin, o);
  add_kb(lin, o);
  lin->add_option("--in", o.dump, "N-Triples dump (gzip detected)");
  lin->add_option("--out", out_path, "Corpus JSONL; stats go to <name>.stats.json")->required();
  lin->callback([&] { action = [&](const Context& ctx) { run_linearize(ctx, {out_path}); }; });

  auto* abl = app.add_subcommand("ablate", "Keep each triple independently with probability 1 - fraction");
  add_common(abl, o);
  add_seed(abl, o);
  abl->add_option("--in", o.dump, "N-Triples dump");
  abl->add_option("--out", out_path, "Surviving triples as N-Triples")->required();
  abl->add_option("--fraction", o.drop_fraction, "Drop fraction in [0, 1]");
  abl->add_option("--on-malformed", o.on_malformed, "skip (default) or abort");
  abl->callback([&] { action = [&](const Context& ctx) { run_ablate(ctx, {out_path}); }; });

  auto* gen = app.add_subcommand("gen-pretrain", "Write KM examples, KCD pairs and the batch plan");
  add_common(gen, o);
  add_seed(gen, o);
  add_tokenizer(gen, o);
  gen->add_option("--corpus", corpus, "Corpus JSONL from linearize")->required()->check(CLI::ExistingFile);
  gen->add_option("--out-dir", out_dir, "Directory for km.jsonl, kcd.jsonl, batches.json")->required();
  gen->add_option("--batch-size", o.batch_size, "Examples per batch, at least 2 (default 8)");
  gen->add_option("--samples", o.sample_count, "Passages to sample (default: all)");
  gen->callback([&] { action = [&](const Context& ctx) { run_gen_pretrain(ctx, {corpus, out_dir}); }; });

  auto* loss = app.add_subcommand("loss", "InfoNCE (and optionally MLM/joint) loss over embedding files");
  add_common(loss, o);
  add_loss(loss, o);
  loss->add_option("--originals", originals, "Original representations (.skpe)")->required()->check(CLI::ExistingFile);
  loss->add_option("--positives", positives, "Positive representations (.skpe)")->required()->check(CLI::ExistingFile);
  loss->add_option("--mlm-probs", mlm_probs, "JSON array of masked-token probabilities");
  loss->add_option("--alpha", o.alpha, "Joint-loss weight on the MLM term (default 0.6)");
  loss->add_option("--out", out_path, "Loss report JSON")->required();
  loss->callback([&] {
    action = [&](const Context& ctx) {
      std::optional<fs::path> probs;
      if (mlm_probs) probs = fs::path(*mlm_probs);
      run_loss(ctx, {originals, positives, probs, out_path});
    };
  });

  auto* mask = app.add_subcommand("mask", "Build the interval attention mask for a segment layout");
  add_common(mask, o);
  mask->add_option("--layout", layout, "JSON {question_len, passage_lens[, passage_types]}")
      ->required()
      ->check(CLI::ExistingFile);
  mask->add_option("--format", format, "descriptor (run-length JSON, default) or dense (0/1 rows)")
      ->check(CLI::IsMember({"descriptor", "dense"}));
  mask->add_flag("--same-type-visible", same_type_visible, "Passages with equal type labels see each other");
  mask->add_option("--out", out_path, "Output file")->required();
  mask->callback([&] {
    action = [&](const Context& ctx) { run_mask(ctx, {layout, out_path, format, same_type_visible}); };
  });

  auto* emb = app.add_subcommand("embed-stub", "Deterministic hashed embeddings for JSONL texts");
  add_common(emb, o);
  add_seed(emb, o);
  emb->add_option("--in", in_path, "JSONL records")->required()->check(CLI::ExistingFile);
  emb->add_option("--field", field, "Record field to embed (default: text, else question)");
  emb->add_option("--dim", o.embed_dim, "Embedding dimension (default 64)");
  emb->add_option("--out", out_path, "Embedding file (.skpe)")->required();
  emb->callback([&] { action = [&](const Context& ctx) { run_embed_stub(ctx, {in_path, out_path, field}); }; });

  auto* bix = app.add_subcommand("build-index", "Build an IVF index over corpus embeddings");
  add_common(bix, o);
  add_seed(bix, o);
  bix->add_option("--embeddings", in_path, "Corpus embeddings (.skpe)")->required()->check(CLI::ExistingFile);
  bix->add_option("--clusters", o.clusters, "Number of k-means cells (default 16)");
  bix->add_option("--out", out_path, "Index file (.skpi)")->required();
  bix->callback([&] { action = [&](const Context& ctx) { run_build_index(ctx, {in_path, out_path}); }; });

  auto* srch = app.add_subcommand("search", "Top-k dot-product search, exact or through an IVF index");
  add_common(srch, o);
  srch->add_option("--corpus-emb", corpus, "Corpus embeddings (.skpe)")->required()->check(CLI::ExistingFile);
  srch->add_option("--queries-emb", in_path, "Query embeddings (.skpe)")->required()->check(CLI::ExistingFile);
  srch->add_option("--index", index_path, "IVF index (.skpi); exact search when absent");
  srch->add_option("--query-ids", query_ids, "Gold JSONL whose question_ids name the query rows");
  srch->add_option("--k", o.k, "Hits per query (default 100)");
  srch->add_option("--nprobe", o.nprobe, "Cells probed by IVF search");
  srch->add_option("--out", out_path, "Results JSONL {query_id, hits:[[id, score], ...]}")->required();
  srch->callback([&] {
    action = [&](const Context& ctx) {
      SearchArgs a{corpus, in_path, std::nullopt, std::nullopt, 0, out_path};
      if (index_path) a.index = fs::path(*index_path);
      if (query_ids) a.query_ids = fs::path(*query_ids);
      run_search(ctx, a);
    };
  });

  auto* ev = app.add_subcommand("eval", "Retrieval Hits@k and answer Hits@1");
  add_common(ev, o);
  ev->add_option("--results", in_path, "Results JSONL from search")->required()->check(CLI::ExistingFile);
  ev->add_option("--corpus", corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  ev->add_option("--gold", o.questions, "Gold JSONL {question_id, answers}");
  ev->add_option("--predictions", o.predictions, "Predictions JSONL {question_id, answer}");
  ev->add_option("--cutoffs", cutoffs, "Hits@k cutoffs (default 1 10 20 50 100)");
  ev->add_option("--out", out_path, "Metric report JSON")->required();
  ev->callback([&] { action = [&](const Context& ctx) { run_eval(ctx, {in_path, corpus, cutoffs, out_path}); }; });

  auto* pipe = app.add_subcommand("pipeline", "End to end: linearize, pretrain data, stub embed, search, eval");
  add_common(pipe, o);
  add_seed(pipe, o);
  add_kb(pipe, o);
  add_loss(pipe, o);
  pipe->add_option("--dump", o.dump, "N-Triples dump");
  pipe->add_option("--questions", o.questions, "Gold JSONL {question_id, question, answers}");
  pipe->add_option("--predictions", o.predictions, "Predictions JSONL for answer Hits@1");
  pipe->add_option("--out-dir", out_dir, "Output directory (default: config output_dir)");
  pipe->add_option("--drop-fraction", o.drop_fraction, "Ablate this fraction of triples first");
  pipe->add_option("--batch-size", o.batch_size, "Pretraining batch size (default 8)");
  pipe->add_option("--samples", o.sample_count, "Passages sampled for pretraining (default: all)");
  pipe->add_option("--dim", o.embed_dim, "Stub embedding dimension (default 64)");
  pipe->add_option("--k", o.k, "Hits per question (default 100)");
  pipe->add_option("--index-type", o.index_type, "exact (default) or ivf");
  pipe->add_option("--clusters", o.clusters, "IVF cells");
  pipe->add_option("--nprobe", o.nprobe, "IVF cells probed");
  pipe->callback([&] {
    action = [&](const Context& ctx) {
      fs::path dir = out_dir;
      if (dir.empty()) {
        if (!ctx.config.output_dir) throw ArgumentError("pipeline needs --out-dir or config 'output_dir'");
        dir = *ctx.config.output_dir;
      }
      run_pipeline(ctx, {dir});
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx;
    ctx.config = build_config(o);
    ctx.threads = resolve_threads(o.threads, ctx.config);
    ctx.log = &err;
    action(ctx);
    return kExitOk;
  } catch (const ArgumentError& e) {
    err << "skp: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "skp: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace skp::cli
