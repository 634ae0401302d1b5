// ledger: command-line entry point for the detection pipeline.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ledger/ablation.hpp"
#include "ledger/checkpoint.hpp"
#include "ledger/http_server.hpp"
#include "ledger/ingestion.hpp"
#include "ledger/synthgen.hpp"
#include "ledger/triage.hpp"

#ifndef LEDGER_VERSION
#define LEDGER_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ledger;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
  std::string video_policy = "noise";
};

VideoPolicy video_policy(const Globals& g) {
  return g.video_policy == "zero" ? VideoPolicy::Zero : VideoPolicy::Noise;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void log_config(const std::string& command, const json& resolved) {
  spdlog::info("{} config: {}", command, resolved.dump());
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string config, out;
  std::optional<std::size_t> n_posts;
  std::optional<double> video_fraction;
};

void run_synth(const Globals& g, const SynthArgs& a) {
  SynthConfig cfg;
  if (!a.config.empty()) cfg = synth_config_from_json(read_json_file(a.config));
  if (g.seed) cfg.seed = *g.seed;
  if (a.n_posts) cfg.n_posts = *a.n_posts;
  if (a.video_fraction) cfg.video_fraction = *a.video_fraction;
  cfg.validate();
  log_config("synth", to_json(cfg));
  const auto m = generate_corpus(cfg);
  std::size_t positives = 0;
  for (const auto& r : m.records) positives += is_tax_evasion_positive(r) ? 1 : 0;
  write_synth_corpus(a.out, m);
  spdlog::info("wrote {} posts ({} positive) to {}", m.records.size(), positives, a.out);
}

// --- ingest --------------------------------------------------------------

struct IngestArgs {
  std::string in, out, report;
  bool clean = false;
};

void run_ingest(const Globals&, const IngestArgs& a) {
  log_config("ingest", {{"in", a.in}, {"out", a.out}, {"clean", a.clean}, {"report", a.report}});
  auto m = load_corpus(a.in);
  const std::size_t loaded = m.records.size();
  CleanReport report;
  if (a.clean) {
    auto r = clean_corpus(m);
    m = std::move(r.manifest);
    report = r.report;
  }
  const fs::path out = a.out.empty() ? fs::path(a.in).replace_extension(".clean.jsonl") : fs::path(a.out);
  write_corpus(out, m.records);
  json j{{"input", loaded},
         {"output", m.records.size()},
         {"removed_unavailable", report.removed_unavailable},
         {"removed_duplicates", report.removed_duplicates}};
  if (!a.report.empty()) write_json_file(a.report, j);
  spdlog::info("ingested {} records, kept {} -> {}", loaded, m.records.size(), out.string());
}

// --- split ---------------------------------------------------------------

struct SplitArgs {
  std::string in, out_dir;
  std::size_t test = 400;
  double val = 0.2;
  bool stratify = false;
};

void run_split(const Globals& g, const SplitArgs& a) {
  const std::uint64_t seed = g.seed.value_or(0);
  log_config("split", {{"in", a.in}, {"out_dir", a.out_dir}, {"test", a.test}, {"val", a.val}, {"seed", seed},
                       {"stratify", a.stratify}});
  const auto m = load_corpus(a.in);
  const auto s = split_corpus(m, a.test, a.val, seed, a.stratify);
  write_split(a.out_dir, s);
  spdlog::info("split {} posts: train {}, validation {}, test {}", m.records.size(), s.train.size(),
               s.validation.size(), s.test.size());
}

// --- featurize -----------------------------------------------------------

struct FeaturizeArgs {
  std::vector<std::string> in;
  std::string out_dir;
};

void run_featurize(const Globals& g, const FeaturizeArgs& a) {
  log_config("featurize", {{"in", a.in}, {"out_dir", a.out_dir}, {"video_policy", g.video_policy}});
  fs::create_directories(a.out_dir);
  EmbeddingWriter hashtags(fs::path(a.out_dir) / kHashtagSidecar, kTextDim);
  EmbeddingWriter comments(fs::path(a.out_dir) / kCommentSidecar, kTextDim);
  EmbeddingWriter images(fs::path(a.out_dir) / kImageSidecar, kImageDim);
  std::size_t n = 0;
  for (const auto& path : a.in) {
    for (const auto& p : load_posts(path)) {
      hashtags.add(p.post_id, embed_hashtags(p).values);
      comments.add(p.post_id, embed_comments(p).values);
      images.add(p.post_id, featurize_media(p.media, video_policy(g)).values);
      ++n;
    }
  }
  spdlog::info("wrote embeddings for {} posts to {}", n, a.out_dir);
}

// --- train / eval / ablate -----------------------------------------------

struct FeatureArgs {
  std::string features = "baseline";
  std::string sidecar_dir;
};

Featurizer make_featurizer(const Globals& g, const FeatureArgs& f, const fs::path& fallback_dir) {
  FeaturizerOptions o;
  o.video_policy = video_policy(g);
  if (f.features == "sidecar") {
    o.source = FeatureSource::Sidecar;
    o.sidecar_dir = f.sidecar_dir.empty() ? fallback_dir : fs::path(f.sidecar_dir);
  }
  return Featurizer(o);
}

struct TrainFlags {
  std::string config;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> learning_rate, dropout, threshold, w_neg, w_pos;
};

FusionConfig resolve_fusion_config(const Globals& g, const TrainFlags& t) {
  FusionConfig c;
  if (!t.config.empty()) c = fusion_config_from_json(read_json_file(t.config));
  if (g.seed) c.seed = *g.seed;
  if (t.epochs) c.epochs = *t.epochs;
  if (t.batch_size) c.batch_size = *t.batch_size;
  if (t.learning_rate) c.adam.learning_rate = *t.learning_rate;
  if (t.dropout) c.dropout_rate = *t.dropout;
  if (t.threshold) c.threshold = *t.threshold;
  if (t.w_neg) c.class_weights.negative = *t.w_neg;
  if (t.w_pos) c.class_weights.positive = *t.w_pos;
  c.validate();
  return c;
}

struct TrainArgs {
  std::string splits, out, report;
  FeatureArgs features;
  TrainFlags flags;
};

void run_train(const Globals& g, const TrainArgs& a) {
  const auto cfg = resolve_fusion_config(g, a.flags);
  json resolved{{"splits", a.splits}, {"features", a.features.features}, {"out", a.out},
                {"video_policy", g.video_policy}, {"fusion", to_json(cfg)}};
  log_config("train", resolved);
  const auto split = read_split(a.splits);
  const auto f = make_featurizer(g, a.features, a.splits);
  const auto train_set = project(featurize(f, split.train), cfg.dims);
  const auto val_set = project(featurize(f, split.validation), cfg.dims);
  auto result = train(train_set, val_set, cfg);
  checkpoint::save_model(a.out, FusionModel{cfg, std::move(result.params)});
  if (!a.report.empty()) write_json_file(a.report, to_json(result.report));
  if (!result.report.epochs.empty()) {
    const auto& last = result.report.epochs.back();
    spdlog::info("epoch {}: train loss {:.4f}, validation loss {:.4f}, validation F1 {:.4f}", last.epoch,
                 last.train_loss, last.val_loss, last.val_f1);
  }
  spdlog::info("saved model to {}", a.out);
}

struct EvalArgs {
  std::string model, test, report, roc;
  FeatureArgs features;
  std::optional<double> threshold;
};

void run_eval(const Globals& g, const EvalArgs& a) {
  const auto model = checkpoint::load_model(a.model);
  const double threshold = a.threshold.value_or(model.config.threshold);
  log_config("eval", {{"model", a.model}, {"test", a.test}, {"report", a.report}, {"roc", a.roc},
                      {"features", a.features.features}, {"threshold", threshold}, {"video_policy", g.video_policy}});
  const auto test = load_corpus(a.test);
  const auto f = make_featurizer(g, a.features, fs::path(a.test).parent_path());
  const auto samples = project(featurize(f, test.records), model.config.dims);
  const auto report = evaluate(score_samples(model.params, samples), threshold);
  if (!a.report.empty()) write_json_file(a.report, to_json(report));
  if (!a.roc.empty()) {
    std::ofstream out(a.roc, std::ios::trunc);
    if (!out) throw Error("cannot write " + a.roc);
    write_roc_csv(out, report.roc_points);
  }
  spdlog::info("precision {:.4f} recall {:.4f} F1 {:.4f} AUC {:.4f}", report.pr.precision, report.pr.recall,
               report.pr.f1, report.auc);
}

struct AblateArgs {
  std::string splits, out;
  FeatureArgs features;
  TrainFlags flags;
};

void run_ablate(const Globals& g, const AblateArgs& a) {
  const auto cfg = resolve_fusion_config(g, a.flags);
  log_config("ablate", {{"splits", a.splits}, {"out", a.out}, {"features", a.features.features},
                        {"video_policy", g.video_policy}, {"fusion", to_json(cfg)}});
  const auto split = read_split(a.splits);
  if (split.test.empty()) throw EmptySplit("test split is empty");
  const auto f = make_featurizer(g, a.features, a.splits);
  const auto rows = run_ablation(featurize_split(f, split), cfg);
  write_json_file(a.out, ablation_to_json(rows, cfg));
  for (const auto& r : rows) {
    spdlog::info("{:<12} P {:.3f} R {:.3f} F1 {:.3f} AUC {:.3f}", r.name, r.test.pr.precision, r.test.pr.recall,
                 r.test.pr.f1, r.test.auc);
  }
}

// --- rank / serve --------------------------------------------------------

struct RankArgs {
  std::string model, in, out;
  FeatureArgs features;
};

void run_rank(const Globals& g, const RankArgs& a) {
  log_config("rank", {{"model", a.model}, {"in", a.in}, {"out", a.out}, {"features", a.features.features},
                      {"video_policy", g.video_policy}});
  const auto model = checkpoint::load_model(a.model);
  const auto f = make_featurizer(g, a.features, fs::path(a.in).parent_path());
  const auto queue = build_queue(model, f, load_posts(a.in));
  write_queue(a.out, queue);
  std::size_t flagged = 0;
  for (const auto& e : queue) flagged += e.flag ? 1 : 0;
  spdlog::info("ranked {} posts ({} flagged) -> {}", queue.size(), flagged, a.out);
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string queue, model, data_dir;
};

void run_serve(const Globals& g, const ServeArgs& a) {
  service::Options o;
  if (!a.data_dir.empty()) o.data_dir = a.data_dir;
  if (!a.queue.empty()) o.queue_path = a.queue;
  if (!a.model.empty()) o.model_path = a.model;
  o.video_policy = video_policy(g);
  o.apply_env();
  log_config("serve", {{"host", a.host}, {"port", a.port}, {"data_dir", o.data_dir.string()},
                       {"queue", o.resolved_queue().string()}, {"model", o.model_path.string()},
                       {"auth", !o.token.empty()}, {"video_policy", g.video_policy}});
  if (o.token.empty()) spdlog::warn("LEDGER_TOKEN is not set; the API is unauthenticated");

  // Signals are taken synchronously by a watcher thread that stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::State state(o);
  httplib::Server server;
  service::mount(server, state);
  const int port = a.port == 0 ? server.bind_to_any_port(a.host) : (server.bind_to_port(a.host, a.port) ? a.port : -1);
  if (port < 0) throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    server.stop();
  });
  watcher.detach();
  std::printf("listening on http://%s:%d\n", a.host.c_str(), port);
  std::fflush(stdout);
  server.listen_after_bind();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ledger: multi-modal detection of hidden-economy selling posts"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string("ledger ") + LEDGER_VERSION + " (" + __DATE__ + ")");

  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides config files)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_option("--video-policy", g.video_policy, "Image features for video posts: noise|zero")
      ->check(CLI::IsMember({"noise", "zero"}));

  std::function<void()> action;
  auto features = [](CLI::App* sub, FeatureArgs& f) {
    sub->add_option("--features", f.features, "baseline|sidecar")->check(CLI::IsMember({"baseline", "sidecar"}));
    sub->add_option("--sidecar-dir", f.sidecar_dir, "Directory holding hashtags.emb, comments.emb, images.emb");
  };
  auto train_flags = [](CLI::App* sub, TrainFlags& t) {
    sub->add_option("--config", t.config, "Fusion config JSON");
    sub->add_option("--epochs", t.epochs);
    sub->add_option("--batch-size", t.batch_size);
    sub->add_option("--lr", t.learning_rate);
    sub->add_option("--dropout", t.dropout);
    sub->add_option("--threshold", t.threshold);
    sub->add_option("--w-neg", t.w_neg, "Negative class weight");
    sub->add_option("--w-pos", t.w_pos, "Positive class weight");
  };

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  s->add_option("--config", synth.config, "Synth config JSON");
  s->add_option("--out", synth.out, "Output corpus JSONL")->required();
  s->add_option("--n-posts", synth.n_posts);
  s->add_option("--video-fraction", synth.video_fraction);
  s->callback([&] { action = [&] { run_synth(g, synth); }; });

  IngestArgs ingest;
  auto* in = app.add_subcommand("ingest", "Validate a labeled corpus and optionally clean it");
  in->add_option("--in", ingest.in)->required();
  in->add_option("--out", ingest.out, "Output JSONL (default <in>.clean.jsonl)");
  in->add_flag("--clean", ingest.clean, "Drop unavailable posts and duplicate ids");
  in->add_option("--report", ingest.report, "Cleaning report JSON");
  in->callback([&] { action = [&] { run_ingest(g, ingest); }; });

  SplitArgs split;
  auto* sp = app.add_subcommand("split", "Random test/validation/train split");
  sp->add_option("--in", split.in)->required();
  sp->add_option("--test", split.test, "Test posts");
  sp->add_option("--val", split.val, "Validation fraction of the remainder");
  sp->add_option("--out-dir", split.out_dir)->required();
  sp->add_flag("--stratify", split.stratify, "Keep the class ratio in every part");
  sp->callback([&] { action = [&] { run_split(g, split); }; });

  FeaturizeArgs feat;
  auto* fe = app.add_subcommand("featurize", "Write baseline embeddings as sidecar files");
  fe->add_option("--in", feat.in, "Corpus JSONL files")->required();
  fe->add_option("--out-dir", feat.out_dir)->required();
  fe->callback([&] { action = [&] { run_featurize(g, feat); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the fusion head");
  t->add_option("--splits", tr.splits, "Directory with train/validation JSONL")->required();
  t->add_option("--out", tr.out, "Model checkpoint path")->required();
  t->add_option("--report", tr.report, "Per-epoch training report JSON");
  features(t, tr.features);
  train_flags(t, tr.flags);
  t->callback([&] { action = [&] { run_train(g, tr); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model on a labeled split");
  e->add_option("--model", ev.model)->required();
  e->add_option("--test", ev.test)->required();
  e->add_option("--report", ev.report, "Metrics JSON");
  e->add_option("--roc", ev.roc, "ROC curve CSV");
  e->add_option("--threshold", ev.threshold);
  features(e, ev.features);
  e->callback([&] { action = [&] { run_eval(g, ev); }; });

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Train and compare single-modality and fused models");
  a->add_option("--splits", ab.splits)->required();
  a->add_option("--out", ab.out)->required();
  features(a, ab.features);
  train_flags(a, ab.flags);
  a->callback([&] { action = [&] { run_ablate(g, ab); }; });

  RankArgs rk;
  auto* r = app.add_subcommand("rank", "Score unlabeled posts into a review queue");
  r->add_option("--model", rk.model)->required();
  r->add_option("--in", rk.in)->required();
  r->add_option("--out", rk.out)->required();
  features(r, rk.features);
  r->callback([&] { action = [&] { run_rank(g, rk); }; });

  ServeArgs sv;
  auto* srv = app.add_subcommand("serve", "Run the review HTTP service");
  srv->add_option("--host", sv.host);
  srv->add_option("--port", sv.port, "0 picks a free port");
  srv->add_option("--queue", sv.queue);
  srv->add_option("--model", sv.model);
  srv->add_option("--data-dir", sv.data_dir, "Holds verdicts.jsonl (default $LEDGER_DATA_DIR or .)");
  srv->callback([&] { action = [&] { run_serve(g, sv); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 1;
  }

  auto logger = spdlog::stderr_color_mt("ledger");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  try {
    action();
    return 0;
  } catch (const ValidationError& err) {
    spdlog::error("{}", err.what());
    return 1;
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return 2;
  }
}
