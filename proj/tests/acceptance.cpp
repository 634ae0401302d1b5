// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance <name>     run one criterion
//
// Exit status is 0 only when every selected criterion passes.

#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ledger/ablation.hpp"
#include "ledger/fusion.hpp"
#include "ledger/ingestion.hpp"
#include "ledger/metrics.hpp"
#include "ledger/rng.hpp"
#include "ledger/synthgen.hpp"
#include "ledger/triage.hpp"
#include "support.hpp"

using namespace ledger;
using testing_support::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- arithmetic anchors --------------------------------------------------

Outcome metric_formula_anchor() {
  struct Row {
    const char* name;
    double p, r, f1;
  };
  const Row rows[] = {{"hashtags", 0.444, 0.890, 0.593},
                      {"comments", 0.656, 0.855, 0.742},
                      {"images", 0.756, 0.645, 0.696},
                      {"multi-modal", 0.722, 0.807, 0.762}};
  bool ok = true;
  std::string detail;
  for (const auto& row : rows) {
    const double f1 = f1_score(row.p, row.r);
    ok = ok && std::abs(f1 - row.f1) <= 0.001;
    detail += fmt("%s %.4f (want %.3f) ", row.name, f1, row.f1);
  }
  return {ok, detail};
}

Outcome efficiency_anchor() {
  const auto r = efficiency_report(0.722, 464.0 / 2081.0, 100);
  const bool ok = r.expected_ranked >= 72.1 && r.expected_ranked <= 72.3 && r.gain >= 3.2 && r.gain <= 3.3;
  return {ok, fmt("expected_random %.2f expected_ranked %.2f gain %.3f", r.expected_random, r.expected_ranked,
                  r.gain)};
}

Outcome pipeline_count_anchor() {
  const auto r = clean_corpus(make_cleaning_manifest(3000, 711, 148, 2019));
  const bool ok = r.manifest.records.size() == 2081 && r.report == CleanReport{711, 148};
  return {ok, fmt("kept %zu, removed unavailable %zu, duplicates %zu (want 2081, 711, 148)",
                  r.manifest.records.size(), r.report.removed_unavailable, r.report.removed_duplicates)};
}

// --- numerical oracles ---------------------------------------------------

// Full 4096-d head, class weights (0.4, 1.6), dropout masks on half the
// draws. Each draw checks the bias and 256 random weight coordinates.
Outcome gradient_oracle() {
  Rng rng(90210);
  const ClassWeights weights{0.4, 1.6};
  const double h = 1e-5;
  double worst = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    FusionParams p = init_params(kJointDim, rng.next());
    p.b = rng.uniform(-1.0, 1.0);
    std::vector<Sample> batch(1 + rng.below(8));
    for (auto& s : batch) {
      s.x.resize(kJointDim);
      for (double& v : s.x) v = rng.uniform(-2.0, 2.0);
      s.y = static_cast<int>(rng.below(2));
    }
    std::vector<DropoutMask> masks;
    if (draw % 2) {
      for (std::size_t i = 0; i < batch.size(); ++i) masks.push_back(sample_mask(kJointDim, 0.5, rng));
    }
    const auto g = gradients(p, std::span<const Sample>(batch), masks, weights);

    std::vector<double> analytic, numeric;
    auto probe = [&](double& param, double a) {
      const double saved = param;
      param = saved + h;
      const double up = batch_loss(p, batch, masks, weights);
      param = saved - h;
      const double down = batch_loss(p, batch, masks, weights);
      param = saved;
      analytic.push_back(a);
      numeric.push_back((up - down) / (2 * h));
    };
    probe(p.b, g.b);
    for (int k = 0; k < 256; ++k) {
      const auto i = static_cast<std::size_t>(rng.below(kJointDim));
      probe(p.w[i], g.w[i]);
    }
    // Relative to the largest component so near-zero coordinates do not
    // turn rounding noise into huge ratios.
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
      scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    }
    worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
  }
  return {worst < 1e-4, fmt("max relative error %.3g over 50 draws (limit 1e-4)", worst)};
}

Outcome auc_oracle() {
  Rng rng(4242);
  double worst = 0.0;
  for (int set = 0; set < 100; ++set) {
    const std::size_t n = 2 + rng.below(199);
    const int levels = 2 + static_cast<int>(rng.below(30));
    std::vector<ScoredLabel> s(n);
    for (auto& x : s) {
      x.truth = static_cast<int>(rng.below(2));
      x.score = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) / (levels - 1);
      if (x.truth) x.score = std::min(1.0, x.score + rng.uniform(0.0, 0.3) * rng.below(2));
    }
    s[0].truth = 1;
    s[1].truth = 0;
    double wins = 0.0;
    std::size_t pairs = 0;
    for (const auto& a : s) {
      if (!a.truth) continue;
      for (const auto& b : s) {
        if (b.truth) continue;
        ++pairs;
        wins += a.score > b.score ? 1.0 : (a.score == b.score ? 0.5 : 0.0);
      }
    }
    worst = std::max(worst, std::abs(roc_auc(s).auc - wins / static_cast<double>(pairs)));
  }
  return {worst <= 1e-9, fmt("max |trapezoid - Mann-Whitney| %.3g over 100 sets", worst)};
}

// --- trained properties --------------------------------------------------

FeaturizedSplit default_split(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  return featurize_split(Featurizer{}, split_corpus(generate_corpus(cfg), 400, 0.2, seed));
}

Outcome ablation_ordering() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    FusionConfig base;
    base.seed = seed;
    const auto rows = run_ablation(default_split(seed), base);
    std::map<std::string, EvalReport> r;
    for (const auto& row : rows) r[row.name] = row.test;
    const double multi = r.at("multi-modal").pr.f1;
    const bool ok = multi > r.at("hashtags").pr.f1 && multi > r.at("comments").pr.f1 &&
                    multi > r.at("images").pr.f1 && r.at("multi-modal").auc >= 0.90;
    wins += ok;
    detail += fmt("[seed %llu F1 h=%.3f c=%.3f i=%.3f m=%.3f AUC m=%.3f %s] ", static_cast<unsigned long long>(seed),
                  r.at("hashtags").pr.f1, r.at("comments").pr.f1, r.at("images").pr.f1, multi,
                  r.at("multi-modal").auc, ok ? "ok" : "miss");
  }
  return {wins >= 4, fmt("%d/5 seeds; ", wins) + detail};
}

Outcome class_weight_property() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 200; seed < 205; ++seed) {
    const auto split = default_split(seed);
    auto recall = [&](ClassWeights w) {
      FusionConfig c;
      c.seed = seed;
      c.class_weights = w;
      const auto model = train(split.train, split.validation, c);
      return prf1(confusion(score_samples(model.params, split.validation), c.threshold));
    };
    const auto weighted = recall({0.4, 1.6});
    const auto plain = recall({1.0, 1.0});
    wins += weighted.recall >= plain.recall;
    detail += fmt("[seed %llu recall %.3f vs %.3f, precision %.3f vs %.3f] ", static_cast<unsigned long long>(seed),
                  weighted.recall, plain.recall, weighted.precision, plain.precision);
  }
  return {wins >= 4, fmt("%d/5 seeds weighted >= unweighted; ", wins) + detail};
}

// --- end to end through the CLI ------------------------------------------

int cli(std::vector<std::string> args, const std::filesystem::path& log) {
  args.insert(args.begin(), LEDGER_CLI);
  return testing_support::run(args, log);
}

Outcome determinism() {
  TempDir root("ledger-acc");
  std::vector<std::string> reports;
  for (const char* run : {"a", "b"}) {
    const auto dir = root.path() / run;
    std::filesystem::create_directories(dir);
    const auto log = dir / "log.txt";
    const std::string seed = "31";
    const std::vector<std::vector<std::string>> steps = {
        {"--seed", seed, "synth", "--out", (dir / "corpus.jsonl").string()},
        {"--seed", seed, "split", "--in", (dir / "corpus.jsonl").string(), "--test", "400", "--val", "0.2",
         "--out-dir", (dir / "splits").string()},
        {"--seed", seed, "train", "--splits", (dir / "splits").string(), "--out", (dir / "model.bin").string()},
        {"eval", "--model", (dir / "model.bin").string(), "--test", (dir / "splits" / "test.jsonl").string(),
         "--report", (dir / "eval.json").string()}};
    for (const auto& step : steps) {
      const int code = cli(step, log);
      if (code != 0) return {false, fmt("run %s: '%s' exited %d", run, step[2].c_str(), code)};
    }
    reports.push_back(testing_support::slurp(dir / "eval.json"));
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1];
  return {same, same ? fmt("eval.json identical (%zu bytes)", reports[0].size()) : std::string("eval.json differs")};
}

class ServeProcess {
 public:
  ServeProcess(const std::filesystem::path& data_dir, const std::filesystem::path& log) {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
    pid_ = ::fork();
    if (pid_ == 0) {
      ::dup2(fds[1], 1);
      if (std::FILE* err = std::fopen(log.c_str(), "a")) ::dup2(::fileno(err), 2);
      ::close(fds[0]);
      ::setenv("LEDGER_TOKEN", "acceptance", 1);
      const std::string dir = data_dir.string();
      const char* argv[] = {LEDGER_CLI, "serve", "--host", "127.0.0.1", "--port", "0", "--data-dir", dir.c_str(),
                            nullptr};
      ::execv(argv[0], const_cast<char* const*>(argv));
      std::_Exit(127);
    }
    ::close(fds[1]);
    std::string line;
    char c;
    while (::read(fds[0], &c, 1) == 1 && c != '\n') line += c;
    ::close(fds[0]);
    const auto colon = line.rfind(':');
    if (line.rfind("listening on", 0) != 0 || colon == std::string::npos) {
      kill9();
      throw std::runtime_error("server did not start: '" + line + "'");
    }
    port_ = std::stoi(line.substr(colon + 1));
  }
  ~ServeProcess() { kill9(); }

  int port() const { return port_; }

  void kill9() {
    if (pid_ <= 0) return;
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

std::string queue_id(int i) { return fmt("q%04d", i); }

// Posts verdicts from a client thread, SIGKILLs the server mid-stream, then
// restarts it and checks every verdict that got a 200 is still there. Two
// rounds, so the second restart also replays the first round's log.
Outcome service_durability() {
  TempDir dir("ledger-acc");
  const int n = 400;
  std::vector<ScoredPost> scored;
  for (int i = 0; i < n; ++i) scored.push_back({queue_id(i), static_cast<double>(i % 97) / 96.0});
  write_queue(dir / "queue.jsonl", rank_queue(scored));
  const httplib::Headers auth = {{"Authorization", "Bearer acceptance"}};

  std::map<std::string, std::string> acked;  // post_id -> verdict
  int next = 0;
  std::size_t attempted = 0;
  for (int round = 0; round < 2; ++round) {
    ServeProcess server(dir.path(), dir / "serve.log");
    std::mutex mu;
    std::atomic<int> acked_this_round{0};
    std::atomic<bool> stop{false};
    std::thread poster([&] {
      httplib::Client client("127.0.0.1", server.port());
      client.set_connection_timeout(2);
      client.set_read_timeout(2);
      while (!stop.load() && next < n) {
        const std::string id = queue_id(next++);
        const char* verdict = next % 3 ? "ConfirmedEvasion" : "Rejected";
        ++attempted;
        const nlohmann::json body{{"post_id", id}, {"verdict", verdict}, {"reviewer", "acc"}};
        auto res = client.Post("/api/verdict", auth, body.dump(), "application/json");
        if (!res) break;  // server gone
        if (res->status == 200) {
          std::lock_guard lock(mu);
          acked[id] = verdict;
          ++acked_this_round;
        }
      }
    });
    while (acked_this_round.load() < 60 && next < n) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    server.kill9();
    stop = true;
    poster.join();
  }

  ServeProcess server(dir.path(), dir / "serve.log");
  httplib::Client client("127.0.0.1", server.port());
  auto res = client.Get("/api/queue?page=0&size=500", auth);
  if (!res || res->status != 200) return {false, "queue read after restart failed"};
  std::map<std::string, std::string> status;
  const auto page = nlohmann::json::parse(res->body);
  for (const auto& e : page["entries"]) status[e["post_id"].get<std::string>()] = e["status"].get<std::string>();
  std::size_t survived = 0;
  for (const auto& [id, verdict] : acked) survived += status[id] == verdict;
  const bool ok = !acked.empty() && survived == acked.size();
  return {ok, fmt("%zu/%zu acknowledged verdicts survived two SIGKILL restarts (%zu attempted)", survived,
                  acked.size(), attempted)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric-formula-anchor", metric_formula_anchor},
      {"efficiency-anchor", efficiency_anchor},
      {"pipeline-count-anchor", pipeline_count_anchor},
      {"gradient-oracle", gradient_oracle},
      {"auc-oracle", auc_oracle},
      {"ablation-ordering", ablation_ordering},
      {"class-weight-property", class_weight_property},
      {"determinism", determinism},
      {"service-durability", service_durability},
  };
  const std::string only = argc > 1 ? argv[1] : "";
  bool all_pass = true, matched = false;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && name != only) continue;
    matched = true;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  if (!matched) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return all_pass ? 0 : 1;
}
