#pragma once

// Review service core: scoring, the paged triage queue and reviewer verdicts.
// Handlers take and return JSON so they can be exercised without a socket;
// http_server.hpp binds them to routes.
//
// Verdicts go to an append-only JSONL log that is fsync'ed before the
// in-memory queue changes, and the log is replayed over the queue file at
// startup. Readers share a lock; verdicts take it exclusively, one at a time.

#include <fcntl.h>
#include <pthread.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledger/checkpoint.hpp"
#include "ledger/errors.hpp"
#include "ledger/features.hpp"
#include "ledger/jsonl.hpp"
#include "ledger/triage.hpp"

namespace ledger::service {

using json = nlohmann::ordered_json;

struct Verdict {
  std::string post_id;
  ReviewStatus verdict = ReviewStatus::ConfirmedEvasion;
  std::string reviewer;
  std::int64_t timestamp = 0;
  bool force = false;

  bool operator==(const Verdict&) const = default;
};

inline json to_json(const Verdict& v) {
  return {{"post_id", v.post_id},
          {"verdict", status_name(v.verdict)},
          {"reviewer", v.reviewer},
          {"timestamp", v.timestamp},
          {"force", v.force}};
}

// Throws ValidationError describing the first bad field.
inline Verdict verdict_from_json(const nlohmann::json& j, std::int64_t default_time) {
  if (!j.is_object()) throw ValidationError("verdict must be a JSON object");
  Verdict v;
  auto str = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
      throw ValidationError(std::string("field '") + key + "' must be a non-empty string");
    }
    return it->get<std::string>();
  };
  v.post_id = str("post_id");
  const auto status = parse_status(str("verdict"));
  if (!status || *status == ReviewStatus::Pending) {
    throw ValidationError("verdict must be ConfirmedEvasion or Rejected");
  }
  v.verdict = *status;
  v.reviewer = str("reviewer");
  v.timestamp = default_time;
  if (auto it = j.find("timestamp"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ValidationError("timestamp must be an integer");
    v.timestamp = it->get<std::int64_t>();
  }
  if (auto it = j.find("force"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw ValidationError("force must be a boolean");
    v.force = it->get<bool>();
  }
  return v;
}

class VerdictLog {
 public:
  VerdictLog() = default;
  explicit VerdictLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    drop_torn_tail(path_);
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open verdict log " + path_.string() + ": " + std::strerror(errno));
  }

  // Cuts a partial last line so the next append starts on a fresh line.
  static void drop_torn_tail(const std::filesystem::path& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec || size == 0) return;
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.back() == '\n') return;
    const auto keep = bytes.find_last_of('\n');
    std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
  }
  VerdictLog(const VerdictLog&) = delete;
  VerdictLog& operator=(const VerdictLog&) = delete;
  VerdictLog(VerdictLog&& o) noexcept : path_(std::move(o.path_)), fd_(std::exchange(o.fd_, -1)) {}
  VerdictLog& operator=(VerdictLog&& o) noexcept {
    if (this != &o) {
      close();
      path_ = std::move(o.path_);
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~VerdictLog() { close(); }

  const std::filesystem::path& path() const noexcept { return path_; }

  // Returns once the line is on stable storage.
  void append(const Verdict& v) {
    const std::string line = to_json(v).dump() + '\n';
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("verdict log write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw Error(std::string("verdict log fsync failed: ") + std::strerror(errno));
  }

  // A torn final line (crash mid-write, never acknowledged) is dropped.
  static std::vector<Verdict> replay(const std::filesystem::path& path) {
    std::vector<Verdict> out;
    std::ifstream in(path);
    if (!in) return out;
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(std::move(line));
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        out.push_back(verdict_from_json(nlohmann::json::parse(lines[i]), 0));
      } catch (const std::exception& e) {
        if (i + 1 == lines.size()) break;
        throw ParseError(i + 1, std::string("verdict log: ") + e.what());
      }
    }
    return out;
  }

 private:
  void close() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  std::filesystem::path path_;
  int fd_ = -1;
};

// Reader/writer lock that lets a waiting writer in ahead of new readers.
// glibc's default (and so std::shared_mutex) favors readers, which starves
// the verdict writer while the queue is polled.
class WriterFirstMutex {
 public:
  WriterFirstMutex() {
    pthread_rwlockattr_t attr;
    pthread_rwlockattr_init(&attr);
    pthread_rwlockattr_setkind_np(&attr, PTHREAD_RWLOCK_PREFER_WRITER_NONRECURSIVE_NP);
    pthread_rwlock_init(&lock_, &attr);
    pthread_rwlockattr_destroy(&attr);
  }
  ~WriterFirstMutex() { pthread_rwlock_destroy(&lock_); }
  WriterFirstMutex(const WriterFirstMutex&) = delete;
  WriterFirstMutex& operator=(const WriterFirstMutex&) = delete;

  void lock() { pthread_rwlock_wrlock(&lock_); }
  void unlock() { pthread_rwlock_unlock(&lock_); }
  void lock_shared() { pthread_rwlock_rdlock(&lock_); }
  void unlock_shared() { pthread_rwlock_unlock(&lock_); }

 private:
  pthread_rwlock_t lock_;
};

struct Options {
  std::filesystem::path data_dir = ".";
  std::filesystem::path queue_path;  // default <data_dir>/queue.jsonl
  std::filesystem::path model_path;  // empty: start without a model
  std::string token;                 // empty: no auth
  VideoPolicy video_policy = VideoPolicy::Noise;

  std::filesystem::path resolved_queue() const { return queue_path.empty() ? data_dir / "queue.jsonl" : queue_path; }
  std::filesystem::path verdict_log() const { return data_dir / "verdicts.jsonl"; }

  // LEDGER_DATA_DIR, LEDGER_MODEL and LEDGER_TOKEN fill unset fields.
  void apply_env() {
    if (const char* d = std::getenv("LEDGER_DATA_DIR"); d && *d && data_dir == ".") data_dir = d;
    if (const char* m = std::getenv("LEDGER_MODEL"); m && *m && model_path.empty()) model_path = m;
    if (const char* t = std::getenv("LEDGER_TOKEN"); t && *t && token.empty()) token = t;
  }
};

struct Reply {
  int status = 200;
  json body;
};

inline Reply error_reply(int status, const std::string& message) { return {status, json{{"error", message}}}; }

inline std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

class State {
 public:
  explicit State(Options opts) : opts_(std::move(opts)), featurizer_(FeaturizerOptions{FeatureSource::Baseline, opts_.video_policy, {}}) {
    std::filesystem::create_directories(opts_.data_dir);
    const auto qpath = opts_.resolved_queue();
    if (std::filesystem::exists(qpath)) queue_ = read_queue(qpath);
    reindex();
    for (const auto& v : VerdictLog::replay(opts_.verdict_log())) {
      if (auto it = index_.find(v.post_id); it != index_.end()) apply(queue_[it->second], v);
      ++verdict_count_;
    }
    log_ = VerdictLog(opts_.verdict_log());
    if (!opts_.model_path.empty()) load_model(opts_.model_path);
  }

  const Options& options() const noexcept { return opts_; }

  // Readers keep scoring with the old snapshot until the swap.
  void load_model(const std::filesystem::path& path) {
    auto fresh = std::make_shared<const FusionModel>(checkpoint::load_model(path));
    std::lock_guard lock(model_mu_);
    model_ = std::move(fresh);
  }

  std::shared_ptr<const FusionModel> model() const {
    std::lock_guard lock(model_mu_);
    return model_;
  }

  bool authorized(const std::string& authorization_header) const {
    if (opts_.token.empty()) return true;
    const std::string expected = "Bearer " + opts_.token;
    if (authorization_header.size() != expected.size()) return false;
    unsigned char diff = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      diff |= static_cast<unsigned char>(authorization_header[i] ^ expected[i]);
    }
    return diff == 0;
  }

  Reply score(const std::string& body) const {
    const auto model = this->model();
    if (!model) return error_reply(503, "no model loaded");
    PostRecord post;
    try {
      post = jsonl::post_from_json(nlohmann::json::parse(body), opts_.data_dir);
    } catch (const nlohmann::json::exception& e) {
      return error_reply(400, std::string("malformed payload: ") + e.what());
    } catch (const jsonl::FormatError& e) {
      return error_reply(400, std::string("malformed payload: ") + e.what());
    } catch (const DimensionError& e) {
      return error_reply(422, std::string("featurization failed: ") + e.what());
    } catch (const Error& e) {
      return error_reply(400, std::string("malformed payload: ") + e.what());
    }
    try {
      const auto pred = model->predict_full(featurizer_.joint(post));
      return {200, json{{"score", pred.score}, {"flag", pred.flag}}};
    } catch (const std::exception& e) {
      return error_reply(422, std::string("featurization failed: ") + e.what());
    }
  }

  Reply queue_page(std::size_t page, std::size_t size) const {
    if (size == 0 || size > kMaxPageSize) return error_reply(400, "size must be in 1.." + std::to_string(kMaxPageSize));
    std::shared_lock lock(mu_);
    const std::size_t n = queue_.size();
    if (n == 0 ? page > 0 : page >= (n + size - 1) / size) return error_reply(404, "page out of range");
    json entries = json::array();
    for (std::size_t i = page * size; i < std::min(n, (page + 1) * size); ++i) entries.push_back(to_json(queue_[i]));
    return {200, json{{"page", page}, {"size", size}, {"total", n}, {"entries", std::move(entries)}}};
  }

  Reply verdict(const std::string& body) {
    Verdict v;
    try {
      v = verdict_from_json(nlohmann::json::parse(body), unix_now());
    } catch (const nlohmann::json::exception& e) {
      return error_reply(400, std::string("malformed verdict: ") + e.what());
    } catch (const ValidationError& e) {
      return error_reply(400, e.what());
    }
    std::unique_lock lock(mu_);
    const auto it = index_.find(v.post_id);
    if (it == index_.end()) return error_reply(404, "unknown post_id '" + v.post_id + "'");
    QueueEntry& e = queue_[it->second];
    if (e.status != ReviewStatus::Pending && !v.force) {
      return error_reply(409, "post '" + v.post_id + "' is already " + std::string(status_name(e.status)));
    }
    log_.append(v);
    if (after_append) after_append(v);
    apply(e, v);
    ++verdict_count_;
    return {200, to_json(e)};
  }

  Reply export_labels() const {
    std::shared_lock lock(mu_);
    json labels = json::array();
    for (const auto& e : queue_) {
      if (e.status == ReviewStatus::Pending) continue;
      labels.push_back({{"post_id", e.post_id},
                        {"status", status_name(e.status)},
                        {"hidden_economy", e.status == ReviewStatus::ConfirmedEvasion ? "Y" : "N"},
                        {"reviewer", e.reviewer},
                        {"reviewed_at", e.reviewed_at.value_or(0)}});
    }
    return {200, json{{"labels", std::move(labels)}}};
  }

  Reply health() const {
    std::shared_lock lock(mu_);
    return {200, json{{"status", "ok"},
                      {"model_loaded", model() != nullptr},
                      {"queue_size", queue_.size()},
                      {"verdicts", verdict_count_}}};
  }

  std::vector<QueueEntry> snapshot() const {
    std::shared_lock lock(mu_);
    return queue_;
  }

  // Test hook: runs after the log append, before the in-memory update.
  std::function<void(const Verdict&)> after_append;

  static constexpr std::size_t kMaxPageSize = 500;

 private:
  static void apply(QueueEntry& e, const Verdict& v) {
    e.status = v.verdict;
    e.reviewer = v.reviewer;
    e.reviewed_at = v.timestamp;
  }

  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < queue_.size(); ++i) {
      if (!index_.emplace(queue_[i].post_id, i).second) {
        throw ValidationError("queue lists post_id '" + queue_[i].post_id + "' twice");
      }
    }
  }

  Options opts_;
  Featurizer featurizer_;
  mutable WriterFirstMutex mu_;
  std::vector<QueueEntry> queue_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t verdict_count_ = 0;
  VerdictLog log_;
  mutable std::mutex model_mu_;
  std::shared_ptr<const FusionModel> model_;
};

}  // namespace ledger::service
