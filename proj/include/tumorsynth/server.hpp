// HTTP service for slice viewing, synthesis previews and reader-study sessions.
//
// Data directory layout:
//   scans/<id>.nii[.gz]         CT volumes listed by GET /scans
//   scans/<id>.liver.nii[.gz]   optional liver masks, required for previews
//   answer_key.json             {"cases": [{"id": ..., "truth": "real"|"synthetic"}, ...]}
//   config.json                 optional generator configuration
//   sessions/<id>.log           append-only judgment logs (created by the server)

#pragma once

#include <cstddef>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "tumorsynth/config.hpp"
#include "tumorsynth/generator.hpp"
#include "tumorsynth/metrics.hpp"

namespace httplib {
class Server;
}

namespace tumorsynth {

enum class Judgment { Unanswered, Real, Synthetic, Unsure };
std::string to_string(Judgment j);
Judgment parse_judgment(const std::string& s);  // real | synthetic | unsure

/// Byte-bounded LRU of synthesized previews.
class PreviewCache {
public:
    explicit PreviewCache(std::size_t byte_budget) : budget_(byte_budget) {}
    std::shared_ptr<const SynthesisResult> get(const std::string& id);
    void put(const std::string& id, std::shared_ptr<const SynthesisResult> value);
    std::size_t bytes() const;
    std::size_t size() const;

private:
    struct Entry {
        std::string id;
        std::shared_ptr<const SynthesisResult> value;
        std::size_t bytes;
    };
    mutable std::mutex mutex_;
    std::size_t budget_;
    std::size_t used_ = 0;
    std::list<Entry> order_;  // most recent first
    std::map<std::string, std::list<Entry>::iterator> index_;
};

struct ServerOptions {
    std::size_t preview_cache_bytes = 512u << 20;
    int preview_workers = 2;
};

class ApiServer {
public:
    ApiServer(std::filesystem::path data_dir, GenConfig cfg, ServerOptions options = {});
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds and serves until stop(). Port 0 picks a free port; see port().
    bool listen(const std::string& host, int port);
    /// Binds without serving; returns the bound port or -1.
    int bind(const std::string& host, int port);
    bool listen_after_bind();
    void stop();
    int port() const { return port_; }

    httplib::Server& http() { return *http_; }

private:
    struct Scan {
        std::string id;
        std::filesystem::path ct_path;
        std::optional<std::filesystem::path> liver_path;
        std::shared_ptr<const ScalarVolume> ct;
        std::shared_ptr<const PreparedScan> prepared;
    };
    struct Session {
        std::string id;
        std::vector<std::string> scans;
        std::map<std::string, Judgment> judgments;
        bool closed = false;
        std::mutex mutex;
        bool complete() const;
    };

    void routes();
    void load_scans();
    void load_answer_key();
    void load_sessions();
    std::shared_ptr<const ScalarVolume> scan_ct(const std::string& id);
    std::shared_ptr<const PreparedScan> scan_prepared(const std::string& id);
    std::shared_ptr<const SynthesisResult> preview(const std::string& id);
    std::shared_ptr<Session> session(const std::string& id);
    void append_log(const Session& s, const nlohmann::json& record);
    nlohmann::json report(Session& s);

    std::filesystem::path data_dir_;
    GenConfig cfg_;
    ServerOptions options_;
    std::unique_ptr<httplib::Server> http_;
    int port_ = -1;

    std::mutex scans_mutex_;
    std::map<std::string, Scan> scans_;
    std::map<std::string, std::string> truth_;  // scan id -> real | synthetic

    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;

    std::mutex previews_mutex_;
    std::map<std::string, nlohmann::json> preview_requests_;  // id -> canonical request
    PreviewCache cache_;
    std::counting_semaphore<64> workers_;
};

}  // namespace tumorsynth
