#include "tumorsynth/server.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <httplib.h>

#include "tumorsynth/nifti.hpp"
#include "tumorsynth/render.hpp"
#include "tumorsynth/serialization.hpp"

namespace tumorsynth {

using nlohmann::json;

std::string to_string(Judgment j) {
    switch (j) {
        case Judgment::Real: return "real";
        case Judgment::Synthetic: return "synthetic";
        case Judgment::Unsure: return "unsure";
        case Judgment::Unanswered: break;
    }
    return "unanswered";
}

Judgment parse_judgment(const std::string& s) {
    if (s == "real") return Judgment::Real;
    if (s == "synthetic") return Judgment::Synthetic;
    if (s == "unsure") return Judgment::Unsure;
    throw ArgumentError("judgment must be real, synthetic or unsure, got '" + s + "'");
}

// ---------------------------------------------------------------- cache

namespace {
std::size_t result_bytes(const SynthesisResult& r) {
    return r.ct.size() * sizeof(float) + r.labels.size() + 4096;
}
}  // namespace

std::shared_ptr<const SynthesisResult> PreviewCache::get(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = index_.find(id);
    if (it == index_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->value;
}

void PreviewCache::put(const std::string& id, std::shared_ptr<const SynthesisResult> value) {
    std::lock_guard lock(mutex_);
    if (const auto it = index_.find(id); it != index_.end()) {
        used_ -= it->second->bytes;
        order_.erase(it->second);
        index_.erase(it);
    }
    const std::size_t bytes = result_bytes(*value);
    order_.push_front({id, std::move(value), bytes});
    index_[id] = order_.begin();
    used_ += bytes;
    // The newest entry stays even when it alone exceeds the budget.
    while (used_ > budget_ && order_.size() > 1) {
        used_ -= order_.back().bytes;
        index_.erase(order_.back().id);
        order_.pop_back();
    }
}

std::size_t PreviewCache::bytes() const {
    std::lock_guard lock(mutex_);
    return used_;
}

std::size_t PreviewCache::size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
}

// ---------------------------------------------------------------- helpers

namespace {

struct HttpError {
    int status;
    std::string kind;
    std::string message;
    json extra = json::object();
};

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
    json body = e.extra;
    body["error"] = e.kind;
    body["message"] = e.message;
    send_json(res, body, e.status);
}

// Wraps a handler so engine errors map onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const HttpError& e) {
            send_error(res, e);
        } catch (const CollisionError& e) {
            send_error(res, {422, e.kind(), e.what(), {{"tumor_index", e.tumor_index()}}});
        } catch (const SynthesisFailed& e) {
            send_error(res, {422, e.kind(), e.what()});
        } catch (const PlacementExhausted& e) {
            send_error(res, {422, e.kind(), e.what()});
        } catch (const BoundsError& e) {
            send_error(res, {404, e.kind(), e.what()});
        } catch (const ArgumentError& e) {
            send_error(res, {400, e.kind(), e.what()});
        } catch (const json::exception& e) {
            send_error(res, {400, "format", e.what()});
        } catch (const Error& e) {
            send_error(res, {500, e.kind(), e.what()});
        } catch (const std::exception& e) {
            send_error(res, {500, "internal", e.what()});
        }
    };
}

double query_double(const httplib::Request& req, const char* key, double fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw HttpError{400, "argument", std::string("query parameter ") + key + " is not a number"};
    return out;
}

std::optional<int> query_int(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    const std::string v = req.get_param_value(key);
    int out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw HttpError{400, "argument", std::string("query parameter ") + key + " is not an integer"};
    return out;
}

void send_slice(const httplib::Request& req, httplib::Response& res, const ScalarVolume& v) {
    Axis axis = Axis::Axial;
    try {
        axis = parse_axis(req.has_param("axis") ? req.get_param_value("axis") : "axial");
    } catch (const ArgumentError& e) {
        throw HttpError{400, "argument", e.what()};
    }
    const int a = static_cast<int>(axis);
    const int index = query_int(req, "index").value_or(v.dims()[a] / 2);
    Window w{query_double(req, "wc", 40.0), query_double(req, "ww", 400.0)};
    try {
        w.validate();
    } catch (const ArgumentError& e) {
        throw HttpError{400, "argument", e.what()};
    }
    const std::string png = encode_png(extract_slice(v, axis, index, w));
    res.set_content(png, "image/png");
}

json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw HttpError{400, "format", std::string("malformed JSON body: ") + e.what()};
    }
}

std::string fnv1a_hex(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string random_id() {
    std::random_device rd;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08x%08x", rd(), rd());
    return buf;
}

bool is_nifti(const std::filesystem::path& p) {
    const std::string n = p.filename().string();
    return n.ends_with(".nii") || n.ends_with(".nii.gz");
}

std::string strip_nifti(const std::string& n) {
    if (n.ends_with(".nii.gz")) return n.substr(0, n.size() - 7);
    if (n.ends_with(".nii")) return n.substr(0, n.size() - 4);
    return n;
}

}  // namespace

// ---------------------------------------------------------------- server

bool ApiServer::Session::complete() const {
    if (closed) return true;
    for (const auto& id : scans)
        if (judgments.at(id) == Judgment::Unanswered) return false;
    return true;
}

ApiServer::ApiServer(std::filesystem::path data_dir, GenConfig cfg, ServerOptions options)
    : data_dir_(std::move(data_dir)),
      cfg_(std::move(cfg)),
      options_(options),
      http_(std::make_unique<httplib::Server>()),
      cache_(options.preview_cache_bytes),
      workers_(std::clamp(options.preview_workers, 1, 64)) {
    cfg_.validate();
    if (!std::filesystem::is_directory(data_dir_)) throw IoError("data directory not found: " + data_dir_.string());
    std::filesystem::create_directories(data_dir_ / "sessions");
    load_scans();
    load_answer_key();
    load_sessions();
    routes();
}

ApiServer::~ApiServer() { stop(); }

bool ApiServer::listen(const std::string& host, int port) {
    if (bind(host, port) < 0) return false;
    return listen_after_bind();
}

int ApiServer::bind(const std::string& host, int port) {
    port_ = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
    return port_;
}

bool ApiServer::listen_after_bind() { return http_->listen_after_bind(); }

void ApiServer::stop() {
    if (http_) http_->stop();
}

void ApiServer::load_scans() {
    const auto dir = data_dir_ / "scans";
    if (!std::filesystem::is_directory(dir)) return;
    std::map<std::string, std::filesystem::path> cts, livers;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file() || !is_nifti(e.path())) continue;
        const std::string stem = strip_nifti(e.path().filename().string());
        if (stem.ends_with(".liver"))
            livers[stem.substr(0, stem.size() - 6)] = e.path();
        else
            cts[stem] = e.path();
    }
    for (const auto& [id, path] : cts) {
        Scan s;
        s.id = id;
        s.ct_path = path;
        if (const auto it = livers.find(id); it != livers.end()) s.liver_path = it->second;
        scans_[id] = std::move(s);
    }
}

void ApiServer::load_answer_key() {
    const auto path = data_dir_ / "answer_key.json";
    if (!std::filesystem::exists(path)) return;
    const json key = load_json(path);
    try {
        for (const auto& c : key.at("cases")) {
            const std::string id = c.at("id").get<std::string>();
            const std::string truth = c.at("truth").get<std::string>();
            if (truth != "real" && truth != "synthetic")
                throw FormatError("answer key truth must be real or synthetic for " + id);
            truth_[id] = truth;
        }
    } catch (const json::exception& e) {
        throw FormatError("invalid answer key " + path.string() + ": " + e.what());
    }
}

void ApiServer::load_sessions() {
    for (const auto& e : std::filesystem::directory_iterator(data_dir_ / "sessions")) {
        if (e.path().extension() != ".log") continue;
        auto s = std::make_shared<Session>();
        s->id = e.path().stem().string();
        {
            // Drop a torn final record so later appends start on a fresh line.
            std::ifstream raw(e.path(), std::ios::binary);
            const std::string text((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());
            if (!text.empty() && text.back() != '\n') {
                const auto keep = text.find_last_of('\n');
                raw.close();
                std::filesystem::resize_file(e.path(), keep == std::string::npos ? 0 : keep + 1);
            }
        }
        std::ifstream in(e.path());
        std::string line;
        bool created = false;
        while (std::getline(in, line)) {
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::exception&) {
                throw FormatError("corrupt session log " + e.path().string());
            }
            const std::string op = rec.value("op", "");
            if (op == "create") {
                s->scans = rec.at("scans").get<std::vector<std::string>>();
                for (const auto& id : s->scans) s->judgments[id] = Judgment::Unanswered;
                created = true;
            } else if (op == "judge" && created) {
                s->judgments[rec.at("scan_id").get<std::string>()] = parse_judgment(rec.at("judgment").get<std::string>());
            } else if (op == "close" && created) {
                s->closed = true;
            }
        }
        if (created) sessions_[s->id] = std::move(s);
    }
}

void ApiServer::append_log(const Session& s, const json& record) {
    std::ofstream out(data_dir_ / "sessions" / (s.id + ".log"), std::ios::app);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw IoError("cannot append to session log for " + s.id);
}

std::shared_ptr<const ScalarVolume> ApiServer::scan_ct(const std::string& id) {
    std::lock_guard lock(scans_mutex_);
    const auto it = scans_.find(id);
    if (it == scans_.end()) throw HttpError{404, "not-found", "unknown scan '" + id + "'"};
    if (!it->second.ct) it->second.ct = std::make_shared<const ScalarVolume>(nifti::load_scalar(it->second.ct_path));
    return it->second.ct;
}

std::shared_ptr<const PreparedScan> ApiServer::scan_prepared(const std::string& id) {
    const auto ct = scan_ct(id);
    std::lock_guard lock(scans_mutex_);
    Scan& s = scans_.at(id);
    if (!s.liver_path) throw HttpError{400, "argument", "scan '" + id + "' has no liver mask; previews need one"};
    if (!s.prepared)
        s.prepared = std::make_shared<const PreparedScan>(prepare_scan(*ct, nifti::load_labels(*s.liver_path), cfg_, id));
    return s.prepared;
}

std::shared_ptr<const SynthesisResult> ApiServer::preview(const std::string& id) {
    if (auto hit = cache_.get(id)) return hit;
    json request;
    {
        std::lock_guard lock(previews_mutex_);
        const auto it = preview_requests_.find(id);
        if (it == preview_requests_.end()) throw HttpError{404, "not-found", "unknown preview '" + id + "'"};
        request = it->second;
    }
    const auto scan = scan_prepared(request.at("scan_id").get<std::string>());
    const auto specs = request.at("specs").get<std::vector<TumorSpec>>();
    workers_.acquire();
    std::shared_ptr<const SynthesisResult> result;
    try {
        result = std::make_shared<const SynthesisResult>(
            synthesize_with_spec(*scan, specs, request.at("seed").get<uint64_t>(), cfg_));
    } catch (...) {
        workers_.release();
        throw;
    }
    workers_.release();
    cache_.put(id, result);
    return result;
}

std::shared_ptr<ApiServer::Session> ApiServer::session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError{404, "not-found", "unknown session '" + id + "'"};
    return it->second;
}

json ApiServer::report(Session& s) {
    TuringCounts c;
    json cases = json::array();
    for (const auto& id : s.scans) {
        const Judgment j = s.judgments.at(id);
        const std::string& truth = truth_.at(id);
        cases.push_back({{"scan_id", id}, {"truth", truth}, {"judgment", to_string(j)}});
        const bool real = truth == "real";
        switch (j) {
            case Judgment::Real: ++(real ? c.real_as_real : c.synthetic_as_real); break;
            case Judgment::Synthetic: ++(real ? c.real_as_synthetic : c.synthetic_as_synthetic); break;
            case Judgment::Unsure: ++(real ? c.real_unsure : c.synthetic_unsure); break;
            case Judgment::Unanswered: break;
        }
    }
    json out = {{"session_id", s.id},
                {"counts",
                 {{"real_as_real", c.real_as_real},
                  {"real_as_synthetic", c.real_as_synthetic},
                  {"real_unsure", c.real_unsure},
                  {"synthetic_as_real", c.synthetic_as_real},
                  {"synthetic_as_synthetic", c.synthetic_as_synthetic},
                  {"synthetic_unsure", c.synthetic_unsure}}},
                {"cases", cases}};
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    try {
        const TuringTally t = turing_metrics(c);
        out["total"] = t.total;
        out["definite"] = t.definite;
        out["accuracy"] = t.accuracy;
        out["sensitivity"] = opt(t.sensitivity);
        out["specificity"] = opt(t.specificity);
        out["error"] = nullptr;
    } catch (const UndefinedMetrics& e) {
        const std::size_t total = c.real_as_real + c.real_as_synthetic + c.real_unsure + c.synthetic_as_real +
                                  c.synthetic_as_synthetic + c.synthetic_unsure;
        out["total"] = total;
        out["definite"] = 0;
        out["accuracy"] = nullptr;
        out["sensitivity"] = nullptr;
        out["specificity"] = nullptr;
        out["error"] = e.kind();
        out["message"] = e.what();
    }
    return out;
}

void ApiServer::routes() {
    auto& h = *http_;

    h.Get("/scans", guarded([this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        std::lock_guard lock(scans_mutex_);
        for (const auto& [id, s] : scans_) {
            const auto hdr = nifti::read_header(s.ct_path);
            list.push_back({{"id", id},
                            {"dims", hdr.geometry.dims},
                            {"spacing", hdr.geometry.spacing},
                            {"previewable", s.liver_path.has_value()}});
        }
        send_json(res, list);
    }));

    h.Get(R"(/scans/([^/]+)/slice)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_slice(req, res, *scan_ct(req.matches[1]));
    }));

    h.Get("/config", guarded([this](const httplib::Request&, httplib::Response& res) { send_json(res, json(cfg_)); }));

    h.Post("/preview", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = body_json(req);
        if (!body.is_object()) throw HttpError{400, "format", "preview request must be a JSON object"};
        if (!body.contains("scan_id")) throw HttpError{400, "argument", "scan_id is required"};
        const std::string scan_id = body.at("scan_id").get<std::string>();
        std::vector<TumorSpec> specs;
        if (body.contains("specs")) {
            if (!body.at("specs").is_array()) throw HttpError{400, "format", "specs must be an array"};
            specs = body.at("specs").get<std::vector<TumorSpec>>();
        } else if (body.contains("spec")) {
            specs.push_back(body.at("spec").get<TumorSpec>());
        } else {
            throw HttpError{400, "argument", "spec or specs is required"};
        }
        if (specs.empty()) throw HttpError{400, "argument", "at least one tumor spec is required"};
        for (auto& s : specs) s.validate();
        const uint64_t seed = body.value("seed", uint64_t{0});
        scan_prepared(scan_id);  // 404 / 400 before queuing work

        const json canonical = {{"scan_id", scan_id}, {"seed", seed}, {"specs", specs}};
        const std::string id = fnv1a_hex(canonical.dump());
        {
            std::lock_guard lock(previews_mutex_);
            preview_requests_.emplace(id, canonical);
        }
        std::shared_ptr<const SynthesisResult> result;
        try {
            result = preview(id);
        } catch (...) {
            std::lock_guard lock(previews_mutex_);
            preview_requests_.erase(id);
            throw;
        }
        const std::string axis = body.value("axis", std::string("axial"));
        const int a = static_cast<int>(parse_axis(axis));
        const int index = body.value("index", result->ct.dims()[a] / 2);
        const double wc = body.value("wc", 40.0), ww = body.value("ww", 400.0);
        std::ostringstream q;
        q << "?axis=" << axis << "&index=" << index << "&wc=" << wc << "&ww=" << ww;
        send_json(res, {{"preview_id", id},
                        {"slice_url", "/previews/" + id + "/slice" + q.str()},
                        {"base_slice_url", "/scans/" + scan_id + "/slice" + q.str()},
                        {"provenance", result->provenance}});
    }));

    h.Get(R"(/previews/([^/]+)/slice)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_slice(req, res, preview(req.matches[1])->ct);
    }));

    h.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = body_json(req);
        auto s = std::make_shared<Session>();
        if (body.contains("scans")) {
            s->scans = body.at("scans").get<std::vector<std::string>>();
        } else {
            for (const auto& [id, truth] : truth_) s->scans.push_back(id);
        }
        if (s->scans.empty()) throw HttpError{400, "argument", "a session needs at least one scan"};
        for (const auto& id : s->scans) {
            if (!truth_.count(id)) throw HttpError{400, "argument", "scan '" + id + "' is not in the answer key"};
            if (s->judgments.count(id)) throw HttpError{400, "argument", "scan '" + id + "' listed twice"};
            s->judgments[id] = Judgment::Unanswered;
        }
        {
            std::lock_guard lock(sessions_mutex_);
            do s->id = random_id();
            while (sessions_.count(s->id));
            append_log(*s, {{"op", "create"}, {"scans", s->scans}});
            sessions_[s->id] = s;
        }
        send_json(res, {{"session_id", s->id}, {"scans", s->scans}}, 201);
    }));

    h.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        std::lock_guard lock(s->mutex);
        json scans = json::array();
        for (const auto& id : s->scans) scans.push_back({{"scan_id", id}, {"judgment", to_string(s->judgments.at(id))}});
        send_json(res, {{"session_id", s->id}, {"scans", scans}, {"closed", s->closed}, {"complete", s->complete()}});
    }));

    h.Post(R"(/sessions/([^/]+)/judge)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        const json body = body_json(req);
        const std::string scan_id = body.value("scan_id", std::string{});
        Judgment j;
        try {
            j = parse_judgment(body.value("judgment", std::string{}));
        } catch (const ArgumentError& e) {
            throw HttpError{400, "argument", e.what()};
        }
        std::lock_guard lock(s->mutex);
        const auto it = s->judgments.find(scan_id);
        if (it == s->judgments.end()) throw HttpError{404, "not-found", "scan '" + scan_id + "' is not in this session"};
        if (s->closed) throw HttpError{409, "conflict", "session is closed"};
        if (it->second != Judgment::Unanswered)
            throw HttpError{409, "conflict", "scan '" + scan_id + "' has already been judged"};
        append_log(*s, {{"op", "judge"}, {"scan_id", scan_id}, {"judgment", to_string(j)}});
        it->second = j;
        std::size_t remaining = 0;
        for (const auto& [id, v] : s->judgments) remaining += v == Judgment::Unanswered;
        send_json(res, {{"scan_id", scan_id}, {"remaining", remaining}, {"complete", s->complete()}});
    }));

    h.Post(R"(/sessions/([^/]+)/close)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        std::lock_guard lock(s->mutex);
        if (!s->closed) {
            append_log(*s, {{"op", "close"}});
            s->closed = true;
        }
        send_json(res, {{"session_id", s->id}, {"closed", true}});
    }));

    h.Get(R"(/sessions/([^/]+)/report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        std::lock_guard lock(s->mutex);
        if (!s->complete()) throw HttpError{409, "conflict", "session is not complete"};
        send_json(res, report(*s));
    }));
}

}  // namespace tumorsynth
