#include "tumorsynth/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tumorsynth/serialization.hpp"

namespace tumorsynth {

const std::vector<SizePreset>& default_size_presets() {
    static const std::vector<SizePreset> presets = {
        {"tiny", 4.0, {0.5, 1.0}, 3, 10},
        {"small", 8.0, {1.0, 2.0}, 3, 10},
        {"medium", 16.0, {3.0, 6.0}, 2, 5},
        {"large", 32.0, {5.0, 10.0}, 1, 3},
    };
    return presets;
}

namespace {
void check(bool ok, const std::string& what) {
    if (!ok) throw ArgumentError("invalid configuration: " + what);
}
bool finite_range(const Range& r) { return std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi; }
}  // namespace

void GenConfig::validate() const {
    check(std::isfinite(b), "b must be finite");
    check(sigma_a_base >= 0.0 && sigma_a_slope >= 0.0, "sigma_a coefficients must be non-negative");
    check(sigma_b >= 0.0, "sigma_b must be non-negative");
    check(std::isfinite(mu_t_min) && std::isfinite(mu_t_margin), "mu_t bounds must be finite");
    check(finite_range(eta) && eta.lo >= 1.0, "eta range must be non-empty and >= 1");
    check(finite_range(sigma_c) && sigma_c.lo > 0.0, "sigma_c range must be non-empty and positive");
    check(finite_range(half_axis_factor) && half_axis_factor.lo > 0.0, "half_axis_factor range must be positive");
    check(elastic_alpha0 >= 0.0 && elastic_min_smoothing > 0.0, "elastic constants must be positive");
    check(gamma_max_factor > 0.0, "gamma_max_factor must be positive");
    check(intensity >= 0.0 && intensity <= 100.0, "intensity I must be in [0, 100]");
    check(lb >= 0.0 && lb < ub && ub <= 1.0, "capsule bounds need 0 <= lb < ub <= 1");
    check(sigma_d >= 0.0, "sigma_d must be non-negative");
    check(d >= 0.0, "d must be non-negative");
    check(max_attempts >= 1, "max_attempts must be >= 1");
    check(label_threshold > 0.0 && label_threshold <= 1.0, "label_threshold must be in (0, 1]");
    check(!presets.empty(), "at least one size preset is required");
    for (const auto& p : presets) {
        check(!p.name.empty() && p.name != "mix", "preset names must be non-empty and not 'mix'");
        check(p.radius_mm > 0.0, "preset " + p.name + " radius must be positive");
        check(finite_range(p.sigma_e) && p.sigma_e.lo >= 0.0, "preset " + p.name + " sigma_e range invalid");
        check(p.count_min >= 1 && p.count_min <= p.count_max, "preset " + p.name + " count range invalid");
    }
}

const SizePreset& GenConfig::preset(const std::string& name) const {
    for (const auto& p : presets)
        if (p.name == name) return p;
    throw ArgumentError("unknown size preset '" + name + "'");
}

bool is_preset_name(const std::string& name, const GenConfig& cfg) {
    if (name == "mix") return true;
    for (const auto& p : cfg.presets)
        if (p.name == name) return true;
    return false;
}

void TumorSpec::validate() const {
    auto fin = [](double v) { return std::isfinite(v); };
    if (!(radius_mm > 0.0) || !fin(radius_mm)) throw ArgumentError("tumor radius must be positive");
    for (double a : half_axes_mm)
        if (!(a > 0.0) || !fin(a)) throw ArgumentError("tumor half-axes must be positive");
    if (!fin(mu_t)) throw ArgumentError("mu_t must be finite");
    if (!(eta >= 1.0) || !fin(eta)) throw ArgumentError("eta must be >= 1");
    if (!(sigma_c > 0.0) || !fin(sigma_c)) throw ArgumentError("sigma_c must be positive");
    if (!(sigma_e >= 0.0) || !fin(sigma_e)) throw ArgumentError("sigma_e must be non-negative");
    if (!(sigma_p_scale >= 0.0) || !fin(sigma_p_scale)) throw ArgumentError("sigma_p_scale must be non-negative");
    if (!(intensity >= 0.0 && intensity <= 100.0)) throw ArgumentError("intensity I must be in [0, 100]");
    if (!(capsule_d >= 0.0) || !fin(capsule_d)) throw ArgumentError("capsule d must be non-negative");
    if (!(lb >= 0.0 && lb < ub && ub <= 1.0)) throw ArgumentError("capsule bounds need 0 <= lb < ub <= 1");
}

std::vector<std::string> TumorSpec::range_warnings(const GenConfig& cfg, double mu_p) const {
    std::vector<std::string> w;
    const double mu_hi = mu_p - cfg.mu_t_margin;
    if (mu_t < cfg.mu_t_min || mu_t > std::max(cfg.mu_t_min, mu_hi))
        w.push_back("mu_t " + std::to_string(mu_t) + " outside sampling range [" + std::to_string(cfg.mu_t_min) +
                    ", " + std::to_string(mu_hi) + "]");
    if (eta < cfg.eta.lo || eta > cfg.eta.hi) w.push_back("eta " + std::to_string(eta) + " outside sampling range");
    if (sigma_c < cfg.sigma_c.lo || sigma_c > cfg.sigma_c.hi)
        w.push_back("sigma_c " + std::to_string(sigma_c) + " outside sampling range");
    for (double a : half_axes_mm)
        if (a < cfg.half_axis_factor.lo * radius_mm - 1e-9 || a > cfg.half_axis_factor.hi * radius_mm + 1e-9) {
            w.push_back("half-axis " + std::to_string(a) + " outside sampling range");
            break;
        }
    return w;
}

// ---------------------------------------------------------------- JSON

void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.lo, r.hi}); }
void from_json(const nlohmann::json& j, Range& r) {
    if (!j.is_array() || j.size() != 2) throw ArgumentError("a range must be a two-element array");
    r.lo = j[0].get<double>();
    r.hi = j[1].get<double>();
}

void to_json(nlohmann::json& j, const SizePreset& p) {
    j = {{"name", p.name}, {"radius_mm", p.radius_mm}, {"sigma_e", p.sigma_e}, {"count", {p.count_min, p.count_max}}};
}
void from_json(const nlohmann::json& j, SizePreset& p) {
    p.name = j.at("name").get<std::string>();
    p.radius_mm = j.at("radius_mm").get<double>();
    p.sigma_e = j.at("sigma_e").get<Range>();
    const auto& c = j.at("count");
    if (!c.is_array() || c.size() != 2) throw ArgumentError("preset count must be [min, max]");
    p.count_min = c[0].get<int>();
    p.count_max = c[1].get<int>();
}

#define TS_FIELDS(X)          \
    X(b)                      \
    X(sigma_a_base)           \
    X(sigma_a_slope)          \
    X(sigma_b)                \
    X(mu_t_min)               \
    X(mu_t_margin)            \
    X(eta)                    \
    X(sigma_c)                \
    X(half_axis_factor)       \
    X(elastic_alpha0)         \
    X(elastic_min_smoothing)  \
    X(gamma_max_factor)       \
    X(intensity)              \
    X(lb)                     \
    X(ub)                     \
    X(sigma_d)                \
    X(d)                      \
    X(mass_effect)            \
    X(capsule)                \
    X(max_attempts)           \
    X(label_threshold)        \
    X(shared_mu_t)            \
    X(presets)

void to_json(nlohmann::json& j, const GenConfig& c) {
    j = nlohmann::json::object();
#define TS_PUT(name) j[#name] = c.name;
    TS_FIELDS(TS_PUT)
#undef TS_PUT
}

void from_json(const nlohmann::json& j, GenConfig& c) {
    if (!j.is_object()) throw ArgumentError("configuration must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        bool known = false;
#define TS_GET(name)                                             \
    if (key == #name) {                                          \
        c.name = it.value().get<decltype(GenConfig::name)>();    \
        known = true;                                            \
    }
        TS_FIELDS(TS_GET)
#undef TS_GET
        if (!known) throw ArgumentError("unknown configuration key '" + key + "'");
    }
}
#undef TS_FIELDS

void to_json(nlohmann::json& j, const TumorSpec& s) {
    j = nlohmann::json{{"stream_index", s.stream_index},
                       {"radius_mm", s.radius_mm},
                       {"half_axes_mm", s.half_axes_mm},
                       {"mu_t", s.mu_t},
                       {"eta", s.eta},
                       {"sigma_c", s.sigma_c},
                       {"sigma_e", s.sigma_e},
                       {"sigma_p_scale", s.sigma_p_scale},
                       {"intensity", s.intensity},
                       {"capsule_d", s.capsule_d},
                       {"lb", s.lb},
                       {"ub", s.ub},
                       {"mass_effect", s.mass_effect},
                       {"capsule", s.capsule},
                       {"render", s.render},
                       {"preset", s.preset},
                       {"attempts", s.attempts}};
    j["center"] = s.center ? nlohmann::json(*s.center) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TumorSpec& s) {
    if (!j.is_object()) throw ArgumentError("a tumor spec must be a JSON object");
    static const char* known[] = {"stream_index", "center", "radius_mm", "half_axes_mm", "mu_t",
                                  "eta", "sigma_c", "sigma_e", "sigma_p_scale", "intensity",
                                  "capsule_d", "lb", "ub", "mass_effect", "capsule",
                                  "render", "preset", "attempts"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
            throw ArgumentError("unknown tumor spec key '" + it.key() + "'");
    auto opt = [&](const char* k, auto& field) {
        if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
    };
    opt("stream_index", s.stream_index);
    if (j.contains("center") && !j.at("center").is_null()) s.center = j.at("center").get<Index3>();
    opt("radius_mm", s.radius_mm);
    if (j.contains("half_axes_mm")) s.half_axes_mm = j.at("half_axes_mm").get<Vec3>();
    else s.half_axes_mm = {s.radius_mm, s.radius_mm, s.radius_mm};
    opt("mu_t", s.mu_t);
    opt("eta", s.eta);
    opt("sigma_c", s.sigma_c);
    opt("sigma_e", s.sigma_e);
    opt("sigma_p_scale", s.sigma_p_scale);
    opt("intensity", s.intensity);
    opt("capsule_d", s.capsule_d);
    opt("lb", s.lb);
    opt("ub", s.ub);
    opt("mass_effect", s.mass_effect);
    opt("capsule", s.capsule);
    opt("render", s.render);
    opt("preset", s.preset);
    opt("attempts", s.attempts);
}

void to_json(nlohmann::json& j, const SkippedTumor& s) {
    j = {{"stream_index", s.stream_index}, {"attempts", s.attempts}};
}
void from_json(const nlohmann::json& j, SkippedTumor& s) {
    s.stream_index = j.at("stream_index").get<uint64_t>();
    s.attempts = j.at("attempts").get<int>();
}

void to_json(nlohmann::json& j, const ProvenanceRecord& p) {
    j = nlohmann::json{{"scan_id", p.scan_id},       {"seed", p.seed},
                       {"preset", p.preset},         {"resolved_preset", p.resolved_preset},
                       {"mu_p", p.mu_p},             {"sigma_p", p.sigma_p},
                       {"liver_mean", p.liver_mean}, {"tumors", p.tumors},
                       {"skipped", p.skipped},       {"warnings", p.warnings}};
}
void from_json(const nlohmann::json& j, ProvenanceRecord& p) {
    p.scan_id = j.value("scan_id", std::string{});
    p.seed = j.at("seed").get<uint64_t>();
    p.preset = j.value("preset", std::string{});
    p.resolved_preset = j.value("resolved_preset", std::string{});
    p.mu_p = j.value("mu_p", 0.0);
    p.sigma_p = j.value("sigma_p", 0.0);
    p.liver_mean = j.value("liver_mean", 0.0);
    p.tumors = j.at("tumors").get<std::vector<TumorSpec>>();
    if (j.contains("skipped")) p.skipped = j.at("skipped").get<std::vector<SkippedTumor>>();
    if (j.contains("warnings")) p.warnings = j.at("warnings").get<std::vector<std::string>>();
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

GenConfig load_config(const std::filesystem::path& path) {
    GenConfig cfg;
    try {
        from_json(load_json(path), cfg);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid configuration in " + path.string() + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace tumorsynth
