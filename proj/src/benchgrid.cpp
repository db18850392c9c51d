#include "tumorsynth/benchgrid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "tumorsynth/distance.hpp"
#include "tumorsynth/metrics.hpp"
#include "tumorsynth/nifti.hpp"
#include "tumorsynth/placement.hpp"
#include "tumorsynth/rng.hpp"
#include "tumorsynth/serialization.hpp"

namespace tumorsynth {

namespace {

constexpr uint64_t kInDistributionStream = 6;
constexpr uint64_t kVariantStream = 7;

struct Welford {
    std::size_t n = 0;
    double mean = 0.0, m2 = 0.0;
    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    MomentStats stats() const { return {mean, n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0}; }
};

double axis_spread(const TumorSpec& s) {
    const auto [lo, hi] = std::minmax({s.half_axes_mm[0], s.half_axes_mm[1], s.half_axes_mm[2]});
    return (hi - lo) / (2.0 * s.radius_mm);
}

double normal_cdf(double k) { return 0.5 * std::erfc(-k / std::sqrt(2.0)); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// Per-scan data for resolving centers.
class CenterPicker {
public:
    explicit CenterPicker(const PreparedScan& scan) : liver_(scan.liver), index_(scan.vessels) {
        const Geometry& g = scan.liver.geometry();
        const Box bbox = bounding_box(scan.liver, [](uint8_t v) { return v == kLiver; });
        if (bbox.empty()) throw ArgumentError("scan " + scan.scan_id + " has no liver voxels");
        box_ = bbox.grown({1, 1, 1}).clipped_to(g.dims);
        const Geometry sub = sub_geometry(g, box_);
        std::vector<bool> sites(sub.voxel_count());
        std::size_t i = 0;
        for (int z = box_.lo[2]; z < box_.hi[2]; ++z)
            for (int y = box_.lo[1]; y < box_.hi[1]; ++y)
                for (int x = box_.lo[0]; x < box_.hi[0]; ++x, ++i)
                    sites[i] = scan.liver(x, y, z) != kLiver || scan.vessels(x, y, z) != 0;
        const auto d2 = squared_distance_transform(sites, sub);
        i = 0;
        for (int z = box_.lo[2]; z < box_.hi[2]; ++z)
            for (int y = box_.lo[1]; y < box_.hi[1]; ++y)
                for (int x = box_.lo[0]; x < box_.hi[0]; ++x, ++i)
                    if (!sites[i]) liver_points_.push_back({d2[i], {x, y, z}});
        std::sort(liver_points_.begin(), liver_points_.end(), [&](const Point& a, const Point& b) {
            if (a.d2 != b.d2) return a.d2 < b.d2;
            return liver_.index(a.p[0], a.p[1], a.p[2]) < liver_.index(b.p[0], b.p[1], b.p[2]);
        });
    }

    bool feasible(double radius_mm) const {
        const Index3 r = voxel_radii(radius_mm, liver_.spacing());
        return std::any_of(liver_points_.begin(), liver_points_.end(),
                           [&](const Point& p) { return index_.collision_free(p.p, r); });
    }

    /// Largest radius in [lo, hi] with a collision-free center, to 0.01 mm.
    double max_feasible_radius(double lo, double hi) const {
        if (!feasible(lo)) return 0.0;
        while (hi - lo > 0.01) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        return lo;
    }

    /// Collision-free center whose distance to the nearest vessel or liver
    /// boundary sits at quantile q among all collision-free centers.
    Index3 pick(double radius_mm, double q) const {
        const Index3 r = voxel_radii(radius_mm, liver_.spacing());
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < liver_points_.size(); ++i)
            if (index_.collision_free(liver_points_[i].p, r)) ok.push_back(i);
        if (ok.empty()) throw PlacementExhausted(0);
        const auto rank = static_cast<std::size_t>(std::llround(std::clamp(q, 0.0, 1.0) * static_cast<double>(ok.size() - 1)));
        return liver_points_[ok[rank]].p;
    }

private:
    struct Point {
        double d2;
        Index3 p;
    };
    const LabelVolume& liver_;
    CollisionIndex index_;
    Box box_;
    std::vector<Point> liver_points_;
};

struct Resolved {
    TumorSpec spec;
    std::vector<std::string> annotations;
};

double clamp_annotated(double v, double lo, double hi, const std::string& name, std::vector<std::string>& notes) {
    const double c = std::clamp(v, lo, hi);
    if (c != v) notes.push_back(name + " clamped from " + fmt(v) + " to " + fmt(c));
    return c;
}

Resolved resolve_variant(const InDistribution& id, const GenConfig& cfg, const CenterPicker& picker,
                         double r_min, double r_max, const std::string& dim, double k) {
    Resolved out;
    auto& notes = out.annotations;
    double radius = std::exp(id.log_radius.mean);
    double spread = id.axis_spread.mean;
    double rel_sigma_e = id.relative_sigma_e.mean;
    double eta = id.eta.mean;
    double sp_scale = 1.0;
    double mu_t = id.mu_t.mean;
    double location_k = 0.0;

    if (dim == "shape") {
        rel_sigma_e = clamp_annotated(id.relative_sigma_e.mean + k * id.relative_sigma_e.std, 0.0, INFINITY,
                                      "relative sigma_e", notes);
        spread = clamp_annotated(id.axis_spread.mean + k * id.axis_spread.std, 0.0, 0.9, "axis spread", notes);
    } else if (dim == "size") {
        radius = std::exp(id.log_radius.mean + k * id.log_radius.std);
    } else if (dim == "texture") {
        eta = clamp_annotated(id.eta.mean + k * id.eta.std, 1.0, INFINITY, "eta", notes);
        const double rel = id.eta.mean > 0.0 ? id.eta.std / id.eta.mean : 0.0;
        sp_scale = clamp_annotated(1.0 + k * rel, 0.0, INFINITY, "sigma_p scale", notes);
    } else if (dim == "intensity") {
        mu_t = id.mu_t.mean + k * id.mu_t.std;
    } else if (dim == "location") {
        location_k = k;
    } else {
        throw ArgumentError("unknown grid dimension '" + dim + "'");
    }
    radius = clamp_annotated(radius, r_min, std::max(r_min, r_max), "radius_mm", notes);

    TumorSpec& s = out.spec;
    s.stream_index = 0;
    s.radius_mm = radius;
    s.half_axes_mm = {radius * (1.0 + spread), radius, radius * (1.0 - spread)};
    s.sigma_e = rel_sigma_e * radius;
    s.sigma_c = id.sigma_c.mean;
    s.eta = eta;
    s.sigma_p_scale = sp_scale;
    s.mu_t = mu_t;
    s.intensity = cfg.intensity;
    s.capsule_d = cfg.d;
    s.lb = cfg.lb;
    s.ub = cfg.ub;
    s.mass_effect = cfg.mass_effect;
    s.capsule = cfg.capsule;
    s.preset = "grid";
    s.center = picker.pick(radius, normal_cdf(location_k));
    s.validate();
    return out;
}

std::string level_tag(std::size_t index) { return "L" + std::to_string(index); }

}  // namespace

InDistribution measure_in_distribution(const ParenchymaStats& stats, const GenConfig& cfg, uint64_t seed,
                                       std::size_t draws) {
    if (draws == 0) throw ArgumentError("in-distribution draws must be positive");
    Welford r, lr, se, rse, sp, sc, eta, mt;
    InDistribution out;
    for (std::size_t i = 0; i < draws; ++i) {
        for (const auto& s : sample_tumor_specs("mix", derive_seed(seed, i), stats, cfg)) {
            r.add(s.radius_mm);
            lr.add(std::log(s.radius_mm));
            se.add(s.sigma_e);
            rse.add(s.sigma_e / s.radius_mm);
            sp.add(axis_spread(s));
            sc.add(s.sigma_c);
            eta.add(s.eta);
            mt.add(s.mu_t);
        }
    }
    out.draws = draws;
    out.tumors = r.n;
    out.radius_mm = r.stats();
    out.log_radius = lr.stats();
    out.sigma_e = se.stats();
    out.relative_sigma_e = rse.stats();
    out.axis_spread = sp.stats();
    out.sigma_c = sc.stats();
    out.eta = eta.stats();
    out.mu_t = mt.stats();
    return out;
}

GridManifest plan_grid(const std::vector<PreparedScan>& scans, const GenConfig& cfg, const GridOptions& opt) {
    cfg.validate();
    if (scans.empty()) throw ArgumentError("grid needs at least one scan");
    if (opt.levels.empty()) throw ArgumentError("grid needs at least one level");
    if (opt.dimensions.empty()) throw ArgumentError("grid needs at least one dimension");
    for (double k : opt.levels)
        if (!std::isfinite(k)) throw ArgumentError("grid levels must be finite");
    for (const auto& d : opt.dimensions)
        if (std::find(grid_dimensions().begin(), grid_dimensions().end(), d) == grid_dimensions().end())
            throw ArgumentError("unknown grid dimension '" + d + "'");

    GridManifest m;
    m.seed = opt.seed;
    m.dimensions = opt.dimensions;
    m.levels = opt.levels;
    for (std::size_t si = 0; si < scans.size(); ++si) {
        const PreparedScan& scan = scans[si];
        const std::string scan_id = scan.scan_id.empty() ? "scan" + std::to_string(si) : scan.scan_id;
        for (const auto& e : m.scans)
            if (e.scan_id == scan_id) throw ArgumentError("duplicate scan id '" + scan_id + "'");
        GridScanEntry entry;
        entry.scan_id = scan_id;
        entry.mu_p = scan.stats.mu_p;
        entry.sigma_p = scan.stats.sigma_p;
        entry.in_distribution = measure_in_distribution(scan.stats, cfg, derive_seed(opt.seed, si, kInDistributionStream),
                                                        opt.in_distribution_draws);
        const InDistribution& id = entry.in_distribution;
        m.scans.push_back(entry);

        const CenterPicker picker(scan);
        const Vec3& sp = scan.liver.spacing();
        const double r_min = 2.0 * std::max({sp[0], sp[1], sp[2]});
        double r_max = INFINITY;
        double wanted = std::exp(id.log_radius.mean);
        for (double k : opt.levels) wanted = std::max(wanted, std::exp(id.log_radius.mean + k * id.log_radius.std));
        if (!picker.feasible(wanted)) r_max = picker.max_feasible_radius(r_min, wanted);
        if (r_max <= 0.0) throw PlacementExhausted(0);

        const uint64_t variant_seed = derive_seed(opt.seed, si, kVariantStream);
        for (const auto& dim : opt.dimensions)
            for (std::size_t li = 0; li < opt.levels.size(); ++li) {
                Resolved r = resolve_variant(id, cfg, picker, r_min, r_max, dim, opt.levels[li]);
                GridVariant v;
                v.id = scan_id + "-" + dim + "-" + level_tag(li);
                v.scan_id = scan_id;
                v.dimension = dim;
                v.level_index = li;
                v.level = opt.levels[li];
                v.seed = variant_seed;
                v.spec = std::move(r.spec);
                v.annotations = std::move(r.annotations);
                v.ct_path = "volumes/" + v.id + "_ct.nii.gz";
                v.label_path = "volumes/" + v.id + "_label.nii.gz";
                m.variants.push_back(std::move(v));
            }
    }
    return m;
}

SynthesisResult synthesize_variant(const PreparedScan& scan, const GridVariant& v, const GenConfig& cfg) {
    SynthesisResult r = synthesize_with_spec(scan, {v.spec}, v.seed, cfg);
    r.provenance.scan_id = v.scan_id;
    r.provenance.preset = "grid";
    r.provenance.resolved_preset = v.dimension + "/" + level_tag(v.level_index);
    return r;
}

GridManifest build_grid(const std::vector<PreparedScan>& scans, const GenConfig& cfg, const GridOptions& opt) {
    GridManifest m = plan_grid(scans, cfg, opt);
    std::vector<std::size_t> scan_of(m.variants.size());
    for (std::size_t i = 0; i < m.variants.size(); ++i)
        for (std::size_t s = 0; s < m.scans.size(); ++s)
            if (m.scans[s].scan_id == m.variants[i].scan_id) scan_of[i] = s;

    if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir / "volumes");

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= m.variants.size()) return;
            try {
                const GridVariant& v = m.variants[i];
                const SynthesisResult r = synthesize_variant(scans[scan_of[i]], v, cfg);
                if (!opt.out_dir.empty()) {
                    nifti::save(r.ct, opt.out_dir / v.ct_path);
                    nifti::save(r.labels, opt.out_dir / v.label_path);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = m.variants.size();
                return;
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(m.variants.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    if (!opt.out_dir.empty()) save_json(nlohmann::json(m), opt.out_dir / "manifest.json");
    return m;
}

GridEvaluation evaluate_grid(const GridManifest& manifest, const std::filesystem::path& manifest_dir,
                             const std::filesystem::path& predictions_dir) {
    std::vector<std::string> missing;
    std::vector<std::filesystem::path> pred_paths;
    for (const auto& v : manifest.variants) {
        std::filesystem::path p = predictions_dir / (v.id + ".nii.gz");
        if (!std::filesystem::exists(p)) p = predictions_dir / (v.id + ".nii");
        if (!std::filesystem::exists(p)) missing.push_back(v.id);
        pred_paths.push_back(p);
    }
    if (!missing.empty()) {
        std::string msg = "missing predictions for " + std::to_string(missing.size()) + " variant(s):";
        for (const auto& id : missing) msg += " " + id;
        throw EvaluationError(msg, missing);
    }

    GridEvaluation out;
    std::map<std::pair<std::string, std::size_t>, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < manifest.variants.size(); ++i) {
        const auto& v = manifest.variants[i];
        const LabelVolume gt = nifti::load_labels(manifest_dir / v.label_path);
        const LabelVolume pred = nifti::load_labels(pred_paths[i]);
        if (!gt.geometry().same_lattice(pred.geometry()))
            throw EvaluationError("prediction for " + v.id + " does not match the ground-truth lattice", {});
        const double score = 100.0 * dsc(BinaryMask::from_labels(gt, kTumor), BinaryMask::from_labels(pred, kTumor));
        out.variant_dsc[v.id] = score;
        auto& cell = sums[{v.dimension, v.level_index}];
        cell.first += score;
        ++cell.second;
    }
    for (const auto& dim : manifest.dimensions)
        for (std::size_t li = 0; li < manifest.levels.size(); ++li) {
            const auto it = sums.find({dim, li});
            if (it == sums.end()) continue;
            out.cells.push_back(
                {dim, li, manifest.levels[li], it->second.first / static_cast<double>(it->second.second), it->second.second});
        }
    return out;
}

std::string format_grid_table(const GridEvaluation& eval) {
    std::vector<std::string> dims;
    std::vector<std::pair<std::size_t, double>> levels;
    for (const auto& c : eval.cells) {
        if (std::find(dims.begin(), dims.end(), c.dimension) == dims.end()) dims.push_back(c.dimension);
        if (std::none_of(levels.begin(), levels.end(), [&](const auto& l) { return l.first == c.level_index; }))
            levels.push_back({c.level_index, c.level});
    }
    std::sort(levels.begin(), levels.end());
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s", "dimension");
    os << buf;
    for (const auto& [li, k] : levels) {
        std::snprintf(buf, sizeof buf, " %9s", ((k >= 0 ? "mu+" : "mu") + fmt(k) + "s").c_str());
        os << buf;
    }
    os << "\n";
    for (const auto& d : dims) {
        std::snprintf(buf, sizeof buf, "%-10s", d.c_str());
        os << buf;
        for (const auto& [li, k] : levels) {
            const auto it = std::find_if(eval.cells.begin(), eval.cells.end(),
                                         [&](const GridCell& c) { return c.dimension == d && c.level_index == li; });
            if (it == eval.cells.end())
                std::snprintf(buf, sizeof buf, " %9s", "-");
            else
                std::snprintf(buf, sizeof buf, " %9.2f", it->mean_dsc);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

namespace {
nlohmann::json moments(const MomentStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }
MomentStats moments(const nlohmann::json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }
}  // namespace

void to_json(nlohmann::json& j, const GridManifest& m) {
    j = nlohmann::json::object();
    j["seed"] = m.seed;
    j["dimensions"] = m.dimensions;
    j["levels"] = m.levels;
    j["scans"] = nlohmann::json::array();
    for (const auto& s : m.scans) {
        const auto& d = s.in_distribution;
        j["scans"].push_back({{"scan_id", s.scan_id},
                              {"mu_p", s.mu_p},
                              {"sigma_p", s.sigma_p},
                              {"in_distribution",
                               {{"draws", d.draws},
                                {"tumors", d.tumors},
                                {"radius_mm", moments(d.radius_mm)},
                                {"log_radius", moments(d.log_radius)},
                                {"sigma_e", moments(d.sigma_e)},
                                {"relative_sigma_e", moments(d.relative_sigma_e)},
                                {"axis_spread", moments(d.axis_spread)},
                                {"sigma_c", moments(d.sigma_c)},
                                {"eta", moments(d.eta)},
                                {"mu_t", moments(d.mu_t)}}}});
    }
    j["variants"] = nlohmann::json::array();
    for (const auto& v : m.variants)
        j["variants"].push_back({{"id", v.id},
                                 {"scan_id", v.scan_id},
                                 {"dimension", v.dimension},
                                 {"level_index", v.level_index},
                                 {"level", v.level},
                                 {"seed", v.seed},
                                 {"spec", v.spec},
                                 {"annotations", v.annotations},
                                 {"ct_path", v.ct_path},
                                 {"label_path", v.label_path}});
}

void from_json(const nlohmann::json& j, GridManifest& m) {
    try {
        m.seed = j.at("seed").get<uint64_t>();
        m.dimensions = j.at("dimensions").get<std::vector<std::string>>();
        m.levels = j.at("levels").get<std::vector<double>>();
        m.scans.clear();
        for (const auto& s : j.at("scans")) {
            GridScanEntry e;
            e.scan_id = s.at("scan_id").get<std::string>();
            e.mu_p = s.at("mu_p").get<double>();
            e.sigma_p = s.at("sigma_p").get<double>();
            const auto& d = s.at("in_distribution");
            e.in_distribution.draws = d.at("draws").get<std::size_t>();
            e.in_distribution.tumors = d.at("tumors").get<std::size_t>();
            e.in_distribution.radius_mm = moments(d.at("radius_mm"));
            e.in_distribution.log_radius = moments(d.at("log_radius"));
            e.in_distribution.sigma_e = moments(d.at("sigma_e"));
            e.in_distribution.relative_sigma_e = moments(d.at("relative_sigma_e"));
            e.in_distribution.axis_spread = moments(d.at("axis_spread"));
            e.in_distribution.sigma_c = moments(d.at("sigma_c"));
            e.in_distribution.eta = moments(d.at("eta"));
            e.in_distribution.mu_t = moments(d.at("mu_t"));
            m.scans.push_back(e);
        }
        m.variants.clear();
        for (const auto& v : j.at("variants")) {
            GridVariant g;
            g.id = v.at("id").get<std::string>();
            g.scan_id = v.at("scan_id").get<std::string>();
            g.dimension = v.at("dimension").get<std::string>();
            g.level_index = v.at("level_index").get<std::size_t>();
            g.level = v.at("level").get<double>();
            g.seed = v.at("seed").get<uint64_t>();
            g.spec = v.at("spec").get<TumorSpec>();
            g.annotations = v.at("annotations").get<std::vector<std::string>>();
            g.ct_path = v.at("ct_path").get<std::string>();
            g.label_path = v.at("label_path").get<std::string>();
            m.variants.push_back(std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid grid manifest: ") + e.what());
    }
}

}  // namespace tumorsynth
